#include "densecode/codec.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>

#include <omp.h>

namespace densecode {

namespace {

constexpr std::size_t kMaxArity = 7;

void check_arity(std::size_t n) {
    if (n == 0) throw std::invalid_argument("arity must be positive");
    if (n > kMaxArity) throw std::invalid_argument("arity too large for idempotent map enumeration");
}

struct MapTable {
    std::vector<IdempotentMap> maps;
    std::vector<std::int32_t> by_rank;  // rank -> index into maps, or -1
};

const MapTable& map_table(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<MapTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        check_arity(n);
        auto t = std::make_unique<MapTable>();
        const std::uint64_t K = ipow(n, n);
        t->by_rank.assign(K, -1);
        for (std::uint64_t r = 0; r < K; ++r) {
            auto q = map_from_rank(r, n);
            if (!is_idempotent(q)) continue;
            t->by_rank[r] = static_cast<std::int32_t>(t->maps.size());
            t->maps.push_back(IdempotentMap{std::move(q)});
        }
        slot = std::move(t);
    }
    return *slot;
}

std::uint64_t tuple_max(const Tuple& t) {
    std::uint64_t m = 0;
    for (auto v : t) m = std::max(m, v);
    return m;
}

// Visit tuples over [0, mm] of arity n with max exactly mm, in code order.
template <class F>
void for_each_in_block(std::size_t n, std::uint64_t mm, F&& f) {
    Tuple t(n, 0);
    for (;;) {
        bool has = false;
        for (auto v : t)
            if (v == mm) has = true;
        if (has) f(t);
        std::size_t i = n;
        while (i > 0) {
            --i;
            if (t[i] < mm) {
                ++t[i];
                for (std::size_t j = i + 1; j < n; ++j) t[j] = 0;
                break;
            }
            if (i == 0) return;
        }
        if (n == 0) return;
    }
}

}  // namespace

std::uint64_t IdempotentMap::rank() const {
    std::uint64_t r = 0, p = 1;
    for (auto v : q) {
        r += v * p;
        p *= q.size();
    }
    return r;
}

bool is_idempotent(const std::vector<std::uint8_t>& q) {
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] >= q.size()) return false;
        if (q[q[i]] != q[i]) return false;
    }
    return true;
}

std::vector<std::uint8_t> map_from_rank(std::uint64_t rank, std::size_t n) {
    std::vector<std::uint8_t> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = static_cast<std::uint8_t>(rank % n);
        rank /= n;
    }
    if (rank != 0) throw std::invalid_argument("map rank out of range");
    return q;
}

const std::vector<IdempotentMap>& idempotent_maps(std::size_t n) { return map_table(n).maps; }

std::uint64_t code_index(const Tuple& tau, std::uint64_t qrank, std::size_t n) {
    if (tau.size() != n) throw std::invalid_argument("arity mismatch");
    const std::uint64_t K = ipow(n, n);
    if (qrank >= K) throw std::invalid_argument("map rank out of range");
    const std::uint64_t c = code_tuple(tau);
    if (c > (std::numeric_limits<std::uint64_t>::max() - qrank) / K) throw std::overflow_error("code index overflows 64 bits");
    return c * K + qrank;
}

std::pair<Tuple, std::uint64_t> split_code_index(std::uint64_t s, std::size_t n) {
    const std::uint64_t K = ipow(n, n);
    return {decode_tuple(s / K, n), s % K};
}

std::uint64_t Theta::get(std::uint64_t s) const {
    auto it = std::lower_bound(sup_.begin(), sup_.end(), std::make_pair(s, std::uint64_t{0}));
    if (it != sup_.end() && it->first == s) return it->second;
    return 0;
}

void Theta::set(std::uint64_t s, std::uint64_t mask) {
    if (n_ < 64 && (mask >> n_) != 0) throw std::invalid_argument("mask wider than the arity");
    auto it = std::lower_bound(sup_.begin(), sup_.end(), std::make_pair(s, std::uint64_t{0}));
    if (it != sup_.end() && it->first == s) {
        if (mask == 0) sup_.erase(it);
        else it->second = mask;
    } else if (mask != 0) {
        sup_.insert(it, {s, mask});
    }
}

FiniteBitSet Theta::get_bits(std::uint64_t s) const {
    FiniteBitSet b(n_);
    std::uint64_t m = get(s);
    for (std::size_t i = 0; i < n_; ++i)
        if ((m >> i) & 1) b.set(i);
    return b;
}

void Theta::append_sorted(std::uint64_t s, std::uint64_t mask) {
    if (mask == 0) return;
    if (!sup_.empty() && sup_.back().first >= s) throw std::invalid_argument("entries must be appended in increasing order");
    sup_.emplace_back(s, mask);
}

std::int64_t bnd_b(const std::vector<std::uint8_t>& q, const Tuple& sigma, std::size_t x) {
    if (q.size() != sigma.size()) throw std::invalid_argument("arity mismatch");
    if (x >= q.size()) throw std::invalid_argument("position out of range");
    std::int64_t b = -1;
    for (std::size_t y = 0; y < q.size(); ++y)
        if (q[y] == x) b = std::max(b, static_cast<std::int64_t>(sigma[y]));
    return b;
}

std::vector<std::uint64_t> borrow_bound_plus1(const std::vector<std::uint8_t>& q, const Tuple& sigma) {
    std::vector<std::uint64_t> b(q.size(), 0);
    for (std::size_t y = 0; y < q.size(); ++y) b[q[y]] = std::max(b[q[y]], sigma[y] + 1);
    return b;
}

std::uint64_t encode_one(const Tuple& sigma, const Tuple& tau, const std::vector<std::uint8_t>& q) {
    const std::size_t n = sigma.size();
    if (n == 0) throw std::invalid_argument("arity must be positive");
    if (n > 64) throw std::invalid_argument("arity above 64 is not supported");
    if (tau.size() != n || q.size() != n) throw std::invalid_argument("arity mismatch");
    if (!is_idempotent(q)) return 0;
    const std::uint64_t mt = tuple_max(tau);
    auto bp = borrow_bound_plus1(q, sigma);
    std::uint64_t mask = 0;
    for (std::size_t x = 0; x < n; ++x)
        if (sigma[x] > tau[x] && mt + 1 < bp[x]) mask |= std::uint64_t{1} << x;
    return mask;
}

std::uint64_t encode_at(const Tuple& sigma, std::uint64_t s) {
    const std::size_t n = sigma.size();
    auto [tau, r] = split_code_index(s, n);
    return encode_one(sigma, tau, map_from_rank(r, n));
}

Theta encode(const Tuple& sigma) {
    const std::size_t n = sigma.size();
    check_arity(n);
    const auto& maps = idempotent_maps(n);
    const std::uint64_t K = ipow(n, n);
    const std::uint64_t m = tuple_max(sigma);
    std::vector<std::vector<std::uint64_t>> bounds;
    bounds.reserve(maps.size());
    for (auto& q : maps) bounds.push_back(borrow_bound_plus1(q.q, sigma));
    Theta th(n);
    std::uint64_t code = 0;
    for (std::uint64_t mm = 0; mm < m; ++mm) {
        for_each_in_block(n, mm, [&](const Tuple& tau) {
            for (std::size_t qi = 0; qi < maps.size(); ++qi) {
                std::uint64_t mask = 0;
                for (std::size_t x = 0; x < n; ++x)
                    if (sigma[x] > tau[x] && mm + 1 < bounds[qi][x]) mask |= std::uint64_t{1} << x;
                th.append_sorted(code * K + maps[qi].rank(), mask);
            }
            ++code;
        });
    }
    return th;
}

std::uint64_t ddist(const Theta& a, const Theta& b) {
    if (a.arity() != b.arity()) throw std::invalid_argument("arity mismatch");
    const auto& x = a.support();
    const auto& y = b.support();
    std::size_t i = 0, j = 0;
    std::uint64_t d = 0;
    while (i < x.size() || j < y.size()) {
        std::uint64_t diff;
        if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) diff = x[i++].second;
        else if (i == x.size() || y[j].first < x[i].first) diff = y[j++].second;
        else diff = x[i++].second ^ y[j++].second;
        d = std::max<std::uint64_t>(d, std::popcount(diff));
    }
    return d;
}

std::uint64_t height(const Theta& theta) {
    const std::size_t n = theta.arity();
    if (n == 0) throw std::invalid_argument("arity must be positive");
    const std::uint64_t K = ipow(n, n);
    std::uint64_t expect = 0;
    for (auto& [s, mask] : theta.support()) {
        std::uint64_t mb = tuple_max_of_code(s / K, n);
        if (mb > expect) return expect;
        if (mb == expect) ++expect;
    }
    return expect;
}

Theta truncate(const Theta& theta) {
    const std::size_t n = theta.arity();
    const std::uint64_t K = ipow(n, n);
    const std::uint64_t h = height(theta);
    Theta out(n);
    for (auto& [s, mask] : theta.support()) {
        if (tuple_max_of_code(s / K, n) > h) break;
        out.append_sorted(s, mask);
    }
    return out;
}

Tuple cwise_min(const Tuple& a, const Tuple& b) {
    if (a.size() != b.size()) throw std::invalid_argument("arity mismatch");
    Tuple out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
    return out;
}

namespace {

// Precomputed view of a truncated theta for repeated distance evaluation.
class DecodeProblem {
public:
    explicit DecodeProblem(const Theta& theta) : n_(theta.arity()), maps_(idempotent_maps(n_)) {
        const auto& table = map_table(n_);
        K_ = ipow(n_, n_);
        h_ = densecode::height(theta);
        Qn_ = maps_.size();
        hn_ = ipow(h_, n_);
        dense_.assign(hn_ * Qn_, 0);
        std::vector<std::uint64_t> block_max(h_ + 1, 0);
        std::uint64_t nonidem = 0;
        for (auto& [s, mask] : theta.support()) {
            const std::uint64_t c = s / K_;
            const std::uint64_t mb = tuple_max_of_code(c, n_);
            if (mb > h_) break;
            const std::int32_t qi = table.by_rank[s % K_];
            const std::uint64_t pc = std::popcount(mask);
            if (qi < 0) {
                nonidem = std::max(nonidem, pc);
                continue;
            }
            // block h is empty by definition of the height, so c < h^n
            dense_[c * Qn_ + static_cast<std::uint64_t>(qi)] = mask;
            block_max[mb] = std::max(block_max[mb], pc);
        }
        static_.assign(h_ + 1, nonidem);
        std::uint64_t suffix = nonidem;
        for (std::uint64_t m = h_ + 1; m-- > 0;) {
            suffix = std::max(suffix, block_max[m]);
            static_[m] = suffix;
        }
        // tuples in code order, grouped by block, for all blocks below h
        taus_.reserve(hn_);
        for (std::uint64_t mm = 0; mm < h_; ++mm)
            for_each_in_block(n_, mm, [&](const Tuple& t) { taus_.push_back(t); });
        for (std::uint64_t c = 0; c < h_; ++c) {
            Tuple t(n_, c);
            const_codes_.push_back(code_tuple(t));
        }
        for (std::size_t qi = 0; qi < Qn_; ++qi) {
            bool id = true;
            for (std::size_t x = 0; x < n_; ++x)
                if (maps_[qi].q[x] != x) id = false;
            if (id) id_index_ = qi;
        }
    }

    std::uint64_t height() const { return h_; }
    std::uint64_t candidates() const { return ipow(h_ + 1, n_); }
    std::size_t arity() const { return n_; }

    // Initial guess read from the informative codes (q = id, tau constant).
    Tuple guess() const {
        Tuple g(n_, 0);
        for (std::uint64_t c = 0; c < h_; ++c) {
            std::uint64_t mask = dense_[const_codes_[c] * Qn_ + id_index_];
            for (std::size_t x = 0; x < n_; ++x)
                if ((mask >> x) & 1) ++g[x];
        }
        for (auto& v : g) v = std::min(v, h_);
        return g;
    }

    // Distance from encode(sigma) to the truncated theta, or nullopt when it
    // cannot beat (best_d, best_code).
    std::optional<std::uint64_t> distance(const Tuple& sigma, std::uint64_t code, std::uint64_t best_d,
                                          std::uint64_t best_code) const {
        const std::uint64_t m = tuple_max(sigma);
        std::uint64_t partial = static_[m];
        auto beaten = [&]() { return partial > best_d || (partial == best_d && code > best_code); };
        if (beaten()) return std::nullopt;
        // borrow bounds per map, filled on first use: most candidates fall in the constant-tau prefix
        std::vector<std::vector<std::uint64_t>> bounds(Qn_);
        auto enc = [&](std::size_t ti, std::size_t qi, std::uint64_t mt) {
            const Tuple& tau = taus_[ti];
            auto& bq = bounds[qi];
            if (bq.empty()) bq = borrow_bound_plus1(maps_[qi].q, sigma);
            std::uint64_t mask = 0;
            for (std::size_t x = 0; x < n_; ++x)
                if (sigma[x] > tau[x] && mt + 1 < bq[x]) mask |= std::uint64_t{1} << x;
            return mask;
        };
        for (std::uint64_t c = 0; c < m; ++c) {
            const std::size_t ti = const_codes_[c];
            std::uint64_t d = std::popcount(enc(ti, id_index_, c) ^ dense_[ti * Qn_ + id_index_]);
            partial = std::max(partial, d);
            if (beaten()) return std::nullopt;
        }
        const std::uint64_t limit = ipow(m, n_);
        std::uint64_t mt = 0, block_end = 1;
        for (std::uint64_t ti = 0; ti < limit; ++ti) {
            while (ti >= block_end) {
                ++mt;
                block_end = ipow(mt + 1, n_);
            }
            const std::uint64_t* row = &dense_[ti * Qn_];
            for (std::size_t qi = 0; qi < Qn_; ++qi) {
                std::uint64_t d = std::popcount(enc(ti, qi, mt) ^ row[qi]);
                if (d > partial) {
                    partial = d;
                    if (beaten()) return std::nullopt;
                }
            }
        }
        return partial;
    }

private:
    std::size_t n_;
    const std::vector<IdempotentMap>& maps_;
    std::uint64_t K_ = 1, h_ = 0, Qn_ = 0, hn_ = 0;
    std::size_t id_index_ = 0;
    std::vector<std::uint64_t> dense_;
    std::vector<std::uint64_t> static_;
    std::vector<Tuple> taus_;
    std::vector<std::uint64_t> const_codes_;
};

struct Best {
    std::uint64_t d;
    std::uint64_t code;
    bool better_than(const Best& o) const { return d < o.d || (d == o.d && code < o.code); }
};

}  // namespace

DecodeResult decode_serial(const Theta& theta) {
    DecodeProblem p(theta);
    const Tuple g = p.guess();
    Best best{*p.distance(g, code_tuple(g), std::numeric_limits<std::uint64_t>::max(), 0), code_tuple(g)};
    const std::uint64_t total = p.candidates();
    for (std::uint64_t c = 0; c < total; ++c) {
        if (c == best.code) continue;
        Tuple s = decode_tuple(c, p.arity());
        auto d = p.distance(s, c, best.d, best.code);
        if (d && Best{*d, c}.better_than(best)) best = {*d, c};
    }
    return {decode_tuple(best.code, p.arity()), best.d, p.height()};
}

DecodeResult decode_parallel(const Theta& theta) {
    DecodeProblem p(theta);
    const Tuple g = p.guess();
    const Best seed{*p.distance(g, code_tuple(g), std::numeric_limits<std::uint64_t>::max(), 0), code_tuple(g)};
    const std::int64_t total = static_cast<std::int64_t>(p.candidates());
    Best best = seed;
#pragma omp parallel
    {
        Best local = seed;
#pragma omp for schedule(dynamic, 64) nowait
        for (std::int64_t ci = 0; ci < total; ++ci) {
            const auto c = static_cast<std::uint64_t>(ci);
            if (c == seed.code) continue;
            Tuple s = decode_tuple(c, p.arity());
            auto d = p.distance(s, c, local.d, local.code);
            if (d && Best{*d, c}.better_than(local)) local = {*d, c};
        }
#pragma omp critical
        if (local.better_than(best)) best = local;
    }
    return {decode_tuple(best.code, p.arity()), best.d, p.height()};
}

}  // namespace densecode

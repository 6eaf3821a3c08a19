#include "densecode/layout.hpp"

#include <stdexcept>
#include <string>

namespace densecode {

namespace {

mpz_class pow2(std::uint64_t e) {
    mpz_class r;
    mpz_setbit(r.get_mpz_t(), e);
    return r;
}

bool fits_u64(const mpz_class& v) { return v >= 0 && mpz_sizeinbase(v.get_mpz_t(), 2) <= 63; }

std::uint64_t to_u64(const mpz_class& v) {
    if (!fits_u64(v)) throw std::overflow_error("value does not fit in 64 bits");
    return static_cast<std::uint64_t>(mpz_get_ui(v.get_mpz_t()));
}

}  // namespace

FiniteBitSet mod_rep(const FiniteBitSet& sigma, unsigned r) {
    if (sigma.empty()) throw std::invalid_argument("mod_rep needs a nonempty string");
    if (r > 24) throw std::invalid_argument("mod_rep exponent too large to materialize");
    const std::size_t len = sigma.size();
    const std::size_t copies = std::size_t{1} << r;
    FiniteBitSet out(len * copies);
    for (std::size_t k = 0; k < copies; ++k)
        for (std::size_t x = 0; x < len; ++x)
            if (sigma.test(x)) out.set(x + k * len);
    return out;
}

FiniteBitSet mod_rep_inv(const FiniteBitSet& tau, unsigned r) {
    if (r > 24) throw std::invalid_argument("mod_rep_inv exponent too large");
    const std::size_t copies = std::size_t{1} << r;
    if (tau.size() % copies != 0) throw std::invalid_argument("length is not a multiple of 2^r");
    const std::size_t len = tau.size() / copies;
    FiniteBitSet out(len);
    for (std::size_t x = 0; x < len; ++x) {
        std::size_t votes = 0;
        for (std::size_t k = 0; k < copies; ++k)
            if (tau.test(x + k * len)) ++votes;
        if (2 * votes > copies) out.set(x);
    }
    return out;
}

LayoutSchedule LayoutSchedule::paper() { return LayoutSchedule{}; }

LayoutSchedule LayoutSchedule::explicit_rows(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& nb) {
    LayoutSchedule s;
    s.paper_ = false;
    std::map<std::uint64_t, std::uint64_t> seen;
    for (std::size_t i = 0; i < nb.size(); ++i) {
        auto [n, b] = nb[i];
        if (b == 0) throw std::invalid_argument("row " + std::to_string(i) + " has b = 0");
        if (n > 20) throw std::invalid_argument("row " + std::to_string(i) + " payload length 2^n is too large");
        std::uint64_t si = seen[n]++;
        s.rows_.push_back({n, si, b});
        s.index_[{n, si}] = i;
    }
    return s;
}

std::optional<std::uint64_t> LayoutSchedule::row_count() const {
    if (paper_) return std::nullopt;
    return rows_.size();
}

ScheduleRow LayoutSchedule::row(std::uint64_t i) const {
    if (paper_) {
        auto [n, s] = unpair(i);
        return {n, s, 2 * n + i + 1};
    }
    if (i >= rows_.size()) throw std::out_of_range("schedule has no row " + std::to_string(i));
    return rows_[i];
}

std::optional<std::uint64_t> LayoutSchedule::index_of(std::uint64_t n, std::uint64_t s) const {
    if (paper_) {
        try {
            return pair(n, s);
        } catch (const std::overflow_error&) {
            return std::nullopt;
        }
    }
    auto it = index_.find({n, s});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

RowGeometry local_geometry(std::uint64_t n, std::uint64_t b, const mpz_class& lprev) {
    if (b == 0) throw std::invalid_argument("b must be positive");
    RowGeometry g;
    g.n = n;
    g.b = b;
    g.lprev = lprev;
    g.r = mpz_class(static_cast<unsigned long>(2 * b + n)) + lprev;
    mpz_class e1 = *g.r - static_cast<unsigned long>(b);
    mpz_class e2 = *g.r + static_cast<unsigned long>(n);
    if (e1 <= kMaxExponent && e2 <= kMaxExponent) {
        g.lminus = pow2(mpz_get_ui(e1.get_mpz_t()));
        g.l = *g.lminus + pow2(mpz_get_ui(e2.get_mpz_t()));
    }
    return g;
}

RowGeometry LayoutSchedule::geometry(std::uint64_t i) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto& rows = cache_->rows;
    while (rows.size() <= i) {
        std::uint64_t j = rows.size();
        ScheduleRow sr = row(j);
        RowGeometry g;
        std::optional<mpz_class> lprev;
        if (j == 0) lprev = mpz_class(0);
        else lprev = rows.back().l;
        if (lprev) {
            g = local_geometry(sr.n, sr.b, *lprev);
        } else {
            g.n = sr.n;
            g.b = sr.b;
        }
        g.i = j;
        g.s = sr.s;
        rows.push_back(std::move(g));
    }
    return rows[i];
}

std::vector<RowGeometry> layout_rows(const LayoutSchedule& sched, std::uint64_t count) {
    std::vector<RowGeometry> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        RowGeometry g = sched.geometry(i);
        if (!g.representable()) throw std::overflow_error("row " + std::to_string(i) + " is too large to represent");
        out.push_back(std::move(g));
    }
    return out;
}

void SymbolicSet::set_payload(std::uint64_t row, FiniteBitSet xi) {
    ScheduleRow sr = sched_.row(row);
    if (sr.n >= 63 || xi.size() != (std::size_t{1} << sr.n))
        throw std::invalid_argument("payload for row " + std::to_string(row) + " must have length 2^n");
    payload_[row] = std::move(xi);
}

const FiniteBitSet& SymbolicSet::payload(std::uint64_t row) const {
    auto it = payload_.find(row);
    if (it == payload_.end()) throw std::out_of_range("row " + std::to_string(row) + " is not laid out");
    return it->second;
}

void SymbolicSet::flip(std::uint64_t row, std::uint64_t x, const mpz_class& k) {
    const auto& xi = payload(row);
    if (x >= xi.size()) throw std::out_of_range("coded position outside the payload");
    RowGeometry g = sched_.geometry(row);
    if (k < 0) throw std::out_of_range("negative copy index");
    if (g.r && *g.r <= kMaxExponent && k >= pow2(mpz_get_ui(g.r->get_mpz_t())))
        throw std::out_of_range("copy index outside [0, 2^r)");
    auto& s = flips_[row][x];
    auto it = s.find(k);
    if (it == s.end()) s.insert(k);
    else s.erase(it);
}

std::size_t SymbolicSet::flip_count(std::uint64_t row, std::uint64_t x) const {
    auto it = flips_.find(row);
    if (it == flips_.end()) return 0;
    auto jt = it->second.find(x);
    return jt == it->second.end() ? 0 : jt->second.size();
}

bool SymbolicSet::has_flips(std::uint64_t row) const {
    auto it = flips_.find(row);
    if (it == flips_.end()) return false;
    for (auto& [x, s] : it->second)
        if (!s.empty()) return true;
    return false;
}

FiniteBitSet SymbolicSet::row_mod_inv(std::uint64_t row) const {
    const auto& xi = payload(row);
    RowGeometry g = sched_.geometry(row);
    FiniteBitSet out(xi.size());
    for (std::size_t x = 0; x < xi.size(); ++x) {
        std::size_t f = flip_count(row, x);
        if (!g.r || *g.r > kMaxExponent) {
            // 2^{r-1} exceeds any stored number of flips
            if (xi.test(x)) out.set(x);
            continue;
        }
        mpz_class copies = pow2(mpz_get_ui(g.r->get_mpz_t()));
        mpz_class votes = xi.test(x) ? copies - static_cast<unsigned long>(f) : mpz_class(static_cast<unsigned long>(f));
        if (2 * votes > copies) out.set(x);
    }
    return out;
}

bool SymbolicSet::query_bit(const mpz_class& pos) const {
    if (pos < 0) throw std::out_of_range("negative position");
    for (std::uint64_t i = 0;; ++i) {
        if (!has_row(i)) throw std::out_of_range("position lies beyond the laid-out rows");
        RowGeometry g = sched_.geometry(i);
        if (!g.representable()) throw std::out_of_range("position lies in a row too large to represent");
        if (pos < *g.lminus) return false;
        if (pos < *g.l) {
            mpz_class off = pos - *g.lminus;
            mpz_class k;
            mpz_fdiv_q_2exp(k.get_mpz_t(), off.get_mpz_t(), g.n);
            mpz_class xr;
            mpz_fdiv_r_2exp(xr.get_mpz_t(), off.get_mpz_t(), g.n);
            std::uint64_t x = mpz_get_ui(xr.get_mpz_t());
            bool bit = payload(i).test(x);
            auto it = flips_.find(i);
            if (it != flips_.end()) {
                auto jt = it->second.find(x);
                if (jt != it->second.end() && jt->second.count(k)) bit = !bit;
            }
            return bit;
        }
    }
}

mpz_class SymbolicSet::count_below_row(std::uint64_t row) const {
    mpz_class c = 0;
    for (std::uint64_t j = 0; j < row; ++j) {
        RowGeometry g = sched_.geometry(j);
        if (!g.representable()) throw std::overflow_error("earlier row too large to count");
        const auto& xi = payload(j);
        c += mpz_class(static_cast<unsigned long>(xi.count())) * pow2(mpz_get_ui(g.r->get_mpz_t()));
        auto it = flips_.find(j);
        if (it == flips_.end()) continue;
        for (auto& [x, ks] : it->second) {
            auto n = static_cast<long>(ks.size());
            c += xi.test(x) ? -n : n;
        }
    }
    return c;
}

Rational row_density_closed_form(const RowGeometry& g, const FiniteBitSet& xi, const mpz_class& cprev) {
    if (!g.representable()) throw std::overflow_error("row geometry is not representable");
    const std::size_t N = xi.size();
    const mpz_class w = static_cast<unsigned long>(xi.count());
    const mpz_class last = pow2(mpz_get_ui(g.r->get_mpz_t())) - 1;
    mpz_class best_num, best_den;
    bool first = true;
    std::size_t pc = 0;
    for (std::size_t a = 0; a < N; ++a) {
        // lengths l^- + a + bb*N; the density is monotone in bb
        for (int end = 0; end < 2; ++end) {
            mpz_class bb = end ? last : mpz_class(0);
            mpz_class num = cprev + bb * w + static_cast<unsigned long>(pc);
            mpz_class den = *g.lminus + static_cast<unsigned long>(a) + bb * static_cast<unsigned long>(N);
            if (first || num * best_den > best_num * den) {
                best_num = num;
                best_den = den;
                first = false;
            }
        }
        if (xi.test(a)) ++pc;
    }
    return make_rational(best_num, best_den);
}

Rational row_density_bruteforce(const RowGeometry& g, const FiniteBitSet& xi, const mpz_class& cprev) {
    if (!g.representable() || !fits_u64(*g.l) || *g.l > (mpz_class(1) << 26))
        throw std::overflow_error("row too large for brute force");
    const std::uint64_t lm = to_u64(*g.lminus), l = to_u64(*g.l);
    const std::uint64_t N = xi.size();
    std::uint64_t cnt = to_u64(cprev), bc = 0, bl = 1;
    bool first = true;
    for (std::uint64_t len = lm; len < l; ++len) {
        if (len > lm && xi.test((len - 1 - lm) % N)) ++cnt;
        if (first || static_cast<unsigned __int128>(cnt) * bl > static_cast<unsigned __int128>(bc) * len) {
            bc = cnt;
            bl = len;
            first = false;
        }
    }
    return make_rational(mpz_class(static_cast<unsigned long>(bc)), mpz_class(static_cast<unsigned long>(bl)));
}

Rational SymbolicSet::row_window_density(std::uint64_t row) const {
    RowGeometry g = sched_.geometry(row);
    if (!g.representable()) throw std::overflow_error("row " + std::to_string(row) + " is too large for closed-form evaluation");
    const auto& xi = payload(row);
    mpz_class cprev = count_below_row(row);
    if (!has_flips(row)) return row_density_closed_form(g, xi, cprev);
    if (!fits_u64(*g.l) || *g.l > (mpz_class(1) << 26))
        throw std::overflow_error("row " + std::to_string(row) + " has flipped copies and is too large to stream");
    const std::uint64_t lm = to_u64(*g.lminus), l = to_u64(*g.l);
    std::uint64_t cnt = to_u64(cprev), bc = 0, bl = 1;
    bool first = true;
    for (std::uint64_t len = lm; len < l; ++len) {
        if (len > lm && query_bit(mpz_class(static_cast<unsigned long>(len - 1)))) ++cnt;
        if (first || static_cast<unsigned __int128>(cnt) * bl > static_cast<unsigned __int128>(bc) * len) {
            bc = cnt;
            bl = len;
            first = false;
        }
    }
    return make_rational(mpz_class(static_cast<unsigned long>(bc)), mpz_class(static_cast<unsigned long>(bl)));
}

FiniteBitSet SymbolicSet::materialize(std::uint64_t rows) const {
    if (rows == 0) return FiniteBitSet{};
    RowGeometry last = sched_.geometry(rows - 1);
    if (!last.representable() || *last.l > (mpz_class(1) << 24)) throw std::overflow_error("too large to materialize");
    FiniteBitSet out(to_u64(*last.l));
    for (std::uint64_t i = 0; i < rows; ++i) {
        RowGeometry g = sched_.geometry(i);
        const auto& xi = payload(i);
        const std::uint64_t lm = to_u64(*g.lminus), l = to_u64(*g.l);
        for (std::uint64_t p = lm; p < l; ++p)
            if (xi.test((p - lm) % xi.size())) out.set(p);
        auto it = flips_.find(i);
        if (it == flips_.end()) continue;
        for (auto& [x, ks] : it->second)
            for (auto& k : ks) out.flip(lm + x + to_u64(k) * xi.size());
    }
    return out;
}

SymbolicSet assemble(const std::vector<FiniteBitSet>& payloads, const LayoutSchedule& sched) {
    SymbolicSet X(sched);
    for (std::size_t i = 0; i < payloads.size(); ++i) X.set_payload(i, payloads[i]);
    return X;
}

bool sandwich_holds(const Rational& rho, const FiniteBitSet& xi, std::uint64_t b) {
    Rational centre = make_rational(static_cast<unsigned long>(xi.count()), static_cast<unsigned long>(xi.size()));
    Rational eps = pow2_neg(b);
    return centre - eps < rho && rho < centre + eps;
}

}  // namespace densecode

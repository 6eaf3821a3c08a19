#include "densecode/construction.hpp"

#include <algorithm>

#include <omp.h>

namespace densecode {

namespace {

nlohmann::json big(const mpz_class& v) {
    if (mpz_fits_ulong_p(v.get_mpz_t())) return v.get_ui();
    return v.get_str();
}

mpz_class from_u64(std::uint64_t v) {
    mpz_class r;
    mpz_import(r.get_mpz_t(), 1, 1, sizeof(v), 0, 0, &v);
    return r;
}

FiniteBitSet restrict_bits(const FiniteBitSet& b, std::size_t n) {
    FiniteBitSet r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i];
    return r;
}

std::string key_of(const FiniteBitSet& b) { return bits_to_string(b); }

bool key_prefix(const std::string& a, const FiniteBitSet& tau) {
    if (a.size() > tau.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a[i] == '1') != tau.test(i)) return false;
    return true;
}

nlohmann::json pos_list(const StageState& st, const std::set<Pos>& ps) {
    auto j = nlohmann::json::array();
    for (auto p : ps) j.push_back(st.pos_json(p));
    return j;
}

nlohmann::json triple_json(const Triple& t) {
    return {{"n", t.n}, {"i", t.i}, {"sigma", bits_to_string(t.sigma)}};
}

}  // namespace

// --- SparseStr --------------------------------------------------------------

bool SparseStr::bit(const mpz_class& p) const { return std::binary_search(ones.begin(), ones.end(), p); }

void SparseStr::flip(const mpz_class& p) {
    if (p < 0 || p >= len) throw std::out_of_range("flip outside the string");
    auto it = std::lower_bound(ones.begin(), ones.end(), p);
    if (it != ones.end() && *it == p) ones.erase(it);
    else ones.insert(it, p);
}

bool SparseStr::prefix_of(const SparseStr& other) const {
    if (len > other.len) return false;
    auto end = std::lower_bound(other.ones.begin(), other.ones.end(), len);
    return static_cast<std::size_t>(end - other.ones.begin()) == ones.size() &&
           std::equal(ones.begin(), ones.end(), other.ones.begin());
}

std::optional<std::uint64_t> SparseStr::code() const {
    if (len >= 63) return std::nullopt;
    const unsigned long n = len.get_ui();
    std::uint64_t c = (std::uint64_t{1} << n) - 1;
    for (auto& q : ones) c += std::uint64_t{1} << q.get_ui();
    return c;
}

SparseStr SparseStr::from_bits(const FiniteBitSet& b) {
    SparseStr s;
    s.len = static_cast<unsigned long>(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.test(i)) s.ones.emplace_back(static_cast<unsigned long>(i));
    return s;
}

SparseStr SparseStr::from_code(std::uint64_t c) { return from_bits(decode_bits(c)); }

nlohmann::json SparseStr::to_json() const {
    auto o = nlohmann::json::array();
    for (auto& q : ones) o.push_back(big(q));
    return {{"len", big(len)}, {"ones", o}};
}

// --- pi sequences -----------------------------------------------------------

PiSeq::PiSeq(std::vector<FiniteBitSet> seq) : seq_(std::move(seq)) {
    std::set<std::string> seen;
    for (std::size_t n = 0; n < seq_.size(); ++n) {
        if (seq_[n].size() > n) throw std::invalid_argument("|pi(n)| > n at n = " + std::to_string(n));
        if (n > 0 && seq_[n].size() < seq_[n - 1].size())
            throw std::invalid_argument("|pi| decreases at n = " + std::to_string(n));
        if (!seen.insert(key_of(seq_[n])).second)
            throw std::invalid_argument("pi repeats " + key_of(seq_[n]));
    }
}

const FiniteBitSet& PiSeq::operator()(std::uint64_t n) const {
    if (n >= seq_.size()) throw std::out_of_range("pi is defined only below " + std::to_string(seq_.size()));
    return seq_[n];
}

PiSeq PiSeq::length_lex(std::size_t count) {
    std::vector<FiniteBitSet> v;
    for (std::size_t n = 0; n < count; ++n) v.push_back(decode_bits(n));
    return PiSeq(std::move(v));
}

nlohmann::json PiSeq::to_json() const {
    auto j = nlohmann::json::array();
    for (auto& s : seq_) j.push_back(bits_to_string(s));
    return j;
}

std::size_t longest_chain(const std::vector<FiniteBitSet>& strs) {
    std::vector<FiniteBitSet> v = strs;
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.size() < b.size(); });
    std::vector<std::size_t> h(v.size(), 1);
    std::size_t best = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j)
            if (v[j].size() < v[i].size() && is_prefix(v[j], v[i])) h[i] = std::max(h[i], h[j] + 1);
        best = std::max(best, h[i]);
    }
    return best;
}

PiSeq normalize_pi(const std::vector<FiniteBitSet>& p) {
    if (p.empty()) return PiSeq{};
    if (!p[0].empty()) throw std::invalid_argument("p(0) must be the empty string");
    for (std::size_t s = 0; s < p.size(); ++s) {
        if (p[s].size() > s) throw std::invalid_argument("|p(n)| > n at n = " + std::to_string(s));
        for (std::size_t t = 0; t < s; ++t) {
            if (p[t] == p[s]) throw std::invalid_argument("p repeats " + key_of(p[s]));
            if (p[s].size() < p[t].size() && is_prefix(p[s], p[t]))
                throw std::invalid_argument("p(" + std::to_string(s) + ") is a prefix of an earlier p(" +
                                            std::to_string(t) + ")");
        }
    }
    std::vector<FiniteBitSet> pi{p[0]};
    std::vector<std::size_t> start{0};  // n_t, first index of the block for p(t)
    for (std::size_t s = 1; s < p.size(); ++s) {
        std::size_t t = 0;
        for (std::size_t u = 0; u < s; ++u)
            if (is_prefix(p[u], p[s])) t = u;
        const long ps = static_cast<long>(p[s].size());
        const long last = static_cast<long>(pi.back().size());
        const long first_t = static_cast<long>(pi[start[t]].size());
        const long l = std::max({last - ps, 1 + first_t - ps, 0L});
        if (l > 20) throw std::invalid_argument("padding block too large");
        start.push_back(pi.size());
        for (std::uint64_t i = 0; i < (std::uint64_t{1} << l); ++i) {
            FiniteBitSet e = p[s];
            // binary representation of i written most significant bit first
            for (long b = l - 1; b >= 0; --b) e.push_back((i >> b) & 1);
            pi.push_back(e);
        }
    }
    PiSeq out(pi);
    if (longest_chain(pi) < longest_chain(p)) throw std::logic_error("normalization lost a prefix chain");
    return out;
}

std::uint64_t i_pi(const PiSeq& pi, std::uint64_t n) {
    std::uint64_t c = 0;
    for (std::uint64_t m = 0; m < n; ++m)
        if (is_prefix(pi(m), pi(n))) ++c;
    return c;
}

std::uint64_t i_pi_all(const PiSeq& pi, std::uint64_t n) {
    std::uint64_t c = 0;
    for (std::uint64_t m = 0; m < pi.size(); ++m)
        if (m != n && is_prefix(pi(m), pi(n))) ++c;
    return c;
}

// --- f0 ---------------------------------------------------------------------

namespace {

struct F0Parts {
    std::uint64_t i, l;
    mpz_class v;  // floor(k / 2^{i(l+1)}) mod 2^{l+1}
};

F0Parts f0_parts(std::uint64_t x) {
    auto [i, y] = unpair(x);
    auto [l, k] = unpair(y);
    mpz_class v = from_u64(k);
    mpz_fdiv_q_2exp(v.get_mpz_t(), v.get_mpz_t(), i * (l + 1));
    mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), l + 1);
    return {i, l, v};
}

}  // namespace

mpz_class f0_at(std::uint64_t x) {
    F0Parts p = f0_parts(x);
    mpz_class top;
    mpz_setbit(top.get_mpz_t(), p.l + 1);
    return p.v + top - 1;
}

SparseStr f0_string(std::uint64_t x) {
    F0Parts p = f0_parts(x);
    SparseStr s;
    s.len = static_cast<unsigned long>(p.l + 1);
    for (unsigned long b = 0; b <= p.l; ++b)
        if (mpz_tstbit(p.v.get_mpz_t(), b)) s.ones.emplace_back(b);
    return s;
}

// --- state ------------------------------------------------------------------

InvariantBreach::InvariantBreach(std::uint64_t stage_, std::string checker_, nlohmann::json detail_)
    : std::runtime_error("invariant " + checker_ + " breached at stage " + std::to_string(stage_) + ": " +
                         detail_.dump()),
      stage(stage_),
      checker(std::move(checker_)),
      detail(std::move(detail_)) {}

mpz_class StageState::r_of(std::uint64_t n) const {
    auto it = r.find(n);
    return it == r.end() ? from_u64(n) : it->second;
}

mpz_class StageState::rbar(std::uint64_t n) const {
    mpz_class m = 0;
    // r(m) = m off the explicit entries, so only those and n - 1 can be maximal
    if (n > 0) m = from_u64(n - 1);
    for (auto& [k, v] : r)
        if (k < n && v > m) m = v;
    return m;
}

std::uint64_t StageState::column_of(Pos p) const { return p.locus ? loci.at(p.v).col : unpair(p.v).first; }

int StageState::compare(Pos p, const mpz_class& bound) const {
    if (!p.locus) {
        int c = cmp(from_u64(p.v), bound);
        return (c > 0) - (c < 0);
    }
    const Locus& L = loci.at(p.v);
    if (L.exact) {
        int c = cmp(*L.exact, bound);
        return (c > 0) - (c < 0);
    }
    // the position is at least 2^len - 2 >= 2^{len-1}
    if (bound < 0 || L.len - 1 >= static_cast<unsigned long>(mpz_sizeinbase(bound.get_mpz_t(), 2))) return 1;
    throw std::logic_error("locus position too large to compare exactly");
}

nlohmann::json StageState::pos_json(Pos p) const {
    if (!p.locus) return p.v;
    const Locus& L = loci.at(p.v);
    return {{"locus", p.v}, {"col", L.col}, {"stage", L.stage}};
}

SparseStr f_value(const StageState& st, Pos p) {
    auto it = st.f_overlay.find(p);
    if (it != st.f_overlay.end()) return it->second;
    if (p.locus) return st.loci.at(p.v).pattern;
    return f0_string(p.v);
}

SparseStr y_eval(const StageState& st, std::uint64_t i) {
    if (i >= st.U.size() || st.U[i].empty()) return {};
    std::vector<std::pair<Pos, SparseStr>> strs;
    const std::pair<Pos, SparseStr>* longest = nullptr;
    for (auto p : st.U[i]) strs.emplace_back(p, f_value(st, p));
    for (auto& e : strs)
        if (!longest || e.second.len > longest->second.len) longest = &e;
    for (auto& e : strs)
        if (!e.second.prefix_of(longest->second))
            throw InvariantBreach(st.s, "Yi-well-defined",
                                  {{"column", i},
                                   {"a", st.pos_json(e.first)},
                                   {"b", st.pos_json(longest->first)},
                                   {"a_string", e.second.to_json()},
                                   {"b_string", longest->second.to_json()}});
    return longest->second;
}

bool yi_compatible(const StageState& st, std::uint64_t x, std::uint64_t i, const SparseStr& yi) {
    if (unpair(x).first != i) return false;
    return f_value(st, Pos{x, false}).prefix_of(yi);
}

bool yi_compatible(const StageState& st, std::uint64_t x, std::uint64_t i) {
    return yi_compatible(st, x, i, y_eval(st, i));
}

std::optional<BoxValue> theta_sigma_eval(const StageState& st, const FiniteBitSet& sigma, const FiniteBitSet& S,
                                         std::uint64_t x) {
    bool boxed = false;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!sigma.test(i)) {
            const mpz_class q = pair_mpz(static_cast<unsigned long>(code_bits(restrict_bits(sigma, i))), from_u64(x));
            SparseStr y = y_eval(st, i);
            if (q >= y.len) return std::nullopt;
            sum += y.bit(q);
        } else {
            const std::uint64_t q = pair(i, x);
            if (q < S.size() && S.test(q)) boxed = true;
        }
    }
    if (boxed) return Box{};
    return sum % 2;
}

bool in_bbU(const StageState& st, const FiniteBitSet& tau, Pos p) {
    const std::uint64_t j = st.column_of(p);
    if (j < tau.size() && tau.test(j) && j < st.U.size() && st.U[j].count(p)) return true;
    for (auto& [key, set] : st.Uhat)
        if (key_prefix(key, tau) && set.count(p)) return true;
    return false;
}

std::set<Pos> bbU(const StageState& st, const FiniteBitSet& tau) {
    std::set<Pos> out;
    for (std::size_t j = 0; j < tau.size() && j < st.U.size(); ++j)
        if (tau.test(j)) out.insert(st.U[j].begin(), st.U[j].end());
    for (auto& [key, set] : st.Uhat)
        if (key_prefix(key, tau)) out.insert(set.begin(), set.end());
    return out;
}

std::set<Pos> U_of(const StageState& st, const FiniteBitSet& sigma) {
    std::set<Pos> out;
    for (std::size_t j = 0; j < sigma.size() && j < st.U.size(); ++j)
        if (sigma.test(j)) out.insert(st.U[j].begin(), st.U[j].end());
    return out;
}

LSchedule LSchedule::standard() {
    return {"standard", [](std::uint64_t s, const mpz_class& C) {
                mpz_class v = 1 + C;
                mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), s + 3);
                return v;
            }};
}

LSchedule LSchedule::slow(std::uint64_t step) {
    return {"slow", [step](std::uint64_t, const mpz_class& C) -> mpz_class { return C + from_u64(step); }};
}

// --- viability --------------------------------------------------------------

namespace {

struct Search {
    const StageState& st;
    const Triple& t;
    const FunctionalRegistry& reg;
    std::vector<std::pair<std::uint64_t, FiniteBitSet>> taus;
    std::vector<std::pair<std::size_t, SparseStr>> zero_cols;  // sigma(j) = 0 and Y_j
    mpz_class rbar, ln;

    Search(const StageState& st_, const Triple& t_, const FunctionalRegistry& reg_) : st(st_), t(t_), reg(reg_) {
        for (std::uint64_t c = 0; c < st.s; ++c) {
            FiniteBitSet tau = decode_bits(c);
            if (is_prefix(t.sigma, tau)) taus.emplace_back(c, std::move(tau));
        }
        for (std::size_t j = 0; j < t.sigma.size(); ++j)
            if (!t.sigma.test(j)) zero_cols.emplace_back(j, y_eval(st, j));
        rbar = st.rbar(t.n);
        ln = st.l.at(t.n);
    }

    // Number of x satisfying <sigma, x> < l_{s-1}; the bound is monotone in x.
    std::uint64_t x_limit() const {
        const mpz_class& lp = st.l.at(st.s - 1);
        const unsigned long c = static_cast<unsigned long>(code_bits(t.sigma));
        std::uint64_t x = 0;
        while (x < st.s && pair_mpz(c, from_u64(x)) < lp) ++x;
        return x;
    }

    bool nontrivial_ok(std::uint64_t x) const {
        if (from_u64(x) <= rbar || from_u64(x) < ln) return false;
        for (auto& [j, y] : zero_cols) {
            SparseStr z = f_value(st, Pos{pair(j, x), false});
            if (z.len < from_u64(t.n) || !z.prefix_of(y)) return false;
        }
        return true;
    }

    std::optional<Witness> at(std::uint64_t x) const {
        std::optional<bool> nt;
        const std::uint64_t zx = st.Z.count(x);
        for (auto& [c, tau] : taus) {
            const FiniteBitSet& tr = tau;
            OracleFn oracle = [&](std::uint64_t y) -> std::optional<BoxValue> {
                Pos p{y, false};
                if (in_bbU(st, tr, p)) return Box{};
                auto code = f_value(st, p).code();
                if (!code) return std::nullopt;
                return *code;
            };
            auto v = reg.run(t.i, x, oracle, st.s).natural_by(st.s);
            if (!v) continue;
            const bool trivial = *v != zx;
            if (!trivial) {
                if (!nt) nt = nontrivial_ok(x);
                if (!*nt) continue;
            }
            return Witness{x, c, tau, *v, trivial};
        }
        return std::nullopt;
    }
};

bool precheck(const StageState& st, const Triple& t) { return st.s > 0 && t.n < st.s; }

}  // namespace

std::optional<Witness> viability_check_serial(const StageState& st, const Triple& t, const FunctionalRegistry& reg) {
    if (!precheck(st, t)) return std::nullopt;
    Search search(st, t, reg);
    const std::uint64_t lim = search.x_limit();
    for (std::uint64_t x = 0; x < lim; ++x)
        if (auto w = search.at(x)) return w;
    return std::nullopt;
}

std::optional<Witness> viability_check(const StageState& st, const Triple& t, const FunctionalRegistry& reg,
                                       bool parallel) {
    if (!parallel) return viability_check_serial(st, t, reg);
    if (!precheck(st, t)) return std::nullopt;
    Search search(st, t, reg);
    const std::int64_t lim = static_cast<std::int64_t>(search.x_limit());
    const std::int64_t chunk = 4 * std::max(1, omp_get_max_threads());
    for (std::int64_t lo = 0; lo < lim; lo += chunk) {
        const std::int64_t hi = std::min(lim, lo + chunk);
        std::vector<std::optional<Witness>> found(static_cast<std::size_t>(hi - lo));
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t x = lo; x < hi; ++x) found[static_cast<std::size_t>(x - lo)] = search.at(static_cast<std::uint64_t>(x));
        for (auto& w : found)
            if (w) return w;
    }
    return std::nullopt;
}

// --- stage ------------------------------------------------------------------

nlohmann::json TraceRecord::to_json() const {
    return {{"stage", stage}, {"step", step}, {"object", object}, {"before", before}, {"after", after}};
}

StageEvents stage_step(StageState& st, const PiSeq& pi, const FunctionalRegistry& reg, const LSchedule& ls,
                       const TraceSink& sink, const ConstructionConfig& cfg) {
    const std::uint64_t s = st.s;
    if (s >= pi.size()) throw std::invalid_argument("pi is shorter than the run");
    StageEvents ev;
    ev.stage = s;
    auto emit = [&](std::string step, nlohmann::json object, nlohmann::json before, nlohmann::json after) {
        if (sink) sink({s, std::move(step), std::move(object), std::move(before), std::move(after)});
    };
    if (st.U.size() < s + 1) st.U.resize(s + 1);

    // l_s from the running count of elements and the largest quantity so far
    mpz_class mention = st.mentioned;
    if (s > 0) mention = std::max(mention, st.l.back());
    for (auto& [n, v] : st.r) mention = std::max(mention, v);
    const mpz_class C = from_u64(st.ever_added.size()) + mention;
    mpz_class l = ls.value(s, C);
    if (s > 0 && l <= st.l.back()) throw std::runtime_error("l-schedule is not strictly increasing at stage " + std::to_string(s));
    std::size_t h = 0;
    for (std::uint64_t n = 0; n <= s; ++n) h = std::max(h, pi(n).size());
    if (h > cfg.max_prefix_len) throw std::runtime_error("pi(n) too long to form l-hat at stage " + std::to_string(s));
    const unsigned long ones_code = (1ul << (h + 1)) - 2;
    mpz_class lhat = pair_mpz(ones_code, l);
    st.l.push_back(l);
    st.lhat.push_back(lhat);
    emit("choose-l", "l", nullptr, {{"C", C.get_str()}, {"l", l.get_str()}, {"h", h}, {"lhat_bits", mpz_sizeinbase(lhat.get_mpz_t(), 2)}});

    std::vector<bool> reset(st.U.size(), false);

    // step 1: least viable triple
    std::optional<Witness> w;
    const Triple* acting = nullptr;
    for (auto& [n, t] : st.R) {
        w = viability_check(st, t, reg, cfg.parallel);
        if (w) {
            acting = &t;
            break;
        }
    }
    if (w) {
        const Triple t = *acting;
        ev.acted = t;
        ev.witness = w;
        const std::string key = key_of(t.sigma);
        st.mentioned = std::max(st.mentioned, from_u64(w->x));
        emit("witness", triple_json(t), nullptr,
             {{"x", w->x}, {"tau", bits_to_string(w->tau)}, {"output", w->output}, {"trivial", w->trivial}});

        // fix-U-hat
        std::set<Pos> hat = bbU(st, w->tau);
        for (auto p : U_of(st, t.sigma)) hat.erase(p);
        std::set<Pos> old = st.Uhat.count(key) ? st.Uhat[key] : std::set<Pos>{};
        emit("fix-U-hat", {{"Uhat", key}}, pos_list(st, old), pos_list(st, hat));
        if (hat.empty()) st.Uhat.erase(key);
        else st.Uhat[key] = hat;

        // resetU
        for (std::size_t j = t.sigma.size(); j < st.U.size(); ++j) {
            reset[j] = true;
            if (st.U[j].empty()) continue;
            emit("resetU", {{"U", j}}, pos_list(st, st.U[j]), nlohmann::json::array());
            st.U[j].clear();
        }

        // restraint and satisfaction
        emit("set-r", {{"r", t.n}}, big(st.r_of(t.n)), l.get_str());
        st.r[t.n] = l;
        ev.r_changes.emplace_back(t.n, l);
        st.R.erase(t.n);
        st.RS[t.n] = {t, w->x};
        ev.left.push_back(t.n);
        emit("move-to-RS", triple_json(t), "R", {{"RS", w->x}});

        // add-injured-to-R
        for (auto it = st.RS.upper_bound(t.n); it != st.RS.end();) {
            const Triple& u = it->second.first;
            const std::string ukey = key_of(u.sigma);
            std::set<Pos> uold = st.Uhat.count(ukey) ? st.Uhat[ukey] : std::set<Pos>{};
            emit("add-injured-to-R", triple_json(u), {{"RS", it->second.second}, {"Uhat", pos_list(st, uold)}},
                 {{"R", true}, {"Uhat", nlohmann::json::array()}});
            st.Uhat.erase(ukey);
            st.R[it->first] = u;
            ev.entered.push_back(it->first);
            it = st.RS.erase(it);
        }

        if (!w->trivial) {
            // change-Z
            const bool z = st.Z.count(w->x);
            if (z) st.Z.erase(w->x);
            else st.Z.insert(w->x);
            ev.z_changes.push_back(w->x);
            emit("change-Z", {{"Z", w->x}}, z ? 1 : 0, z ? 0 : 1);

            // add-error-to-U
            for (std::size_t j = 0; j < t.sigma.size(); ++j) {
                if (t.sigma.test(j)) continue;
                Pos p{pair(j, w->x), false};
                st.U[j].insert(p);
                st.ever_added.insert(p);
                ev.added.push_back(p);
                emit("add-error-to-U", {{"U", j}}, nullptr, st.pos_json(p));
            }

            // flip-elements-of-U
            for (std::size_t j = 0; j < t.sigma.size(); ++j) {
                if (!t.sigma.test(j)) continue;
                const mpz_class q =
                    pair_mpz(static_cast<unsigned long>(code_bits(restrict_bits(t.sigma, j))), from_u64(w->x));
                for (auto z : st.U[j]) {
                    SparseStr before = f_value(st, z);
                    if (before.len <= q) continue;
                    SparseStr after = before;
                    after.flip(q);
                    st.f_overlay[z] = after;
                    ev.f_changes.push_back({z, before.len, after.len});
                    emit("flip", {{"f", st.pos_json(z)}, {"bit", big(q)}}, before.bit(q) ? 1 : 0, after.bit(q) ? 1 : 0);
                }
            }
        }
    }

    // ext-U
    const mpz_class L = lhat + 1;
    for (std::uint64_t i = 0; i <= s; ++i) {
        SparseStr yhat = reset[i] ? SparseStr{} : y_eval(st, i);
        if (yhat.len > L) throw std::logic_error("Y longer than l-hat");
        Locus loc;
        loc.col = i;
        loc.stage = s;
        loc.len = L;
        loc.pattern = yhat;
        loc.pattern.len = L;
        if (L <= (1ul << 16) && (i + 2) * L.get_ui() <= (1ul << 24)) {
            mpz_class k = 0;
            for (auto& q : loc.pattern.ones) {
                mpz_class b;
                mpz_setbit(b.get_mpz_t(), q.get_ui());
                k += b;
            }
            mpz_mul_2exp(k.get_mpz_t(), k.get_mpz_t(), i * L.get_ui());
            loc.exact = pair_mpz(static_cast<unsigned long>(i), pair_mpz(L.get_ui() - 1, k));
        }
        const Pos p{st.loci.size(), true};
        st.loci.push_back(std::move(loc));
        st.U[i].insert(p);
        st.ever_added.insert(p);
        ev.added.push_back(p);
        auto ones = nlohmann::json::array();
        for (auto& q : yhat.ones) ones.push_back(big(q));
        emit("ext-U", {{"U", i}}, nullptr,
             {{"x", st.pos_json(p)}, {"len", "lhat+1"}, {"copied_len", big(yhat.len)}, {"ones", ones}});
    }

    // add the stage's own triple
    Triple nt{s, i_pi(pi, s), pi(s)};
    emit("add-R", triple_json(nt), nullptr, "R");
    st.R[s] = nt;
    ev.entered.push_back(s);
    st.mentioned = std::max(st.mentioned, from_u64(s));
    ++st.s;
    return ev;
}

}  // namespace densecode

#include "densecode/coarse.hpp"

#include <string>

namespace densecode {

namespace {

FiniteBitSet mask_to_bits(std::uint64_t mask, std::size_t n) {
    FiniteBitSet b(n);
    for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1) b.set(i);
    return b;
}

std::uint64_t bits_to_mask(const FiniteBitSet& b) {
    if (b.size() > 64) throw std::invalid_argument("bit string wider than 64");
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.test(i)) m |= std::uint64_t{1} << i;
    return m;
}

}  // namespace

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    for (;;) {
        std::uint64_t v = rng();
        if (v <= limit) return v % n;
    }
}

FiniteBitSet gamma_payload(const PartialSeq& f, const LayoutSchedule& sched, std::uint64_t row) {
    ScheduleRow r = sched.row(row);
    if (r.n > 5) throw std::invalid_argument("interval too wide for the encoder");
    auto [lo, hi] = interval_I(static_cast<unsigned>(r.n));
    Tuple sigma = slice_values(f, lo, hi);
    return mask_to_bits(encode_at(sigma, r.s), sigma.size());
}

GammaImage gamma_rows(const PartialSeq& f, const LayoutSchedule& sched, const std::vector<std::uint64_t>& rows) {
    GammaImage g{SymbolicSet(sched), f};
    for (auto i : rows) g.X.set_payload(i, gamma_payload(f, sched, i));
    return g;
}

GammaImage gamma_prefix(const PartialSeq& f, const LayoutSchedule& sched, std::uint64_t rows) {
    std::vector<std::uint64_t> all;
    for (std::uint64_t i = 0; i < rows; ++i) all.push_back(i);
    return gamma_rows(f, sched, all);
}

std::vector<std::uint64_t> rows_for_values(const LayoutSchedule& sched, unsigned nmax, std::uint64_t vmax) {
    std::vector<std::uint64_t> out;
    for (unsigned n = 0; n <= nmax; ++n) {
        const std::uint64_t N = std::uint64_t{1} << n;
        const std::uint64_t end = ipow(N, N) * ipow(vmax + 1, N);
        for (std::uint64_t s = 0; s < end; ++s) {
            auto i = sched.index_of(n, s);
            if (!i) throw InsufficientRows("schedule has no row for n = " + std::to_string(n) + ", s = " + std::to_string(s));
            out.push_back(*i);
        }
    }
    return out;
}

Theta theta_view(const SymbolicSet& X, unsigned n) {
    if (n > 2) throw std::invalid_argument("decoding supports intervals I_n with n <= 2");
    const std::uint64_t N = std::uint64_t{1} << n;
    const std::uint64_t K = ipow(N, N);
    Theta th(N);
    for (std::uint64_t m = 0;; ++m) {
        bool empty = true;
        for (std::uint64_t s = K * ipow(m, N); s < K * ipow(m + 1, N); ++s) {
            auto i = X.schedule().index_of(n, s);
            if (!i || !X.has_row(*i))
                throw InsufficientRows("insufficient rows: no empty block found for n = " + std::to_string(n) +
                                       " before s = " + std::to_string(s));
            std::uint64_t mask = bits_to_mask(X.row_mod_inv(*i));
            if (mask) {
                empty = false;
                th.append_sorted(s, mask);
            }
        }
        if (empty) return th;
    }
}

std::vector<std::uint64_t> gamma_hat_interval(const SymbolicSet& X, unsigned n) {
    return decode(theta_view(X, n)).sigma;
}

PartialSeq gamma_hat_prefix(const SymbolicSet& X, unsigned nmax) {
    PartialSeq f(std::size_t{1} << (nmax + 1));
    f[0] = 0;
    for (unsigned n = 0; n <= nmax; ++n) {
        auto vals = gamma_hat_interval(X, n);
        auto [lo, hi] = interval_I(n);
        for (auto x = lo; x < hi; ++x) f[x] = vals[x - lo];
    }
    return f;
}

std::vector<PerturbRow> perturb_experiment(const PartialSeq& f, const PartialSeq& fprime, const FiniteBitSet& S,
                                          const LayoutSchedule& sched, std::uint64_t rows) {
    for (std::size_t x = 0; x < std::min(f.size(), fprime.size()); ++x)
        if ((x >= S.size() || !S.test(x)) && f[x] != fprime[x])
            throw std::invalid_argument("f' differs from f outside S");
    SymbolicSet D(sched);
    std::vector<PerturbRow> out;
    for (std::uint64_t i = 0; i < rows; ++i) {
        ScheduleRow r = sched.row(i);
        FiniteBitSet xi = gamma_payload(f, sched, i), xj = gamma_payload(fprime, sched, i);
        D.set_payload(i, xi ^ xj);
        PerturbRow pr;
        pr.row = i;
        pr.n = r.n;
        pr.s = r.s;
        auto [lo, hi] = interval_I(static_cast<unsigned>(r.n));
        std::uint64_t cnt = 0;
        for (auto x = lo; x < hi; ++x)
            if (x < S.size() && S.test(x)) ++cnt;
        pr.interval_fraction = make_rational(static_cast<unsigned long>(cnt), static_cast<unsigned long>(hi - lo));
        pr.code_fraction = make_rational(static_cast<unsigned long>((xi ^ xj).count()), static_cast<unsigned long>(xi.size()));
        pr.window_density = D.row_window_density(i);
        pr.bound_holds = pr.window_density < pr.code_fraction + pow2_neg(r.b);
        out.push_back(std::move(pr));
    }
    return out;
}

PartialSeq perturb_values(const PartialSeq& f, const FiniteBitSet& S, std::uint64_t V, std::mt19937_64& rng) {
    PartialSeq g = f;
    for (std::size_t x = 0; x < std::min(f.size(), S.size()); ++x)
        if (S.test(x)) g[x] = uniform_below(rng, V);
    return g;
}

}  // namespace densecode

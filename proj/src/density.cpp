#include "densecode/density.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace densecode {

namespace {

// m^n saturating at UINT64_MAX.
std::uint64_t ipow_sat(std::uint64_t m, std::size_t n) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < n; ++i) {
        unsigned __int128 t = static_cast<unsigned __int128>(r) * m;
        if (t > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
        r = static_cast<std::uint64_t>(t);
    }
    return r;
}

}  // namespace

FiniteBitSet bits_from_string(std::string_view s) {
    FiniteBitSet b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '1') b.set(i);
        else if (s[i] != '0') throw std::invalid_argument("bit string must contain only 0 and 1");
    }
    return b;
}

std::string bits_to_string(const FiniteBitSet& b) {
    std::string s(b.size(), '0');
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.test(i)) s[i] = '1';
    return s;
}

Rational make_rational(const mpz_class& num, const mpz_class& den) {
    if (den == 0) throw std::invalid_argument("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

Rational pow2_neg(unsigned long k) {
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, k);
    return make_rational(1, den);
}

std::uint64_t pair(std::uint64_t i, std::uint64_t n) {
    if (i >= 64 || n >= (std::uint64_t{1} << 63)) throw std::overflow_error("pair overflows 64 bits");
    std::uint64_t odd = 2 * n + 1;
    if (i > 0 && (odd >> (64 - i)) != 0) throw std::overflow_error("pair overflows 64 bits");
    return (odd << i) - 1;
}

std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t z) {
    if (z == std::numeric_limits<std::uint64_t>::max()) return {64, 0};
    std::uint64_t w = z + 1;
    unsigned i = static_cast<unsigned>(std::countr_zero(w));
    return {i, ((w >> i) - 1) / 2};
}

mpz_class pair_mpz(unsigned long i, const mpz_class& n) {
    if (n < 0) throw std::invalid_argument("pair of negative value");
    mpz_class r = 2 * n + 1;
    mpz_mul_2exp(r.get_mpz_t(), r.get_mpz_t(), i);
    return r - 1;
}

std::pair<unsigned long, mpz_class> unpair_mpz(const mpz_class& z) {
    if (z < 0) throw std::invalid_argument("unpair of negative value");
    mpz_class w = z + 1;
    unsigned long i = mpz_scan1(w.get_mpz_t(), 0);
    mpz_class odd;
    mpz_fdiv_q_2exp(odd.get_mpz_t(), w.get_mpz_t(), i);
    return {i, (odd - 1) / 2};
}

std::uint64_t code_bits(const FiniteBitSet& sigma) {
    if (sigma.size() >= 63) throw std::overflow_error("string too long for a 64-bit code");
    std::uint64_t c = (std::uint64_t{1} << sigma.size()) - 1;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma.test(i)) c += std::uint64_t{1} << i;
    return c;
}

mpz_class code_bits_mpz(const FiniteBitSet& sigma) {
    mpz_class c;
    mpz_setbit(c.get_mpz_t(), sigma.size());
    c -= 1;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma.test(i)) {
            mpz_class t;
            mpz_setbit(t.get_mpz_t(), i);
            c += t;
        }
    return c;
}

FiniteBitSet decode_bits(std::uint64_t c) {
    // length L satisfies 2^L - 1 <= c < 2^{L+1} - 1
    unsigned L = 63 - static_cast<unsigned>(std::countl_zero(c + 1));
    std::uint64_t v = c - ((std::uint64_t{1} << L) - 1);
    FiniteBitSet b(L);
    for (unsigned i = 0; i < L; ++i)
        if ((v >> i) & 1) b.set(i);
    return b;
}

std::uint64_t ipow(std::uint64_t m, std::size_t n) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < n; ++i) {
        unsigned __int128 t = static_cast<unsigned __int128>(r) * m;
        if (t > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("power overflows 64 bits");
        r = static_cast<std::uint64_t>(t);
    }
    return r;
}

std::uint64_t tuple_max_of_code(std::uint64_t c, std::size_t n) {
    if (n == 0) return 0;
    if (n == 1) return c;
    // double estimate, corrected exactly below
    const double x = static_cast<double>(c);
    auto m = static_cast<std::uint64_t>(n == 2 ? std::sqrt(x) : std::pow(x, 1.0 / static_cast<double>(n)));
    while (m > 0 && ipow_sat(m, n) > c) --m;
    while (ipow_sat(m + 1, n) <= c) ++m;
    return m;
}

namespace {

// number of completions of k free positions over [0, m] whose tuple has max exactly m
std::uint64_t completions(std::uint64_t m, std::size_t k, bool has_m) {
    std::uint64_t all = ipow(m + 1, k);
    return has_m ? all : all - ipow(m, k);
}

}  // namespace

std::uint64_t code_tuple(const std::vector<std::uint64_t>& t) {
    const std::size_t n = t.size();
    if (n == 0) return 0;
    std::uint64_t m = 0;
    for (auto v : t) m = std::max(m, v);
    std::uint64_t code = ipow(m, n);
    bool has_m = false;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = n - i - 1;
        for (std::uint64_t u = 0; u < t[i]; ++u) {
            std::uint64_t add = completions(m, k, has_m);
            if (code > std::numeric_limits<std::uint64_t>::max() - add) throw std::overflow_error("tuple code overflows 64 bits");
            code += add;
        }
        if (t[i] == m) has_m = true;
    }
    return code;
}

std::vector<std::uint64_t> decode_tuple(std::uint64_t c, std::size_t n) {
    std::vector<std::uint64_t> t(n, 0);
    if (n == 0) {
        if (c != 0) throw std::invalid_argument("only code 0 exists for the empty tuple");
        return t;
    }
    std::uint64_t m = tuple_max_of_code(c, n);
    std::uint64_t rank = c - ipow(m, n);
    bool has_m = false;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = n - i - 1;
        for (std::uint64_t v = 0; v <= m; ++v) {
            std::uint64_t cnt = completions(m, k, has_m || v == m);
            if (rank < cnt) {
                t[i] = v;
                if (v == m) has_m = true;
                break;
            }
            rank -= cnt;
        }
    }
    return t;
}

Rational window_density(const FiniteBitSet& s, std::uint64_t a, std::uint64_t b) {
    if (a == 0 || a > b) throw std::invalid_argument("window must satisfy 0 < a <= b");
    if (b > s.size()) throw std::out_of_range("window extends past the end of the prefix");
    std::uint64_t cnt = 0, bc = 0, bl = 1;
    bool first = true;
    for (std::uint64_t l = 1; l <= b; ++l) {
        if (s.test(l - 1)) ++cnt;
        if (l < a) continue;
        if (first || static_cast<unsigned __int128>(cnt) * bl > static_cast<unsigned __int128>(bc) * l) {
            bc = cnt;
            bl = l;
            first = false;
        }
    }
    return make_rational(mpz_class(static_cast<unsigned long>(bc)), mpz_class(static_cast<unsigned long>(bl)));
}

std::pair<std::uint64_t, std::uint64_t> interval_I(unsigned n) {
    if (n >= 63) throw std::overflow_error("interval index too large");
    return {std::uint64_t{1} << n, std::uint64_t{1} << (n + 1)};
}

PartialSeq slice(const PartialSeq& f, std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi || hi > f.size()) throw std::out_of_range("slice outside the defined prefix");
    PartialSeq out(f.begin() + static_cast<std::ptrdiff_t>(lo), f.begin() + static_cast<std::ptrdiff_t>(hi));
    for (auto& v : out)
        if (!v) throw std::invalid_argument("slice touches an undefined position");
    return out;
}

std::vector<std::uint64_t> slice_values(const PartialSeq& f, std::uint64_t lo, std::uint64_t hi) {
    auto s = slice(f, lo, hi);
    std::vector<std::uint64_t> out;
    out.reserve(s.size());
    for (auto& v : s) out.push_back(*v);
    return out;
}

FiniteBitSet symdiff(const PartialSeq& f, const PartialSeq& g) {
    std::size_t n = std::min(f.size(), g.size());
    FiniteBitSet d(n);
    for (std::size_t i = 0; i < n; ++i)
        if (f[i] != g[i]) d.set(i);
    return d;
}

FiniteBitSet symdiff(const FiniteBitSet& a, const FiniteBitSet& b) {
    std::size_t n = std::min(a.size(), b.size());
    FiniteBitSet d(n);
    for (std::size_t i = 0; i < n; ++i)
        if (a.test(i) != b.test(i)) d.set(i);
    return d;
}

BoxSeq to_boxseq(const PartialSeq& f) {
    BoxSeq out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i]) out[i] = BoxValue{*f[i]};
    return out;
}

BoxSeq box_mask(const BoxSeq& f, const FiniteBitSet& s) {
    std::size_t n = std::min(f.size(), s.size());
    BoxSeq out(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t i = 0; i < n; ++i)
        if (out[i] && s.test(i)) out[i] = BoxValue{Box{}};
    return out;
}

BoxSeq box_mask(const PartialSeq& f, const FiniteBitSet& s) { return box_mask(to_boxseq(f), s); }

bool sagree(const BoxSeq& f, const BoxSeq& g) {
    if (f.size() != g.size()) throw std::invalid_argument("sagree needs sequences of equal length");
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f[i] && !g[i]) continue;
        if (!f[i] || !g[i]) return false;
        if (std::holds_alternative<Box>(*f[i]) || std::holds_alternative<Box>(*g[i])) continue;
        if (std::get<std::uint64_t>(*f[i]) != std::get<std::uint64_t>(*g[i])) return false;
    }
    return true;
}

FiniteBitSet strong_dom(const BoxSeq& f) {
    FiniteBitSet d(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] && std::holds_alternative<std::uint64_t>(*f[i])) d.set(i);
    return d;
}

PartialSeq overlay(const PartialSeq& sigma, const PartialSeq& f) {
    PartialSeq out(std::max(sigma.size(), f.size()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i < sigma.size() && sigma[i]) out[i] = sigma[i];
        else if (i < f.size()) out[i] = f[i];
    }
    return out;
}

bool is_prefix(const FiniteBitSet& a, const FiniteBitSet& b) {
    if (a.size() > b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.test(i) != b.test(i)) return false;
    return true;
}

}  // namespace densecode

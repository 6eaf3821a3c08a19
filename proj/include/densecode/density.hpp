#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/dynamic_bitset.hpp>
#include <gmpxx.h>

namespace densecode {

using Rational = mpq_class;
using FiniteBitSet = boost::dynamic_bitset<>;

struct Box {
    bool operator==(const Box&) const = default;
};
using BoxValue = std::variant<std::uint64_t, Box>;

using Tuple = std::vector<std::uint64_t>;
using PartialSeq = std::vector<std::optional<std::uint64_t>>;
using BoxSeq = std::vector<std::optional<BoxValue>>;

// Bit i of the result is character i of the string ("0100" has only bit 1 set).
FiniteBitSet bits_from_string(std::string_view s);
std::string bits_to_string(const FiniteBitSet& b);

Rational make_rational(const mpz_class& num, const mpz_class& den);
Rational pow2_neg(unsigned long k);

// <i, n> = 2^i (2n + 1) - 1, a bijection N x N -> N.
std::uint64_t pair(std::uint64_t i, std::uint64_t n);
std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t z);
mpz_class pair_mpz(unsigned long i, const mpz_class& n);
std::pair<unsigned long, mpz_class> unpair_mpz(const mpz_class& z);

// Binary strings ordered by length then value, with sigma(n) weighted 2^n.
std::uint64_t code_bits(const FiniteBitSet& sigma);
mpz_class code_bits_mpz(const FiniteBitSet& sigma);
FiniteBitSet decode_bits(std::uint64_t c);

// Tuples in omega^n ordered so that tuples with max < m come first.
std::uint64_t code_tuple(const std::vector<std::uint64_t>& t);
std::vector<std::uint64_t> decode_tuple(std::uint64_t c, std::size_t n);
// Largest m with m^n <= c, i.e. max of decode_tuple(c, n).
std::uint64_t tuple_max_of_code(std::uint64_t c, std::size_t n);
// m^n, throwing on overflow.
std::uint64_t ipow(std::uint64_t m, std::size_t n);

// max over l in [a, b] of |S restricted to [0,l)| / l.
Rational window_density(const FiniteBitSet& s, std::uint64_t a, std::uint64_t b);

// I_n = [2^n, 2^{n+1}).
std::pair<std::uint64_t, std::uint64_t> interval_I(unsigned n);
PartialSeq slice(const PartialSeq& f, std::uint64_t lo, std::uint64_t hi);
std::vector<std::uint64_t> slice_values(const PartialSeq& f, std::uint64_t lo, std::uint64_t hi);

FiniteBitSet symdiff(const PartialSeq& f, const PartialSeq& g);
FiniteBitSet symdiff(const FiniteBitSet& a, const FiniteBitSet& b);

BoxSeq to_boxseq(const PartialSeq& f);
BoxSeq box_mask(const PartialSeq& f, const FiniteBitSet& s);
BoxSeq box_mask(const BoxSeq& f, const FiniteBitSet& s);
bool sagree(const BoxSeq& f, const BoxSeq& g);
FiniteBitSet strong_dom(const BoxSeq& f);
PartialSeq overlay(const PartialSeq& sigma, const PartialSeq& f);

bool is_prefix(const FiniteBitSet& a, const FiniteBitSet& b);

}  // namespace densecode

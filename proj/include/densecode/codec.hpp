#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "densecode/density.hpp"

namespace densecode {

// A map q : n -> n with q(q(i)) = q(i).
struct IdempotentMap {
    std::vector<std::uint8_t> q;
    std::uint64_t rank() const;  // sum of q(i) n^i
};

bool is_idempotent(const std::vector<std::uint8_t>& q);
// All idempotent maps on n points in increasing rank order.
const std::vector<IdempotentMap>& idempotent_maps(std::size_t n);
std::vector<std::uint8_t> map_from_rank(std::uint64_t rank, std::size_t n);

// Code index <tau, q> = code_tuple(tau) * n^n + rank(q).
std::uint64_t code_index(const std::vector<std::uint64_t>& tau, std::uint64_t qrank, std::size_t n);
std::pair<std::vector<std::uint64_t>, std::uint64_t> split_code_index(std::uint64_t s, std::size_t n);

// theta : omega -> 2^n with finite support; bit i of a mask is position i.
class Theta {
public:
    explicit Theta(std::size_t arity = 0) : n_(arity) {}
    std::size_t arity() const { return n_; }
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& support() const { return sup_; }
    std::uint64_t get(std::uint64_t s) const;
    void set(std::uint64_t s, std::uint64_t mask);
    FiniteBitSet get_bits(std::uint64_t s) const;
    bool operator==(const Theta&) const = default;

    // Entries must be in strictly increasing s with nonzero masks.
    void append_sorted(std::uint64_t s, std::uint64_t mask);

private:
    std::size_t n_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> sup_;
};



// b(q, sigma, x) = max({-1} u {sigma(y) : q(y) = x}).
std::int64_t bnd_b(const std::vector<std::uint8_t>& q, const Tuple& sigma, std::size_t x);
// bnd_b + 1 for every x at once.
std::vector<std::uint64_t> borrow_bound_plus1(const std::vector<std::uint8_t>& q, const Tuple& sigma);
// e_{tau,q}(sigma) as a mask; q must be idempotent.
std::uint64_t encode_one(const Tuple& sigma, const Tuple& tau, const std::vector<std::uint8_t>& q);
// e_s(sigma); zero for non-idempotent q.
std::uint64_t encode_at(const Tuple& sigma, std::uint64_t s);
Theta encode(const Tuple& sigma);

// sup over s of |theta(s) xor theta'(s)|.
std::uint64_t ddist(const Theta& a, const Theta& b);
// Least m such that the block [n^n m^n, n^n (m+1)^n) holds no support.
std::uint64_t height(const Theta& theta);
// theta restricted below n^n (h+1)^n.
Theta truncate(const Theta& theta);

struct DecodeResult {
    Tuple sigma;
    std::uint64_t distance = 0;
    std::uint64_t height = 0;
};

// Closest sigma' with max sigma' <= height; ties go to the smaller code_tuple.
DecodeResult decode_serial(const Theta& theta);
DecodeResult decode_parallel(const Theta& theta);
inline DecodeResult decode(const Theta& theta) { return decode_parallel(theta); }

// Componentwise minimum.
Tuple cwise_min(const Tuple& a, const Tuple& b);

}  // namespace densecode

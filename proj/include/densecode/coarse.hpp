#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "densecode/codec.hpp"
#include "densecode/layout.hpp"

namespace densecode {

struct InsufficientRows : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GammaImage {
    SymbolicSet X;
    PartialSeq f;
};

// Row payload e_{s_i}(f/I_{n_i}) as a bit string of length 2^{n_i}.
FiniteBitSet gamma_payload(const PartialSeq& f, const LayoutSchedule& sched, std::uint64_t row);

// Gamma(f) on rows 0..rows-1.
GammaImage gamma_prefix(const PartialSeq& f, const LayoutSchedule& sched, std::uint64_t rows);
// Gamma(f) on an explicit set of rows.
GammaImage gamma_rows(const PartialSeq& f, const LayoutSchedule& sched, const std::vector<std::uint64_t>& rows);
// Rows i = <n, s> with n <= nmax and s < horizon(n), enough for decoding values <= vmax.
std::vector<std::uint64_t> rows_for_values(const LayoutSchedule& sched, unsigned nmax, std::uint64_t vmax);

// s -> Mod^{-1}(X / L_{<n,s>}) up to and including the first empty block.
Theta theta_view(const SymbolicSet& X, unsigned n);
std::vector<std::uint64_t> gamma_hat_interval(const SymbolicSet& X, unsigned n);
// f restricted to [0, 2^{nmax+1}), with f(0) = 0.
PartialSeq gamma_hat_prefix(const SymbolicSet& X, unsigned nmax);

struct PerturbRow {
    std::uint64_t row = 0, n = 0, s = 0;
    Rational interval_fraction;
    Rational code_fraction;
    Rational window_density;
    bool bound_holds = false;
};

// f' agrees with f off S; rows 0..rows-1 must be representable.
std::vector<PerturbRow> perturb_experiment(const PartialSeq& f, const PartialSeq& fprime, const FiniteBitSet& S,
                                          const LayoutSchedule& sched, std::uint64_t rows);

// Replace f on S by values drawn uniformly from [0, V).
PartialSeq perturb_values(const PartialSeq& f, const FiniteBitSet& S, std::uint64_t V, std::mt19937_64& rng);

// Uniform draw from [0, n) by rejection, independent of the standard library's distributions.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

}  // namespace densecode

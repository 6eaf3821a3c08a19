#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include <json.hpp>

#include "densecode/density.hpp"
#include "densecode/registry.hpp"

namespace densecode {

// Finite density condition: sigma with rho^{|sigma|}_{|sigma|}(sigma) <= 2^-k.
struct ICond {
    FiniteBitSet sigma;
    std::uint64_t k = 0;

    bool valid() const;
    bool operator==(const ICond&) const = default;
};

bool icond_leq(const ICond& p, const ICond& q);
// sigma prefix of S and the density of S over [|sigma|, |S|] within 2^-k.
bool realizes_window(const FiniteBitSet& S, const ICond& p);

struct PCond {
    PartialSeq tau;  // total
    ICond p;
};

bool pcond_leq(const PCond& a, const PCond& b);

// Passive record for (xi, w, E) tuples; no forcing semantics attached.
struct IStarRecord {
    FiniteBitSet xi;
    std::uint64_t w = 0;
    std::vector<std::uint64_t> E;
};

using Gamma = std::map<std::uint64_t, std::uint64_t>;

struct FCond {
    FiniteBitSet sigma;
    std::uint64_t k = 0;
    Gamma gamma;  // defined exactly where sigma is 1

    // Throws std::invalid_argument unless (sigma, k) is valid and dom gamma matches.
    static FCond make(FiniteBitSet sigma, std::uint64_t k, Gamma gamma);
    static FCond from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    ICond icond() const { return {sigma, k}; }
    bool operator==(const FCond&) const = default;
};

bool fcond_leq(const FCond& q, const FCond& q2);

// f[q]: gamma on the mask, f off it, undefined from |sigma| on.
PartialSeq apply_overlay(const PartialSeq& f, const FCond& q);
bool fproper(const FCond& q, const PartialSeq& f);
bool fgeq_window(const PartialSeq& h, const FCond& q, const PartialSeq& f);

struct Translation {
    FCond cond;  // carries the achieved k
    std::uint64_t k_original = 0;
    bool keeps_k = false;  // (sigma', k_original) is itself valid
};

Translation translate(const FCond& p, const PartialSeq& f, const PartialSeq& f2);

struct TranslateExtend {
    std::uint64_t l2 = 0;
    FCond q2, q4;
    Translation p3;
    bool k3_equals_k1 = false;
    bool card_preserved = false;
};

// Requires q1 to be f-proper; throws std::runtime_error("prefix too short") when no l2 fits.
TranslateExtend translate_extend(const FCond& q1, const PartialSeq& f, const PartialSeq& f2);

// q >= q4 implies q^{f->f'} >= p3.
bool check_forward(const TranslateExtend& te, const FCond& q, const PartialSeq& f, const PartialSeq& f2);
// p5 >= q4^{f->f'} implies p5^{f'->f} >= q1.
bool check_round_trip(const TranslateExtend& te, const FCond& q1, const FCond& p5, const PartialSeq& f,
                      const PartialSeq& f2);

// A random g-proper extension of q to length `len` that stays above q.
FCond random_extension(const FCond& q, std::uint64_t len, const PartialSeq& g, std::mt19937_64& rng,
                       std::uint64_t values = 4);

struct Refutation {
    enum class Status { Violation, NoViolation, Inconclusive } status = Status::NoViolation;
    std::optional<std::uint64_t> l;
    std::uint64_t len0 = 0, len1 = 0, len2 = 0;
};

// Searches for l in [|theta_0|, min(|theta_1|, |theta_2|)) with card(theta_1 xor theta_2 below l) / l > 2^-w,
// theta_i being the program run on f'[p_i] for inputs below `horizon` (0 means the longest condition).
Refutation goodness_refutation(const FCond& p, std::uint64_t w, const Program& e, const PartialSeq& f2,
                               const FCond& p1, const FCond& p2, std::uint64_t budget = 1000,
                               std::uint64_t horizon = 0);

}  // namespace densecode

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "densecode/density.hpp"
#include "densecode/registry.hpp"

namespace densecode {

// A binary string of arbitrary-precision length stored by its set bits.
struct SparseStr {
    mpz_class len;
    std::vector<mpz_class> ones;  // sorted, all < len

    bool bit(const mpz_class& p) const;
    void flip(const mpz_class& p);
    // Agrees with `other` on [0, len) and is no longer.
    bool prefix_of(const SparseStr& other) const;
    std::optional<std::uint64_t> code() const;
    bool operator==(const SparseStr&) const = default;

    static SparseStr from_bits(const FiniteBitSet& b);
    static SparseStr from_code(std::uint64_t c);
    nlohmann::json to_json() const;
};

// --- pi sequences -----------------------------------------------------------

class PiSeq {
public:
    PiSeq() = default;
    // Validates injectivity, monotone lengths and |pi(n)| <= n.
    explicit PiSeq(std::vector<FiniteBitSet> seq);
    std::size_t size() const { return seq_.size(); }
    const FiniteBitSet& operator()(std::uint64_t n) const;
    const std::vector<FiniteBitSet>& strings() const { return seq_; }

    // All strings in length-lexicographic order; pi(n) = decode_bits(n).
    static PiSeq length_lex(std::size_t count);
    nlohmann::json to_json() const;

private:
    std::vector<FiniteBitSet> seq_;
};

// Pads out-of-order entries of p by all their extensions of a fixed length.
// p(0) must be empty, |p(n)| <= n, p injective, and no p(s) a prefix of an earlier p(t).
PiSeq normalize_pi(const std::vector<FiniteBitSet>& p);
// Height of the longest prefix chain among the strings.
std::size_t longest_chain(const std::vector<FiniteBitSet>& strs);

// #{m < n : pi(m) prefix of pi(n)}.
std::uint64_t i_pi(const PiSeq& pi, std::uint64_t n);
// #{m : pi(m) proper prefix of pi(n)} over the whole computed domain.
std::uint64_t i_pi_all(const PiSeq& pi, std::uint64_t n);

// --- the initial function ---------------------------------------------------

mpz_class f0_at(std::uint64_t x);
SparseStr f0_string(std::uint64_t x);

// --- construction state -----------------------------------------------------

struct Pos {
    std::uint64_t v = 0;  // the position itself, or an index into StageState::loci
    bool locus = false;
    auto operator<=>(const Pos&) const = default;
};

// A position <col, <len - 1, k>> chosen by step ext-U with k = pattern * 2^{col * len},
// so that f0 there codes `pattern`.
struct Locus {
    std::uint64_t col = 0;
    std::uint64_t stage = 0;
    mpz_class len;
    SparseStr pattern;
    std::optional<mpz_class> exact;  // the position, when small enough to write down
};

struct Triple {
    std::uint64_t n = 0, i = 0;
    FiniteBitSet sigma;
};

struct Witness {
    std::uint64_t x = 0;
    std::uint64_t tau_code = 0;
    FiniteBitSet tau;
    std::uint64_t output = 0;
    bool trivial = false;
};

struct StageState {
    std::uint64_t s = 0;
    std::vector<Locus> loci;
    std::map<Pos, SparseStr> f_overlay;
    std::set<std::uint64_t> Z;  // positions where Z = 1
    std::vector<std::set<Pos>> U;
    std::map<std::string, std::set<Pos>> Uhat;  // keyed by the string sigma
    std::map<std::uint64_t, Triple> R;
    std::map<std::uint64_t, std::pair<Triple, std::uint64_t>> RS;
    std::map<std::uint64_t, mpz_class> r;  // explicit values; r(n) = n otherwise
    std::vector<mpz_class> l, lhat;
    std::set<Pos> ever_added;
    mpz_class mentioned;

    mpz_class r_of(std::uint64_t n) const;
    // max_{m < n} r(m), 0 for n = 0.
    mpz_class rbar(std::uint64_t n) const;
    std::uint64_t column_of(Pos p) const;
    // Sign of (position of p) - bound.
    int compare(Pos p, const mpz_class& bound) const;
    nlohmann::json pos_json(Pos p) const;
};

struct InvariantBreach : std::runtime_error {
    std::uint64_t stage;
    std::string checker;
    nlohmann::json detail;
    InvariantBreach(std::uint64_t stage, std::string checker, nlohmann::json detail);
};

SparseStr f_value(const StageState& st, Pos p);
// Y_{i,s}: the common extension of all strings coded on U_i.
SparseStr y_eval(const StageState& st, std::uint64_t i);
bool yi_compatible(const StageState& st, std::uint64_t x, std::uint64_t i);
bool yi_compatible(const StageState& st, std::uint64_t x, std::uint64_t i, const SparseStr& yi);

// theta_sigma on f^{box S} at x, using the current Y sets; nullopt when a needed Y bit is missing.
std::optional<BoxValue> theta_sigma_eval(const StageState& st, const FiniteBitSet& sigma, const FiniteBitSet& S,
                                         std::uint64_t x);

// Membership in the stage approximation of the mask set for tau.
bool in_bbU(const StageState& st, const FiniteBitSet& tau, Pos p);
std::set<Pos> bbU(const StageState& st, const FiniteBitSet& tau);
// U(sigma) = union of U_j over sigma(j) = 1.
std::set<Pos> U_of(const StageState& st, const FiniteBitSet& sigma);

// l_s from the stage and the running quantity C(s).
struct LSchedule {
    std::string name;
    std::function<mpz_class(std::uint64_t, const mpz_class&)> value;

    // l_s = 2^{s+3} (1 + C(s))
    static LSchedule standard();
    // l_s = C(s) + step, for exercising small-l behaviour in tests
    static LSchedule slow(std::uint64_t step);
};

std::optional<Witness> viability_check(const StageState& st, const Triple& t, const FunctionalRegistry& reg,
                                       bool parallel = true);
std::optional<Witness> viability_check_serial(const StageState& st, const Triple& t, const FunctionalRegistry& reg);

struct TraceRecord {
    std::uint64_t stage = 0;
    std::string step;
    nlohmann::json object, before, after;
    nlohmann::json to_json() const;
};
using TraceSink = std::function<void(const TraceRecord&)>;

// What happened during one stage, for the invariant checkers.
struct StageEvents {
    std::uint64_t stage = 0;
    std::optional<Triple> acted;
    std::optional<Witness> witness;
    std::vector<std::uint64_t> entered, left;
    std::vector<std::uint64_t> z_changes;
    struct FChange {
        Pos p;
        mpz_class len_before, len_after;
    };
    std::vector<FChange> f_changes;
    std::vector<std::pair<std::uint64_t, mpz_class>> r_changes;
    std::vector<Pos> added;
};

struct ConstructionConfig {
    bool parallel = true;
    // Longest pi(n) for which l-hat is formed; beyond it the string 1^h is unrepresentable.
    unsigned max_prefix_len = 24;
    // Checker names to leave out; only unit tests of individual steps use this.
    std::set<std::string> skip_checks;
};

// Executes stage st.s and advances st.s.
StageEvents stage_step(StageState& st, const PiSeq& pi, const FunctionalRegistry& reg, const LSchedule& ls,
                       const TraceSink& sink = {}, const ConstructionConfig& cfg = {});

// Runs every per-stage checker; throws InvariantBreach.
class InvariantMonitor {
public:
    explicit InvariantMonitor(std::set<std::string> skip = {}) : skip_(std::move(skip)) {}
    void before(const StageState& st);
    void after(const StageState& st, const StageEvents& ev);
    nlohmann::json summary() const;

private:
    void check_injury(const StageState& st, const StageEvents& ev);
    void check_frozen(const StageState& st);
    void check_hat(const StageState& st);
    void check_y(const StageState& st);
    void check_counts(const StageState& st, const StageEvents& ev);
    void check_overlay(const StageState& st, const StageEvents& ev);
    void check_r(const StageState& st);

    bool enabled(const std::string& name);

    std::set<std::string> skip_;
    std::set<Pos> u_before_, hat_before_;
    std::map<std::uint64_t, std::uint64_t> rs_before_;
    std::map<std::uint64_t, std::uint64_t> enters_, leaves_;
    std::set<Pos> left_u_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> leave_log_;  // (stage, n)
    std::vector<std::pair<std::uint64_t, std::uint64_t>> z_log_;
    std::vector<std::pair<std::uint64_t, Pos>> f_log_;
    std::vector<std::tuple<std::uint64_t, std::uint64_t, mpz_class>> r_log_;
    std::vector<std::uint64_t> below_;  // elements ever added below l_n
    std::map<std::string, std::uint64_t> evaluations_;
    std::vector<nlohmann::json> acts_;
};

struct RunReport {
    std::uint64_t stages = 0;
    bool ok = true;
    std::optional<nlohmann::json> breach;
    nlohmann::json summary;
    StageState final_state;
};

RunReport run(const PiSeq& pi, const FunctionalRegistry& reg, const LSchedule& ls, std::uint64_t T,
              const TraceSink& sink = {}, const ConstructionConfig& cfg = {});

// Exact sum over m < n of 2^m (m + 1) plus the ext-U count n (n + 1) / 2.
mpz_class element_bound(std::uint64_t n);

}  // namespace densecode

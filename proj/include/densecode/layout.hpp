#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "densecode/density.hpp"

namespace densecode {

// Repetition code: Mod_r(sigma) is 2^r consecutive copies of sigma.
FiniteBitSet mod_rep(const FiniteBitSet& sigma, unsigned r);
// Strict majority vote over the 2^r copies; |tau| must be a multiple of 2^r.
FiniteBitSet mod_rep_inv(const FiniteBitSet& tau, unsigned r);

struct ScheduleRow {
    std::uint64_t n = 0;
    std::uint64_t s = 0;
    std::uint64_t b = 1;
};

// Values whose binary exponent would exceed this are treated as unrepresentable.
inline constexpr std::uint64_t kMaxExponent = std::uint64_t{1} << 22;

struct RowGeometry {
    std::uint64_t i = 0, n = 0, s = 0, b = 1;
    std::optional<mpz_class> lprev;   // l_{i-1}
    std::optional<mpz_class> r;
    std::optional<mpz_class> lminus;
    std::optional<mpz_class> l;
    bool representable() const { return l.has_value(); }
};

class LayoutSchedule {
public:
    // i = <n_i, s_i>, b_i = 2 n_i + i + 1.
    static LayoutSchedule paper();
    // Finite list of (n_i, b_i); s_i counts earlier rows with the same n.
    static LayoutSchedule explicit_rows(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& nb);

    bool is_paper() const { return paper_; }
    std::optional<std::uint64_t> row_count() const;
    ScheduleRow row(std::uint64_t i) const;
    std::optional<std::uint64_t> index_of(std::uint64_t n, std::uint64_t s) const;
    // Geometry of row i, computed from l_{-1} = 0 and cached.
    RowGeometry geometry(std::uint64_t i) const;

private:
    bool paper_ = true;
    std::vector<ScheduleRow> rows_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> index_;
    struct Cache {
        std::mutex mu;
        std::vector<RowGeometry> rows;
    };
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// Geometry of a row placed after an arbitrary l_{i-1}.
RowGeometry local_geometry(std::uint64_t n, std::uint64_t b, const mpz_class& lprev);

// Exact layout for rows 0..count-1; throws if any row is unrepresentable.
std::vector<RowGeometry> layout_rows(const LayoutSchedule& sched, std::uint64_t count);

// A set X given by per-row payloads xi_i plus finitely many flipped copy bits.
class SymbolicSet {
public:
    explicit SymbolicSet(LayoutSchedule sched) : sched_(std::move(sched)) {}

    const LayoutSchedule& schedule() const { return sched_; }
    void set_payload(std::uint64_t row, FiniteBitSet xi);
    bool has_row(std::uint64_t row) const { return payload_.count(row) != 0; }
    const FiniteBitSet& payload(std::uint64_t row) const;
    const std::map<std::uint64_t, FiniteBitSet>& payloads() const { return payload_; }
    // Toggle the bit of copy k of coded position x in row `row`.
    void flip(std::uint64_t row, std::uint64_t x, const mpz_class& k);
    std::size_t flip_count(std::uint64_t row, std::uint64_t x) const;
    bool has_flips(std::uint64_t row) const;

    // Majority decode of X/L_row.
    FiniteBitSet row_mod_inv(std::uint64_t row) const;
    // Membership of an absolute position; rows before it must be laid out.
    bool query_bit(const mpz_class& pos) const;
    // |X intersect [0, l_{row-1})|.
    mpz_class count_below_row(std::uint64_t row) const;
    // max over lengths l in [l^-_row, l_row - 1] of |X restricted to l| / l.
    Rational row_window_density(std::uint64_t row) const;
    // Explicit bits of [0, l_row) when small enough.
    FiniteBitSet materialize(std::uint64_t rows) const;

private:
    LayoutSchedule sched_;
    std::map<std::uint64_t, FiniteBitSet> payload_;
    std::map<std::uint64_t, std::map<std::uint64_t, std::set<mpz_class>>> flips_;
};

SymbolicSet assemble(const std::vector<FiniteBitSet>& payloads, const LayoutSchedule& sched);

// Closed-form row window density for a row after `cprev` set bits below l^-.
Rational row_density_closed_form(const RowGeometry& g, const FiniteBitSet& xi, const mpz_class& cprev);

// Density of Mod_r(xi) laid out over [0, l_row) by brute force; the window
// must fit in memory.
Rational row_density_bruteforce(const RowGeometry& g, const FiniteBitSet& xi, const mpz_class& cprev);

// |xi| / 2^n - 2^-b < rho < |xi| / 2^n + 2^-b
bool sandwich_holds(const Rational& rho, const FiniteBitSet& xi, std::uint64_t b);

}  // namespace densecode

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "densecode/density.hpp"

namespace densecode {

// Answer of a BoxSeq oracle; nullopt when the oracle is undefined there.
using OracleFn = std::function<std::optional<BoxValue>(std::uint64_t)>;

enum class ProgramKind { Const, Delay, Echo, BoxProbe, Diverge };

// A deterministic oracle program. Step counts are part of the program so
// that convergence within a budget is a pure function of (x, oracle).
//   const     : output `value` after `cost` steps
//   delay     : output `value` after per_x * (x + 1) steps
//   echo      : query q = <column, x> (or x when column < 0), output the
//               answer mod `mod` (mod 0 keeps it), BOX passes through
//   box_probe : query <column, x>, output if_box on BOX and otherwise else_value
//   diverge   : never halts
struct Program {
    ProgramKind kind = ProgramKind::Diverge;
    std::uint64_t value = 0;
    std::uint64_t cost = 1;
    std::uint64_t per_x = 1;
    std::int64_t column = -1;
    std::uint64_t mod = 0;
    std::uint64_t if_box = 1;
    std::uint64_t else_value = 0;

    static Program from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ProgramRun {
    enum class Status { Halted, OutOfBudget, OracleUndefined };
    Status status = Status::OutOfBudget;
    std::optional<BoxValue> value;
    std::uint64_t steps = 0;
    // Largest position queried, if any.
    std::optional<std::uint64_t> max_query;

    bool halted() const { return status == Status::Halted; }
    // Halted within s steps with every query below s.
    bool converged_by(std::uint64_t s) const;
    // Converged by s with an output in omega rather than BOX.
    std::optional<std::uint64_t> natural_by(std::uint64_t s) const;
};

ProgramRun run_program(const Program& p, std::uint64_t x, const OracleFn& oracle, std::uint64_t budget);

class FunctionalRegistry {
public:
    FunctionalRegistry() = default;
    void set(std::uint64_t index, Program p);
    const Program* find(std::uint64_t index) const;
    std::size_t size() const { return programs_.size(); }
    bool empty() const { return programs_.empty(); }

    // Missing indices behave as divergent programs.
    ProgramRun run(std::uint64_t index, std::uint64_t x, const OracleFn& oracle, std::uint64_t budget) const;

    // Either an array (position = index) or {"programs": [{"index": i, ...}]}.
    static FunctionalRegistry from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // The five-program adversary used by the acceptance run.
    static FunctionalRegistry default_adversary();

private:
    std::map<std::uint64_t, Program> programs_;
};

}  // namespace densecode

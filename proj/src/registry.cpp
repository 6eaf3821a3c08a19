#include "densecode/registry.hpp"

#include <stdexcept>

namespace densecode {

namespace {

const std::map<std::string, ProgramKind> kKinds = {
    {"const", ProgramKind::Const},        {"delay", ProgramKind::Delay},     {"echo", ProgramKind::Echo},
    {"box_probe", ProgramKind::BoxProbe}, {"diverge", ProgramKind::Diverge},
};

std::string kind_name(ProgramKind k) {
    for (auto& [name, kind] : kKinds)
        if (kind == k) return name;
    return "diverge";
}

std::uint64_t query_position(const Program& p, std::uint64_t x) {
    return p.column < 0 ? x : pair(static_cast<std::uint64_t>(p.column), x);
}

}  // namespace

Program Program::from_json(const nlohmann::json& j) {
    Program p;
    auto it = kKinds.find(j.at("kind").get<std::string>());
    if (it == kKinds.end()) throw std::invalid_argument("unknown program kind " + j.at("kind").dump());
    p.kind = it->second;
    p.value = j.value("value", p.value);
    p.cost = j.value("cost", p.cost);
    p.per_x = j.value("per_x", p.per_x);
    p.column = j.value("column", p.column);
    p.mod = j.value("mod", p.mod);
    p.if_box = j.value("if_box", p.if_box);
    p.else_value = j.value("else", p.else_value);
    if (p.cost == 0) throw std::invalid_argument("program cost must be positive");
    return p;
}

nlohmann::json Program::to_json() const {
    nlohmann::json j{{"kind", kind_name(kind)}};
    switch (kind) {
        case ProgramKind::Const: j["value"] = value; j["cost"] = cost; break;
        case ProgramKind::Delay: j["value"] = value; j["per_x"] = per_x; break;
        case ProgramKind::Echo: j["column"] = column; j["mod"] = mod; j["cost"] = cost; break;
        case ProgramKind::BoxProbe: j["column"] = column; j["if_box"] = if_box; j["else"] = else_value; j["cost"] = cost; break;
        case ProgramKind::Diverge: break;
    }
    return j;
}

bool ProgramRun::converged_by(std::uint64_t s) const {
    return halted() && steps <= s && (!max_query || *max_query < s);
}

std::optional<std::uint64_t> ProgramRun::natural_by(std::uint64_t s) const {
    if (!converged_by(s) || !value) return std::nullopt;
    if (auto* v = std::get_if<std::uint64_t>(&*value)) return *v;
    return std::nullopt;
}

ProgramRun run_program(const Program& p, std::uint64_t x, const OracleFn& oracle, std::uint64_t budget) {
    ProgramRun out;
    auto finish = [&](std::uint64_t steps, BoxValue v) {
        if (steps > budget) {
            out.steps = budget;
            return out;
        }
        out.status = ProgramRun::Status::Halted;
        out.steps = steps;
        out.value = v;
        return out;
    };
    switch (p.kind) {
        case ProgramKind::Const:
            return finish(p.cost, p.value);
        case ProgramKind::Delay: {
            // per_x * (x + 1) saturating
            std::uint64_t steps = (x + 1 > ~std::uint64_t{0} / p.per_x) ? ~std::uint64_t{0} : p.per_x * (x + 1);
            return finish(steps, p.value);
        }
        case ProgramKind::Echo:
        case ProgramKind::BoxProbe: {
            if (budget == 0) return out;
            const std::uint64_t q = query_position(p, x);
            out.max_query = q;
            auto a = oracle(q);
            if (!a) {
                out.status = ProgramRun::Status::OracleUndefined;
                out.steps = 1;
                return out;
            }
            const bool boxed = std::holds_alternative<Box>(*a);
            if (p.kind == ProgramKind::BoxProbe) return finish(p.cost, boxed ? p.if_box : p.else_value);
            if (boxed) return finish(p.cost, Box{});
            std::uint64_t v = std::get<std::uint64_t>(*a);
            return finish(p.cost, p.mod ? v % p.mod : v);
        }
        case ProgramKind::Diverge:
            out.steps = budget;
            return out;
    }
    return out;
}

void FunctionalRegistry::set(std::uint64_t index, Program p) { programs_[index] = p; }

const Program* FunctionalRegistry::find(std::uint64_t index) const {
    auto it = programs_.find(index);
    return it == programs_.end() ? nullptr : &it->second;
}

ProgramRun FunctionalRegistry::run(std::uint64_t index, std::uint64_t x, const OracleFn& oracle,
                                   std::uint64_t budget) const {
    if (const Program* p = find(index)) return run_program(*p, x, oracle, budget);
    ProgramRun r;
    r.steps = budget;
    return r;
}

FunctionalRegistry FunctionalRegistry::from_json(const nlohmann::json& j) {
    FunctionalRegistry reg;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) reg.set(i, Program::from_json(j[i]));
        return reg;
    }
    for (auto& e : j.at("programs")) reg.set(e.at("index").get<std::uint64_t>(), Program::from_json(e));
    return reg;
}

nlohmann::json FunctionalRegistry::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& [i, p] : programs_) {
        auto e = p.to_json();
        e["index"] = i;
        arr.push_back(e);
    }
    return {{"programs", arr}};
}

FunctionalRegistry FunctionalRegistry::default_adversary() {
    FunctionalRegistry reg;
    Program p;
    // index 0 serves (0, 0, empty): agrees with Z until it is diagonalized
    p.kind = ProgramKind::Delay;
    p.value = 0;
    p.per_x = 20;
    reg.set(0, p);
    // index 1: disagrees with Z = 0 immediately, so acts via trivial witnesses
    p = Program{};
    p.kind = ProgramKind::Const;
    p.value = 1;
    reg.set(1, p);
    // index 2: reads column 1 and reduces mod 2
    p = Program{};
    p.kind = ProgramKind::Echo;
    p.column = 1;
    p.mod = 2;
    reg.set(2, p);
    // index 3: reports whether <0, x> is masked
    p = Program{};
    p.kind = ProgramKind::BoxProbe;
    p.column = 0;
    reg.set(3, p);
    // index 4: agrees with Z but too slowly to matter
    p = Program{};
    p.kind = ProgramKind::Const;
    p.value = 0;
    p.cost = 150;
    reg.set(4, p);
    return reg;
}

}  // namespace densecode

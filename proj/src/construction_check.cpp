#include <algorithm>

#include "densecode/construction.hpp"

namespace densecode {

namespace {

std::set<Pos> union_of(const std::vector<std::set<Pos>>& sets) {
    std::set<Pos> out;
    for (auto& s : sets) out.insert(s.begin(), s.end());
    return out;
}

std::set<Pos> union_of(const std::map<std::string, std::set<Pos>>& sets) {
    std::set<Pos> out;
    for (auto& [k, s] : sets) out.insert(s.begin(), s.end());
    return out;
}

mpz_class pow2(unsigned long e) {
    mpz_class v;
    mpz_setbit(v.get_mpz_t(), e);
    return v;
}

}  // namespace

mpz_class element_bound(std::uint64_t n) {
    mpz_class b = static_cast<unsigned long>(n * (n + 1) / 2);
    for (std::uint64_t m = 0; m < n; ++m) b += pow2(m) * static_cast<unsigned long>(m + 1);
    return b;
}

bool InvariantMonitor::enabled(const std::string& name) {
    if (skip_.count(name)) return false;
    ++evaluations_[name];
    return true;
}

void InvariantMonitor::before(const StageState& st) {
    u_before_ = union_of(st.U);
    hat_before_ = union_of(st.Uhat);
    rs_before_.clear();
    for (auto& [n, e] : st.RS) rs_before_[n] = e.second;
}

void InvariantMonitor::after(const StageState& st, const StageEvents& ev) {
    if (ev.acted)
        acts_.push_back({{"stage", ev.stage},
                         {"n", ev.acted->n},
                         {"sigma", bits_to_string(ev.acted->sigma)},
                         {"x", ev.witness->x},
                         {"tau", bits_to_string(ev.witness->tau)},
                         {"trivial", ev.witness->trivial}});
    for (auto n : ev.left) leave_log_.emplace_back(ev.stage, n);
    for (auto x : ev.z_changes) z_log_.emplace_back(ev.stage, x);
    for (auto& c : ev.f_changes) f_log_.emplace_back(ev.stage, c.p);
    for (auto& [n, v] : ev.r_changes) r_log_.emplace_back(ev.stage, n, v);
    check_injury(st, ev);
    check_r(st);
    check_frozen(st);
    check_hat(st);
    check_y(st);
    check_counts(st, ev);
    check_overlay(st, ev);
}

void InvariantMonitor::check_injury(const StageState& st, const StageEvents& ev) {
    for (auto n : ev.entered) ++enters_[n];
    for (auto n : ev.left) ++leaves_[n];
    if (!enabled("finite-injury")) return;
    for (auto* counts : {&enters_, &leaves_})
        for (auto& [n, c] : *counts)
            if (n < 63 && c > (std::uint64_t{1} << n))
                throw InvariantBreach(ev.stage, "finite-injury",
                                      {{"n", n}, {"count", c}, {"kind", counts == &enters_ ? "enter" : "leave"}});
    // entering at this stage: the stage's own triple and everything below a leaver
    std::set<std::uint64_t> expect{ev.stage};
    for (auto left : ev.left)
        for (auto& [n, x] : rs_before_)
            if (n > left) expect.insert(n);
    std::set<std::uint64_t> got(ev.entered.begin(), ev.entered.end());
    for (auto n : got) {
        bool justified = n == ev.stage;
        for (auto left : ev.left) justified = justified || (n < ev.stage && left < n);
        if (!justified) throw InvariantBreach(ev.stage, "finite-injury", {{"entered_without_cause", n}});
    }
    if (got != expect)
        throw InvariantBreach(ev.stage, "finite-injury",
                              {{"entered", std::vector<std::uint64_t>(got.begin(), got.end())},
                               {"expected", std::vector<std::uint64_t>(expect.begin(), expect.end())}});
    (void)st;
}

void InvariantMonitor::check_r(const StageState& st) {
    if (!enabled("state-shape")) return;
    for (auto& [n, t] : st.R)
        if (st.RS.count(n)) throw InvariantBreach(st.s - 1, "state-shape", {{"in_R_and_RS", n}});
}

void InvariantMonitor::check_frozen(const StageState& st) {
    if (!enabled("fZ-defined")) return;
    const std::uint64_t now = st.s;  // stages 0..now-1 have run
    for (std::uint64_t n = 0; n < now; ++n) {
        std::int64_t t0 = -1;
        for (auto& [stage, m] : leave_log_)
            if (m <= n) t0 = std::max<std::int64_t>(t0, static_cast<std::int64_t>(stage));
        mpz_class bound = 0;
        for (std::uint64_t m = 0; m <= n; ++m) bound = std::max(bound, st.r_of(m));
        for (auto& [stage, x] : z_log_)
            if (static_cast<std::int64_t>(stage) > t0 && mpz_class(static_cast<unsigned long>(x)) < bound)
                throw InvariantBreach(stage, "fZ-defined", {{"n", n}, {"Z", x}, {"bound", bound.get_str()}});
        for (auto& [stage, p] : f_log_)
            if (static_cast<std::int64_t>(stage) > t0 && st.compare(p, bound) < 0)
                throw InvariantBreach(stage, "fZ-defined", {{"n", n}, {"f", st.pos_json(p)}, {"bound", bound.get_str()}});
        for (auto& [stage, m, v] : r_log_)
            if (static_cast<std::int64_t>(stage) > t0 && m <= n)
                throw InvariantBreach(stage, "fZ-defined", {{"n", n}, {"r", m}});
    }
}

void InvariantMonitor::check_hat(const StageState& st) {
    const std::set<Pos> u_after = union_of(st.U);
    const std::set<Pos> hat_after = union_of(st.Uhat);
    std::vector<Pos> left;
    std::set_difference(u_before_.begin(), u_before_.end(), u_after.begin(), u_after.end(), std::back_inserter(left));
    left_u_.insert(left.begin(), left.end());
    if (!enabled("hatU-takes-from-U")) return;
    const std::uint64_t stage = st.s - 1;
    for (auto p : hat_after)
        if (!hat_before_.count(p) && !std::binary_search(left.begin(), left.end(), p))
            throw InvariantBreach(stage, "hatU-takes-from-U", {{"entered_without_leaving", st.pos_json(p)}});
    for (auto& [key, set] : st.Uhat)
        for (auto p : set) {
            if (!left_u_.count(p))
                throw InvariantBreach(stage, "hatU-takes-from-U", {{"never_left_U", st.pos_json(p)}, {"sigma", key}});
            if (st.column_of(p) < key.size())
                throw InvariantBreach(stage, "hatU-takes-from-U",
                                      {{"column_below_sigma", st.pos_json(p)}, {"sigma", key}});
        }
}

void InvariantMonitor::check_y(const StageState& st) {
    if (!enabled("Yi-well-defined")) return;
    const std::uint64_t t = st.s;
    for (std::uint64_t i = 0; i < st.U.size(); ++i) {
        SparseStr y = y_eval(st, i);  // throws on a conflict
        if (i < t && y.len <= st.lhat.at(t - 1))
            throw InvariantBreach(t - 1, "Yi-well-defined", {{"column", i}, {"short_Y", y.len.get_str()}});
    }
}

void InvariantMonitor::check_counts(const StageState& st, const StageEvents& ev) {
    const std::uint64_t stage = ev.stage;
    for (auto p : ev.added)
        for (std::uint64_t n = 0; n < below_.size(); ++n)
            if (st.compare(p, st.l[n]) < 0) ++below_[n];
    std::uint64_t c = 0;
    for (auto p : st.ever_added)
        if (st.compare(p, st.l[stage]) < 0) ++c;
    below_.push_back(c);
    if (!enabled("U-is-in-I")) return;
    for (std::uint64_t n = 0; n <= stage; ++n) {
        const mpz_class b = element_bound(n);
        const mpz_class ln = st.l[n];
        if (mpz_class(static_cast<unsigned long>(below_[n])) > b)
            throw InvariantBreach(stage, "U-is-in-I", {{"n", n}, {"count", below_[n]}, {"bound", b.get_str()}});
        if ((mpz_class(static_cast<unsigned long>(below_[n])) << n) > ln || (b << n) > ln)
            throw InvariantBreach(stage, "U-is-in-I", {{"n", n}, {"count", below_[n]}, {"l_n", ln.get_str()}});
    }
}

void InvariantMonitor::check_overlay(const StageState& st, const StageEvents& ev) {
    if (enabled("flip-length"))
        for (auto& c : ev.f_changes)
            if (c.len_before != c.len_after)
                throw InvariantBreach(ev.stage, "flip-length", {{"f", st.pos_json(c.p)}});
    if (enabled("f-equal-f0"))
        for (auto& [p, v] : st.f_overlay)
            if (!st.ever_added.count(p)) throw InvariantBreach(ev.stage, "f-equal-f0", {{"f", st.pos_json(p)}});
}

nlohmann::json InvariantMonitor::summary() const {
    nlohmann::json j;
    j["evaluations"] = evaluations_;
    auto counts = [](const std::map<std::uint64_t, std::uint64_t>& m) {
        nlohmann::json o = nlohmann::json::object();
        for (auto& [n, c] : m) o[std::to_string(n)] = c;
        return o;
    };
    j["enters"] = counts(enters_);
    j["leaves"] = counts(leaves_);
    j["acts"] = acts_;
    std::uint64_t injuries = 0;
    for (auto& [n, c] : enters_) injuries += c - 1;
    j["injuries"] = injuries;
    j["r_exits"] = leave_log_.size();
    auto cert = nlohmann::json::array();
    for (std::uint64_t n = 0; n < below_.size(); ++n)
        cert.push_back({{"n", n}, {"below_l_n", below_[n]}, {"bound", element_bound(n).get_str()}});
    j["density_certificate"] = cert;
    return j;
}

RunReport run(const PiSeq& pi, const FunctionalRegistry& reg, const LSchedule& ls, std::uint64_t T,
              const TraceSink& sink, const ConstructionConfig& cfg) {
    if (T == 0) throw std::invalid_argument("run needs at least one stage");
    RunReport rep;
    InvariantMonitor mon(cfg.skip_checks);
    try {
        for (std::uint64_t s = 0; s < T; ++s) {
            mon.before(rep.final_state);
            StageEvents ev = stage_step(rep.final_state, pi, reg, ls, sink, cfg);
            mon.after(rep.final_state, ev);
            ++rep.stages;
        }
    } catch (const InvariantBreach& b) {
        rep.ok = false;
        rep.breach = nlohmann::json{{"stage", b.stage}, {"checker", b.checker}, {"detail", b.detail}};
    }
    rep.summary = mon.summary();
    rep.summary["stages"] = rep.stages;
    rep.summary["ok"] = rep.ok;
    rep.summary["breach"] = rep.breach ? *rep.breach : nlohmann::json(nullptr);
    rep.summary["l_schedule"] = ls.name;
    auto bits = nlohmann::json::array();
    for (auto& l : rep.final_state.l) bits.push_back(mpz_sizeinbase(l.get_mpz_t(), 2));
    rep.summary["l_bits"] = bits;
    return rep;
}

}  // namespace densecode

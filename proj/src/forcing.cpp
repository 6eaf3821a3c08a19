#include "densecode/forcing.hpp"

#include <stdexcept>

namespace densecode {

namespace {

bool within(const Rational& d, std::uint64_t k) { return d <= pow2_neg(static_cast<unsigned long>(k)); }

// cnt / l <= 2^-m
bool ratio_within(std::uint64_t cnt, std::uint64_t l, std::uint64_t m) {
    if (cnt == 0) return true;
    if (m >= 64) return false;
    return static_cast<unsigned __int128>(cnt) << m <= l;
}

bool defined_at(const PartialSeq& f, std::uint64_t x) { return x < f.size() && f[x].has_value(); }

void require_total(const PartialSeq& f, std::uint64_t n, const char* what) {
    for (std::uint64_t x = 0; x < n; ++x)
        if (!defined_at(f, x)) throw std::invalid_argument(std::string(what) + " undefined at " + std::to_string(x));
}

// Largest k' <= k with sigma' of density at most 2^-k'.
std::uint64_t achievable_k(const FiniteBitSet& s, std::uint64_t k) {
    if (s.empty()) return k;
    const std::uint64_t n = s.size(), c = s.count();
    std::uint64_t best = 0;
    while (best < k && ratio_within(c, n, best + 1)) ++best;
    return best;
}

FCond raw(const FiniteBitSet& sigma, std::uint64_t k, const Gamma& gamma) {
    FCond q;
    q.sigma = sigma;
    q.k = k;
    q.gamma = gamma;
    return q;
}

}  // namespace

bool ICond::valid() const {
    if (sigma.empty()) return true;
    return within(window_density(sigma, sigma.size(), sigma.size()), k);
}

bool icond_leq(const ICond& p, const ICond& q) {
    if (!p.valid() || !q.valid() || q.k < p.k || !is_prefix(p.sigma, q.sigma)) return false;
    if (q.sigma.empty()) return true;
    const std::uint64_t a = std::max<std::uint64_t>(p.sigma.size(), 1);
    return within(window_density(q.sigma, a, q.sigma.size()), p.k);
}

bool realizes_window(const FiniteBitSet& S, const ICond& p) {
    if (!p.valid() || !is_prefix(p.sigma, S)) return false;
    if (S.empty()) return true;
    const std::uint64_t a = std::max<std::uint64_t>(p.sigma.size(), 1);
    return within(window_density(S, a, S.size()), p.k);
}

bool pcond_leq(const PCond& a, const PCond& b) {
    if (a.tau.size() > b.tau.size()) return false;
    for (std::size_t i = 0; i < a.tau.size(); ++i)
        if (a.tau[i] != b.tau[i]) return false;
    return icond_leq(a.p, b.p);
}

FCond FCond::make(FiniteBitSet sigma, std::uint64_t k, Gamma gamma) {
    FCond q = raw(sigma, k, gamma);
    if (!q.icond().valid()) throw std::invalid_argument("mask too dense for k");
    std::size_t ones = 0;
    for (std::size_t x = 0; x < sigma.size(); ++x)
        if (sigma[x]) {
            ++ones;
            if (!gamma.count(x)) throw std::invalid_argument("gamma undefined at masked " + std::to_string(x));
        }
    if (ones != gamma.size()) throw std::invalid_argument("gamma defined off the mask");
    return q;
}

FCond FCond::from_json(const nlohmann::json& j) {
    Gamma g;
    if (j.contains("gamma"))
        for (auto& [key, v] : j.at("gamma").items()) g[std::stoull(key)] = v.get<std::uint64_t>();
    return make(bits_from_string(j.at("sigma").get<std::string>()), j.value("k", std::uint64_t{0}), g);
}

nlohmann::json FCond::to_json() const {
    nlohmann::json g = nlohmann::json::object();
    for (auto& [x, v] : gamma) g[std::to_string(x)] = v;
    return {{"sigma", bits_to_string(sigma)}, {"k", k}, {"gamma", g}};
}

bool fcond_leq(const FCond& q, const FCond& q2) {
    for (auto& [x, v] : q.gamma) {
        auto it = q2.gamma.find(x);
        if (it == q2.gamma.end() || it->second != v) return false;
    }
    return icond_leq(q.icond(), q2.icond());
}

PartialSeq apply_overlay(const PartialSeq& f, const FCond& q) {
    PartialSeq out(q.sigma.size());
    for (std::uint64_t x = 0; x < q.sigma.size(); ++x) {
        if (q.sigma[x]) {
            out[x] = q.gamma.at(x);
        } else {
            if (!defined_at(f, x)) throw std::invalid_argument("f undefined at " + std::to_string(x));
            out[x] = f[x];
        }
    }
    return out;
}

bool fproper(const FCond& q, const PartialSeq& f) {
    for (auto& [x, v] : q.gamma)
        if (defined_at(f, x) && *f[x] == v) return false;
    return true;
}

bool fgeq_window(const PartialSeq& h, const FCond& q, const PartialSeq& f) {
    const PartialSeq fq = apply_overlay(f, q);
    if (h.size() < fq.size()) return false;
    for (std::size_t x = 0; x < fq.size(); ++x)
        if (h[x] != fq[x]) return false;
    const FiniteBitSet d = symdiff(h, f);
    const std::uint64_t a = std::max<std::uint64_t>(q.sigma.size(), 1);
    if (a > d.size()) return true;
    return within(window_density(d, a, d.size()), q.k);
}

Translation translate(const FCond& p, const PartialSeq& f, const PartialSeq& f2) {
    const std::uint64_t n = p.sigma.size();
    require_total(f, n, "f");
    require_total(f2, n, "f'");
    const PartialSeq fp = apply_overlay(f, p);
    FiniteBitSet s(n);
    Gamma g;
    for (std::uint64_t x = 0; x < n; ++x) {
        if (fp[x] != f2[x]) s.set(x);
        auto it = p.gamma.find(x);
        if (it != p.gamma.end()) {
            if (s[x]) g[x] = it->second;
        } else if (f[x] != f2[x]) {
            g[x] = *f[x];
        }
    }
    Translation t;
    t.k_original = p.k;
    t.cond = raw(s, achievable_k(s, p.k), g);
    t.keeps_k = t.cond.k == p.k;
    return t;
}

TranslateExtend translate_extend(const FCond& q1, const PartialSeq& f, const PartialSeq& f2) {
    if (!fproper(q1, f)) throw std::invalid_argument("condition is not proper for f");
    const std::uint64_t l1 = q1.sigma.size();
    std::uint64_t L = 0;
    while (defined_at(f, L) && defined_at(f2, L)) ++L;
    const std::uint64_t m = q1.k + 3;

    // ok_from[l]: every l' in [l, L] has the symmetric difference within 2^-m
    std::vector<std::uint64_t> cnt(L + 1, 0);
    for (std::uint64_t x = 0; x < L; ++x) cnt[x + 1] = cnt[x] + (*f[x] != *f2[x]);
    std::vector<char> ok_from(L + 2, 1);
    for (std::uint64_t l = L; l >= 1; --l) ok_from[l] = ok_from[l + 1] && ratio_within(cnt[l], l, m);
    std::uint64_t l2 = 0;
    for (std::uint64_t l = 8 * l1 + 1; l <= L; ++l)
        if (ok_from[l]) {
            l2 = l;
            break;
        }
    if (l2 == 0) throw std::runtime_error("prefix too short");

    TranslateExtend te;
    te.l2 = l2;
    FiniteBitSet s2 = q1.sigma;
    s2.resize(l2);
    te.q2 = FCond::make(s2, q1.k, q1.gamma);
    te.p3 = translate(te.q2, f, f2);
    te.k3_equals_k1 = te.p3.cond.k == q1.k;
    te.card_preserved = s2.count() == q1.sigma.count();
    te.q4 = FCond::make(s2, q1.k + 2, q1.gamma);
    return te;
}

bool check_forward(const TranslateExtend& te, const FCond& q, const PartialSeq& f, const PartialSeq& f2) {
    if (!fcond_leq(te.q4, q)) throw std::invalid_argument("condition does not extend q4");
    const FCond p3 = raw(te.p3.cond.sigma, te.p3.k_original, te.p3.cond.gamma);
    return fcond_leq(p3, translate(q, f, f2).cond);
}

bool check_round_trip(const TranslateExtend& te, const FCond& q1, const FCond& p5, const PartialSeq& f,
                      const PartialSeq& f2) {
    const Translation t4 = translate(te.q4, f, f2);
    const FCond q4t = raw(t4.cond.sigma, t4.k_original, t4.cond.gamma);
    if (!fcond_leq(q4t, p5)) throw std::invalid_argument("condition does not extend the translated q4");
    return fcond_leq(q1, translate(p5, f2, f).cond);
}

FCond random_extension(const FCond& q, std::uint64_t len, const PartialSeq& g, std::mt19937_64& rng,
                       std::uint64_t values) {
    if (len < q.sigma.size()) throw std::invalid_argument("extension shorter than the condition");
    if (values < 2) throw std::invalid_argument("need at least two values");
    const std::uint64_t n0 = q.sigma.size();
    std::uint64_t k2 = q.k + rng() % 2;
    const std::uint64_t rate = std::uint64_t{1} << std::min<std::uint64_t>(k2 + 2, 62);
    FCond e = raw(q.sigma, k2, q.gamma);
    e.sigma.resize(len);
    std::vector<std::uint64_t> added;
    for (std::uint64_t x = n0; x < len; ++x) {
        if (rng() % rate) continue;
        std::uint64_t v = rng() % values;
        if (defined_at(g, x) && v == *g[x]) v = (v + 1) % values;
        e.sigma.set(x);
        e.gamma[x] = v;
        added.push_back(x);
    }
    auto fits = [&] { return icond_leq(q.icond(), e.icond()); };
    while (!fits() && !added.empty()) {
        e.sigma.reset(added.back());
        e.gamma.erase(added.back());
        added.pop_back();
    }
    if (!fits()) e.k = q.k;  // zero padding never raises the density
    return e;
}

Refutation goodness_refutation(const FCond& p, std::uint64_t w, const Program& e, const PartialSeq& f2,
                               const FCond& p1, const FCond& p2, std::uint64_t budget, std::uint64_t horizon) {
    if (!fcond_leq(p, p1) || !fcond_leq(p, p2)) throw std::invalid_argument("p1 and p2 must extend p");
    const std::uint64_t H =
        horizon ? horizon : std::max({p.sigma.size(), p1.sigma.size(), p2.sigma.size()});
    Refutation out;
    bool inconclusive = false;

    auto theta = [&](const FCond& c) {
        const PartialSeq g = apply_overlay(f2, c);
        OracleFn oracle = [&](std::uint64_t q) -> std::optional<BoxValue> {
            if (defined_at(g, q)) return *g[q];
            return std::nullopt;
        };
        std::vector<BoxValue> th;
        for (std::uint64_t y = 0; y < H; ++y) {
            ProgramRun r = run_program(e, y, oracle, budget);
            if (r.status == ProgramRun::Status::OracleUndefined) break;
            if (r.status != ProgramRun::Status::Halted) {
                inconclusive = true;
                break;
            }
            th.push_back(*r.value);
        }
        return th;
    };
    const auto t0 = theta(p), t1 = theta(p1), t2 = theta(p2);
    out.len0 = t0.size();
    out.len1 = t1.size();
    out.len2 = t2.size();
    if (inconclusive) {
        out.status = Refutation::Status::Inconclusive;
        return out;
    }
    const std::uint64_t hi = std::min(t1.size(), t2.size());
    std::uint64_t diff = 0;
    for (std::uint64_t l = 1; l < hi; ++l) {
        diff += t1[l - 1] != t2[l - 1];
        if (l >= out.len0 && !ratio_within(diff, l, w)) {
            out.status = Refutation::Status::Violation;
            out.l = l;
            return out;
        }
    }
    return out;
}

}  // namespace densecode

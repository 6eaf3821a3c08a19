#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "densecode/forcing.hpp"

using namespace densecode;

namespace {

// every l in [a, b] has count(l) * 2^k <= l
bool dens_ok(const FiniteBitSet& s, std::uint64_t a, std::uint64_t b, std::uint64_t k) {
    std::uint64_t c = 0;
    for (std::uint64_t l = 1; l <= b; ++l) {
        c += s[l - 1];
        if (l >= a && (c << k) > l) return false;
    }
    return true;
}

ICond ic(const char* s, std::uint64_t k) { return {bits_from_string(s), k}; }

PartialSeq seq(std::initializer_list<std::uint64_t> v) {
    PartialSeq out;
    for (auto x : v) out.emplace_back(x);
    return out;
}

ICond random_icond(std::mt19937_64& rng, std::size_t maxlen) {
    for (;;) {
        ICond p;
        p.sigma.resize(rng() % (maxlen + 1));
        for (std::size_t i = 0; i < p.sigma.size(); ++i) p.sigma[i] = rng() % 4 == 0;
        p.k = rng() % 4;
        if (p.valid()) return p;
    }
}

FCond random_proper(std::mt19937_64& rng, std::size_t n, const PartialSeq& f, std::uint64_t values) {
    FCond q;
    q.sigma.resize(n);
    for (std::size_t x = 0; x < n; ++x)
        if (rng() % 3 == 0) {
            q.sigma.set(x);
            std::uint64_t v = rng() % values;
            if (v == *f[x]) v = (v + 1) % values;
            q.gamma[x] = v;
        }
    return q;
}

PartialSeq random_seq(std::mt19937_64& rng, std::size_t n, std::uint64_t values) {
    PartialSeq f(n);
    for (auto& v : f) v = rng() % values;
    return f;
}

}  // namespace

TEST_CASE("density conditions") {
    CHECK(ICond{}.valid());
    CHECK(ic("", 9).valid());
    CHECK(ic("0100", 2).valid());
    CHECK(!ic("0100", 3).valid());
    CHECK(!ic("1", 1).valid());

    CHECK(icond_leq(ic("0100", 2), ic("0100", 2)));
    CHECK(icond_leq(ic("0", 1), ic("01", 1)));  // 1/2 <= 1/2 at l = 2
    CHECK(!icond_leq(ic("0", 1), ic("01", 2)));
    CHECK(!icond_leq(ic("0", 2), ic("01", 2)));
    CHECK(!icond_leq(ic("01", 1), ic("0", 1)));
    CHECK(!icond_leq(ic("00", 1), ic("10", 1)));

    std::mt19937_64 rng(21);
    for (int t = 0; t < 500; ++t) {
        ICond p = random_icond(rng, 8);
        for (std::size_t m = 0; m < 10; ++m) {
            ICond q{p.sigma, p.k + 1};
            q.sigma.resize(p.sigma.size() + m);
            const bool pass = q.valid() && (q.sigma.empty() ||
                                            dens_ok(q.sigma, std::max<std::size_t>(p.sigma.size(), 1), q.sigma.size(), p.k));
            REQUIRE(icond_leq(p, q) == pass);
            if (p.sigma.count() == 0) REQUIRE(icond_leq(p, q));
        }
    }
}

TEST_CASE("density conditions form a partial order") {
    std::mt19937_64 rng(22);
    std::vector<ICond> pool;
    for (int i = 0; i < 250; ++i) pool.push_back(random_icond(rng, 6));
    pool.push_back(ICond{});
    for (auto& a : pool) {
        REQUIRE(icond_leq(a, a));
        for (auto& b : pool) {
            const bool ab = icond_leq(a, b);
            // independent reading of the three clauses
            const bool want = b.k >= a.k && is_prefix(a.sigma, b.sigma) &&
                              (b.sigma.empty() ||
                               dens_ok(b.sigma, std::max<std::size_t>(a.sigma.size(), 1), b.sigma.size(), a.k));
            REQUIRE(ab == want);
            if (ab && icond_leq(b, a)) REQUIRE(a == b);
            if (!ab) continue;
            for (int j = 0; j < 20; ++j) {
                auto& c = pool[rng() % pool.size()];
                if (icond_leq(b, c)) REQUIRE(icond_leq(a, c));
            }
        }
    }
}

TEST_CASE("realizing a condition over a window") {
    ICond p = ic("0100", 2);
    FiniteBitSet S = p.sigma;
    S.resize(40);
    CHECK(realizes_window(S, p));
    for (std::size_t i = 4; i < 40; ++i) S.set(i);
    CHECK(!realizes_window(S, p));
    // 2 of 8 at l = 8, exactly 2^-2
    CHECK(realizes_window(bits_from_string("01000001"), p));
    CHECK(!realizes_window(bits_from_string("01000011"), p));
    CHECK(!realizes_window(bits_from_string("0000"), p));
    CHECK(realizes_window(FiniteBitSet{}, ICond{}));
}

TEST_CASE("conditions over functions") {
    CHECK_THROWS_AS(FCond::make(bits_from_string("0100"), 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(FCond::make(bits_from_string("0100"), 2, {{0, 1}, {1, 3}}), std::invalid_argument);
    CHECK_THROWS_AS(FCond::make(bits_from_string("0100"), 3, {{1, 3}}), std::invalid_argument);
    FCond q = FCond::make(bits_from_string("0100"), 2, {{1, 3}});
    CHECK(FCond::from_json(nlohmann::json::parse(R"({"sigma": "0100", "k": 2, "gamma": {"1": 3}})")) == q);
    CHECK(FCond::from_json(q.to_json()) == q);

    const PartialSeq f = seq({7, 7, 7, 7});
    CHECK(apply_overlay(f, q) == seq({7, 3, 7, 7}));
    FCond zero = FCond::make(bits_from_string("000"), 5, {});
    CHECK(apply_overlay(f, zero) == seq({7, 7, 7}));
    CHECK(apply_overlay(seq({7, 7}), FCond::make(bits_from_string("001"), 0, {{2, 1}})) == seq({7, 7, 1}));
    CHECK_THROWS_AS(apply_overlay(seq({7}), q), std::invalid_argument);

    CHECK(fproper(q, f));
    CHECK(!fproper(q, seq({7, 3, 7, 7})));

    // h = f[q] followed by f: h xor f is the single masked position
    PartialSeq h = apply_overlay(f, q);
    for (int i = 0; i < 12; ++i) {
        h.emplace_back(7);
    }
    PartialSeq fl(16, std::optional<std::uint64_t>(7));
    CHECK(fgeq_window(h, q, fl));
    h[6] = 0;  // 2 of 7 at l = 7 exceeds 1/4
    CHECK(!fgeq_window(h, q, fl));
    h[6] = 7;
    h[2] = 0;
    CHECK(!fgeq_window(h, q, fl));

    FCond a = FCond::make(bits_from_string("0100"), 1, {{1, 3}});
    FCond b = FCond::make(bits_from_string("01000"), 2, {{1, 3}});
    CHECK(fcond_leq(a, b));
    CHECK(!fcond_leq(b, a));
    CHECK(!fcond_leq(a, FCond::make(bits_from_string("01000"), 2, {{1, 4}})));
}

TEST_CASE("translation") {
    const PartialSeq f = seq({7, 7, 7, 7});
    FCond p = FCond::make(bits_from_string("0100"), 1, {{1, 3}});
    auto t = translate(p, f, seq({8, 3, 7, 7}));
    CHECK(bits_to_string(t.cond.sigma) == "1000");
    CHECK(t.cond.gamma == Gamma{{0, 7}});
    CHECK(t.k_original == 1);
    CHECK(t.keeps_k);

    // f' = f on a proper condition gives back the condition
    auto same = translate(p, f, f);
    CHECK(same.cond.sigma == p.sigma);
    CHECK(same.cond.gamma == p.gamma);

    // a dense symmetric difference drops k but never below 0
    FCond p3 = FCond::make(bits_from_string("0000"), 3, {});
    auto d = translate(p3, f, seq({0, 0, 0, 7}));
    CHECK(d.cond.k == 0);
    CHECK(!d.keeps_k);
    CHECK(d.cond.icond().valid());
    auto d1 = translate(p3, f, seq({0, 7, 7, 7}));
    CHECK(d1.cond.k == 2);

    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::size_t n = rng() % 12;
        const PartialSeq f0 = random_seq(rng, n, 3), f1 = random_seq(rng, n, 3);
        FCond q = random_proper(rng, n, f0, 3);
        auto fw = translate(q, f0, f1);
        REQUIRE(apply_overlay(f1, fw.cond) == apply_overlay(f0, q));
        REQUIRE(fproper(fw.cond, f1));
        auto back = translate(fw.cond, f1, f0);
        REQUIRE(back.cond.sigma == q.sigma);
        REQUIRE(back.cond.gamma == q.gamma);
        // the mask only moves inside sigma union (f xor f')
        for (std::size_t x = 0; x < n; ++x)
            if (fw.cond.sigma[x]) REQUIRE((q.sigma[x] || f0[x] != f1[x]));
    }
}

TEST_CASE("overlay coherence, every configuration up to length 3") {
    std::uint64_t checked = 0;
    for (unsigned n = 0; n <= 3; ++n) {
        std::uint64_t P = 1;
        for (unsigned i = 0; i < n; ++i) P *= 36;
        for (std::uint64_t c = 0; c < P; ++c) {
            std::uint64_t r = c;
            FCond q;
            q.sigma.resize(n);
            PartialSeq f(n), g(n);
            for (unsigned x = 0; x < n; ++x, r /= 36) {
                unsigned d = r % 36;
                if (d < 9) {
                    f[x] = d % 3;
                    g[x] = d / 3;
                } else {
                    d -= 9;
                    q.sigma.set(x);
                    q.gamma[x] = d % 3;
                    f[x] = (d / 3) % 3;
                    g[x] = d / 9;
                }
            }
            REQUIRE(apply_overlay(g, translate(q, f, g).cond) == apply_overlay(f, q));
            ++checked;
        }
    }
    CHECK(checked == 1 + 36 + 36 * 36 + 36 * 36 * 36);
}

TEST_CASE("translate and extend") {
    std::mt19937_64 rng(24);
    SUBCASE("identical functions") {
        PartialSeq f = random_seq(rng, 200, 4);
        FCond q1 = FCond::make(bits_from_string("00100"), 1, {{2, (*f[2] + 1) % 4}});
        auto te = translate_extend(q1, f, f);
        CHECK(te.l2 == 41);
        CHECK(te.card_preserved);
        CHECK(te.k3_equals_k1);
        CHECK(te.p3.cond.sigma.count() == 1);
        CHECK(fcond_leq(q1, te.q2));
        CHECK(fcond_leq(te.q2, te.q4));
        CHECK(te.q4.k == 3);
    }
    SUBCASE("sprinkled differences above 8 l1") {
        const std::uint64_t k1 = 1, l1 = 8, L = 4000;
        PartialSeq f = random_seq(rng, L, 4), f2 = f;
        const std::uint64_t gap = std::uint64_t{1} << (k1 + 4);
        for (std::uint64_t x = 8 * l1 + 1; x < L; x += gap) f2[x] = (*f[x] + 1) % 4;
        FiniteBitSet s(l1);
        s.set(3);
        FCond q1 = FCond::make(s, k1, {{3, (*f[3] + 2) % 4}});
        auto te = translate_extend(q1, f, f2);
        CHECK(te.l2 > 8 * l1);
        CHECK(te.k3_equals_k1);
        CHECK(te.card_preserved);
        const Translation t4 = translate(te.q4, f, f2);
        FCond q4t = FCond::make(t4.cond.sigma, t4.k_original, t4.cond.gamma);
        int rounds = 0;
        for (int i = 0; i < 1000; ++i) {
            const std::uint64_t len = te.l2 + rng() % (L - te.l2);
            FCond p5 = random_extension(q4t, len, f2, rng);
            REQUIRE(fcond_leq(q4t, p5));
            REQUIRE(fproper(p5, f2));
            REQUIRE(check_round_trip(te, q1, p5, f, f2));
            FCond q = random_extension(te.q4, len, f, rng);
            REQUIRE(check_forward(te, q, f, f2));
            ++rounds;
        }
        CHECK(rounds == 1000);
    }
    SUBCASE("half the positions differ") {
        PartialSeq f = random_seq(rng, 500, 4), f2 = f;
        for (std::size_t x = 0; x < f.size(); x += 2) f2[x] = (*f[x] + 1) % 4;
        CHECK_THROWS_WITH_AS(translate_extend(FCond::make(bits_from_string("0"), 0, {}), f, f2), "prefix too short",
                             std::runtime_error);
    }
    SUBCASE("improper input") {
        PartialSeq f = random_seq(rng, 100, 4);
        CHECK_THROWS_AS(translate_extend(FCond::make(bits_from_string("1000"), 1, {{0, *f[0]}}), f, f),
                        std::invalid_argument);
    }
}

TEST_CASE("refuting goodness") {
    const PartialSeq f2(32, std::optional<std::uint64_t>(2));
    FCond p = FCond::make(FiniteBitSet(8), 2, {});
    FiniteBitSet s(16);
    s.set(10);
    FCond p1 = FCond::make(s, 2, {{10, 0}});
    FCond p2 = FCond::make(s, 2, {{10, 1}});
    Program echo;
    echo.kind = ProgramKind::Echo;

    auto same = goodness_refutation(p, 4, echo, f2, p1, p1);
    CHECK(same.status == Refutation::Status::NoViolation);
    CHECK(same.len0 == 8);
    CHECK(same.len1 == 16);

    auto v = goodness_refutation(p, 4, echo, f2, p1, p2);
    CHECK(v.status == Refutation::Status::Violation);
    CHECK(v.l == 11);  // 1/11 > 1/16
    // 1/l <= 1/8 for every l >= |theta_0| = 8
    CHECK(goodness_refutation(p, 3, echo, f2, p1, p2).status == Refutation::Status::NoViolation);

    Program k;
    k.kind = ProgramKind::Const;
    k.value = 1;
    CHECK(goodness_refutation(p, 9, k, f2, p1, p2).status == Refutation::Status::NoViolation);

    Program slow;
    slow.kind = ProgramKind::Delay;
    slow.per_x = 100;
    CHECK(goodness_refutation(p, 4, slow, f2, p1, p2, 1000).status == Refutation::Status::Inconclusive);
    CHECK(goodness_refutation(p, 4, Program{}, f2, p1, p2).status == Refutation::Status::Inconclusive);

    CHECK_THROWS_AS(goodness_refutation(p1, 4, echo, f2, p, p2), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "densecode/layout.hpp"

using namespace densecode;

namespace {

FiniteBitSet random_bits(std::mt19937_64& rng, std::size_t n) {
    FiniteBitSet b(n);
    for (std::size_t i = 0; i < n; ++i)
        if (rng() & 1) b.set(i);
    return b;
}

FiniteBitSet all_strings(std::size_t len, std::uint64_t v) {
    FiniteBitSet b(len);
    for (std::size_t i = 0; i < len; ++i)
        if ((v >> i) & 1) b.set(i);
    return b;
}

mpz_class p2(unsigned long e) { return mpz_class(1) << e; }

}  // namespace

TEST_CASE("repetition code examples") {
    CHECK(bits_to_string(mod_rep(bits_from_string("01"), 1)) == "0101");
    CHECK(mod_rep(bits_from_string("011"), 0) == bits_from_string("011"));
    CHECK(bits_to_string(mod_rep_inv(bits_from_string("0111"), 1)) == "01");
    CHECK(bits_to_string(mod_rep_inv(bits_from_string("1100"), 1)) == "00");
    CHECK_THROWS(mod_rep_inv(bits_from_string("011"), 1));
    CHECK_THROWS(mod_rep(FiniteBitSet{}, 1));
}

TEST_CASE("repetition code laws exhaustive") {
    for (std::size_t len = 1; len <= 6; ++len)
        for (unsigned r = 0; r <= 3; ++r) {
            const std::size_t copies = std::size_t{1} << r;
            for (std::uint64_t a = 0; a < (1u << len); ++a) {
                auto s = all_strings(len, a);
                auto ms = mod_rep(s, r);
                REQUIRE(ms.count() == copies * s.count());
                REQUIRE(mod_rep_inv(ms, r) == s);
                for (std::uint64_t b = 0; b < (1u << len); ++b) {
                    auto t = all_strings(len, b);
                    REQUIRE((ms ^ mod_rep(t, r)) == mod_rep(s ^ t, r));
                }
            }
        }
}

TEST_CASE("paper schedule geometry") {
    auto sched = LayoutSchedule::paper();
    auto rows = layout_rows(sched, 3);
    CHECK(rows[0].n == 0);
    CHECK(rows[0].s == 0);
    CHECK(rows[0].b == 1);
    CHECK(*rows[0].r == 2);
    CHECK(*rows[0].lminus == 2);
    CHECK(*rows[0].l == 6);
    CHECK(rows[1].n == 1);
    CHECK(rows[1].s == 0);
    CHECK(rows[1].b == 4);
    CHECK(*rows[1].r == 15);
    CHECK(*rows[1].lminus == p2(11));
    CHECK(*rows[1].l == p2(11) + p2(16));
    CHECK(rows[2].n == 0);
    CHECK(rows[2].s == 1);
    CHECK(rows[2].b == 3);
    CHECK(*rows[2].r == 67590);
    CHECK(*rows[2].lminus == p2(67587));
    for (auto& g : rows) {
        CHECK(*g.r == 2 * g.b + g.n + *g.lprev);
        CHECK(*g.lprev < *g.lminus);
        CHECK(*g.lminus < *g.l);
    }
    CHECK_FALSE(sched.geometry(3).representable());
    CHECK_THROWS(layout_rows(sched, 4));
    CHECK_THROWS(LayoutSchedule::explicit_rows({{0, 1}, {1, 0}}));
}

TEST_CASE("symbolic queries agree with materialized bits") {
    auto sched = LayoutSchedule::paper();
    auto X = assemble({bits_from_string("1"), bits_from_string("01")}, sched);
    for (int p = 0; p < 6; ++p) CHECK(X.query_bit(p) == (p >= 2));
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> nb;
        nb.push_back({rng() % 3, 1 + rng() % 3});
        nb.push_back({rng() % 2, 1});
        auto s = LayoutSchedule::explicit_rows(nb);
        auto g1 = s.geometry(1);
        if (!g1.representable() || *g1.l > p2(22)) continue;
        std::vector<FiniteBitSet> pay;
        for (auto& [n, b] : nb) pay.push_back(random_bits(rng, std::size_t{1} << n));
        auto Y = assemble(pay, s);
        if (rng() & 1) Y.flip(1, 0, 3);
        auto bits = Y.materialize(2);
        for (std::size_t p = 0; p < bits.size(); p += 1 + rng() % 37)
            REQUIRE(Y.query_bit(static_cast<unsigned long>(p)) == bits.test(p));
        CHECK_THROWS(Y.query_bit(static_cast<unsigned long>(bits.size())));
    }
}

TEST_CASE("paper row 0 sandwich") {
    auto X = assemble({bits_from_string("1")}, LayoutSchedule::paper());
    auto rho = X.row_window_density(0);
    CHECK(rho > make_rational(1, 2));
    CHECK(rho < make_rational(3, 2));
    CHECK(sandwich_holds(rho, X.payload(0), 1));
}

TEST_CASE("closed form matches brute force and the sandwich holds") {
    std::mt19937_64 rng(2);
    int checked = 0;
    for (int trial = 0; trial < 400; ++trial) {
        std::uint64_t n = rng() % 4, b = 1 + rng() % 6;
        std::uint64_t lprev = rng() % 12;
        auto g = local_geometry(n, b, lprev);
        auto xi = random_bits(rng, std::size_t{1} << n);
        mpz_class cprev = static_cast<unsigned long>(rng() % (lprev + 1));
        auto closed = row_density_closed_form(g, xi, cprev);
        if (*g.l <= p2(22)) {
            REQUIRE(closed == row_density_bruteforce(g, xi, cprev));
            ++checked;
        }
        CHECK(sandwich_holds(closed, xi, b));
    }
    CHECK(checked > 100);
}

TEST_CASE("row window density with flips streams the row") {
    auto s = LayoutSchedule::explicit_rows({{1, 1}});
    auto X = assemble({bits_from_string("10")}, s);
    auto clean = X.row_window_density(0);
    X.flip(0, 1, 0);
    X.flip(0, 1, 0);
    CHECK(X.row_window_density(0) == clean);
    X.flip(0, 1, 0);
    CHECK(X.row_window_density(0) > clean);
    CHECK(X.row_mod_inv(0) == bits_from_string("10"));
}

TEST_CASE("majority decode tolerates corruption below half") {
    auto X = assemble({bits_from_string("1"), bits_from_string("01")}, LayoutSchedule::paper());
    // row 0 has 4 copies: one flip is tolerated, two are not
    X.flip(0, 0, 0);
    CHECK(X.row_mod_inv(0) == bits_from_string("1"));
    X.flip(0, 0, 1);
    CHECK(X.row_mod_inv(0) == bits_from_string("0"));
    for (unsigned long k = 0; k < 100; ++k) X.flip(1, 0, k);
    CHECK(X.row_mod_inv(1) == bits_from_string("01"));
    CHECK(X.count_below_row(1) == 2);
}

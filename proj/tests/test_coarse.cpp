#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "densecode/coarse.hpp"

using namespace densecode;

namespace {

PartialSeq random_f(std::mt19937_64& rng, std::size_t len, std::uint64_t V) {
    PartialSeq f(len);
    f[0] = 0;
    for (std::size_t x = 1; x < len; ++x) f[x] = uniform_below(rng, V);
    return f;
}

}  // namespace

TEST_CASE("gamma on row 0") {
    auto sched = LayoutSchedule::paper();
    auto zero = gamma_prefix(PartialSeq{0, 0}, sched, 1);
    auto bits0 = zero.X.materialize(1);
    CHECK(bits_to_string(bits0) == "000000");
    auto one = gamma_prefix(PartialSeq{0, 1}, sched, 1);
    CHECK(bits_to_string(one.X.materialize(1)) == "001111");
    CHECK_THROWS(gamma_prefix(PartialSeq{0}, sched, 1));
}

TEST_CASE("gamma is interval-local") {
    auto sched = LayoutSchedule::paper();
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) {
        auto f = random_f(rng, 8, 4);
        auto g = f;
        for (std::size_t x = 4; x < 8; ++x) g[x] = uniform_below(rng, 4);
        // rows with n <= 1 read only I_0 and I_1
        for (std::uint64_t s = 0; s < 20; ++s) {
            CHECK(gamma_payload(f, sched, pair(0, s)) == gamma_payload(g, sched, pair(0, s)));
            CHECK(gamma_payload(f, sched, pair(1, s)) == gamma_payload(g, sched, pair(1, s)));
        }
    }
}

TEST_CASE("round trip on I_0 and I_1") {
    auto sched = LayoutSchedule::paper();
    auto rows = rows_for_values(sched, 1, 3);
    for (std::uint64_t a = 0; a < 4; ++a)
        for (std::uint64_t b = 0; b < 4; ++b)
            for (std::uint64_t c = 0; c < 4; ++c) {
                PartialSeq f{0, a, b, c};
                auto img = gamma_rows(f, sched, rows);
                REQUIRE(gamma_hat_prefix(img.X, 1) == f);
            }
}

TEST_CASE("round trip on I_2 under a desk schedule") {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> nb;
    // 4^4 * 3^4 rows of width 4 cover values <= 2
    for (std::uint64_t s = 0; s < 256 * 81; ++s) nb.push_back({2, 1});
    auto sched = LayoutSchedule::explicit_rows(nb);
    std::mt19937_64 rng(3);
    std::vector<std::uint64_t> rows;
    for (std::uint64_t i = 0; i < nb.size(); ++i) rows.push_back(i);
    for (int k = 0; k < 3; ++k) {
        PartialSeq f(8);
        for (auto& v : f) v = uniform_below(rng, 3);
        auto img = gamma_rows(f, sched, rows);
        auto back = gamma_hat_interval(img.X, 2);
        CHECK(back == slice_values(f, 4, 8));
    }
}

TEST_CASE("empty X decodes to zero") {
    auto sched = LayoutSchedule::paper();
    SymbolicSet X(sched);
    for (auto i : rows_for_values(sched, 1, 0)) X.set_payload(i, FiniteBitSet(std::size_t{1} << sched.row(i).n));
    auto f = gamma_hat_prefix(X, 1);
    CHECK(f == PartialSeq{0, 0, 0, 0});
}

TEST_CASE("missing rows are reported") {
    auto sched = LayoutSchedule::paper();
    PartialSeq f{0, 3, 1, 2};
    auto img = gamma_rows(f, sched, {0, 1, 2});
    CHECK_THROWS_AS(gamma_hat_interval(img.X, 1), InsufficientRows);
}

TEST_CASE("minority corruption is absorbed") {
    auto sched = LayoutSchedule::paper();
    auto rows = rows_for_values(sched, 1, 3);
    PartialSeq f{0, 2, 3, 1};
    auto img = gamma_rows(f, sched, rows);
    // row 0 has 4 copies: one flip per position stays below half
    img.X.flip(0, 0, 2);
    // row 1 has 2^15 copies
    for (unsigned long k = 0; k < (1ul << 14) - 1; ++k) img.X.flip(1, 1, k);
    CHECK(gamma_hat_prefix(img.X, 1) == f);
}

TEST_CASE("sub-threshold corruption leaves every copied block intact") {
    // A row with 2^r copies and density at most 1/(1 + 2^{n+1}) of flipped
    // bits cannot push any position past the majority line.
    auto sched = LayoutSchedule::explicit_rows({{1, 1}, {1, 1}});
    std::mt19937_64 rng(6);
    for (int k = 0; k < 50; ++k) {
        FiniteBitSet xi(2);
        if (rng() & 1) xi.set(0);
        if (rng() & 1) xi.set(1);
        SymbolicSet X(sched);
        X.set_payload(0, xi);
        X.set_payload(1, FiniteBitSet(2));
        auto g = sched.geometry(0);
        const unsigned long copies = 1ul << mpz_get_ui(g.r->get_mpz_t());
        const unsigned long row_len = 2 * copies;
        // flips allowed by the threshold over the whole row
        const unsigned long budget = row_len / (1 + 4);
        unsigned long used = 0;
        while (used < budget) {
            X.flip(0, rng() & 1, uniform_below(rng, copies));
            ++used;
        }
        CHECK(X.row_mod_inv(0) == xi);
    }
}

TEST_CASE("perturbation inequality") {
    auto sched = LayoutSchedule::paper();
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
        auto f = random_f(rng, 4, 8);
        FiniteBitSet S(4);
        for (std::size_t x = 1; x < 4; ++x)
            if (rng() & 1) S.set(x);
        auto g = perturb_values(f, S, 8, rng);
        for (auto& r : perturb_experiment(f, g, S, sched, 2)) CHECK(r.bound_holds);
    }
    auto f = random_f(rng, 4, 8);
    for (auto& r : perturb_experiment(f, f, FiniteBitSet(4), sched, 2)) {
        CHECK(r.window_density == 0);
        CHECK(r.code_fraction == 0);
    }
    PartialSeq a{0, 0, 0, 0}, b{0, 1, 0, 0};
    auto rep = perturb_experiment(a, b, bits_from_string("0100"), sched, 1);
    CHECK(rep[0].code_fraction == 1);
    CHECK(rep[0].window_density <= Rational(3, 2));
    CHECK(rep[0].bound_holds);
    CHECK_THROWS(perturb_experiment(a, b, FiniteBitSet(4), sched, 1));
}

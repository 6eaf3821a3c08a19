#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "densecode/codec.hpp"

using namespace densecode;

namespace {

// Direct transcription of the encoder definition, one code index at a time.
std::uint64_t oracle_encode_at(const Tuple& sigma, const Tuple& tau, const std::vector<std::uint8_t>& q) {
    const std::size_t n = sigma.size();
    for (std::size_t i = 0; i < n; ++i)
        if (q[q[i]] != q[i]) return 0;
    std::int64_t mt = 0;
    for (auto v : tau) mt = std::max<std::int64_t>(mt, static_cast<std::int64_t>(v));
    std::uint64_t mask = 0;
    for (std::size_t x = 0; x < n; ++x) {
        std::int64_t b = -1;
        for (std::size_t y = 0; y < n; ++y)
            if (q[y] == x) b = std::max<std::int64_t>(b, static_cast<std::int64_t>(sigma[y]));
        if (sigma[x] > tau[x] && mt < b) mask |= std::uint64_t{1} << x;
    }
    return mask;
}

std::vector<Tuple> all_tuples(std::size_t n, std::uint64_t maxv) {
    std::vector<Tuple> out;
    Tuple t(n, 0);
    for (;;) {
        out.push_back(t);
        std::size_t i = 0;
        while (i < n && t[i] == maxv) t[i++] = 0;
        if (i == n) break;
        ++t[i];
    }
    return out;
}

std::uint64_t hamming(const Tuple& a, const Tuple& b) {
    std::uint64_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

// Exhaustive minimizer without pruning.
Tuple oracle_decode(const Theta& theta) {
    const std::size_t n = theta.arity();
    const Theta tr = truncate(theta);
    const std::uint64_t h = height(theta);
    Tuple best;
    std::uint64_t bd = ~std::uint64_t{0}, bc = 0;
    for (std::uint64_t c = 0; c < ipow(h + 1, n); ++c) {
        Tuple s = decode_tuple(c, n);
        std::uint64_t d = ddist(encode(s), tr);
        if (d < bd) {
            bd = d;
            bc = c;
            best = s;
        }
    }
    (void)bc;
    return best;
}

// Brute-force block scan for the height.
std::uint64_t oracle_height(const Theta& theta) {
    const std::size_t n = theta.arity();
    const std::uint64_t K = ipow(n, n);
    for (std::uint64_t m = 0;; ++m) {
        bool empty = true;
        for (std::uint64_t s = K * ipow(m, n); s < K * ipow(m + 1, n); ++s)
            if (theta.get(s) != 0) empty = false;
        if (empty) return m;
    }
}

struct Witness {
    Tuple tau;
    std::vector<std::uint8_t> q;
};

// The explicit (tau, q) from the distortion lower-bound argument.
Witness median_witness(const Tuple& a, const Tuple& b) {
    const std::size_t n = a.size();
    Tuple zeta = cwise_min(a, b);
    std::vector<std::size_t> S;
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] != b[i]) S.push_back(i);
    std::vector<std::uint64_t> vals;
    for (auto i : S) vals.push_back(zeta[i]);
    std::sort(vals.begin(), vals.end());
    const std::uint64_t zbar = vals[(vals.size() - 1) / 2];
    std::vector<std::size_t> H, L;
    for (auto i : S) {
        if (zeta[i] > zbar) H.push_back(i);
        if (zeta[i] < zbar) L.push_back(i);
    }
    Witness w;
    w.q.resize(n);
    for (std::size_t i = 0; i < n; ++i) w.q[i] = static_cast<std::uint8_t>(i);
    for (std::size_t k = 0; k < std::min(H.size(), L.size()); ++k) w.q[H[k]] = static_cast<std::uint8_t>(L[k]);
    w.tau.assign(n, 0);
    for (auto i : S)
        if (zeta[i] <= zbar) w.tau[i] = zeta[i];
    return w;
}

}  // namespace

TEST_CASE("idempotent maps") {
    CHECK(idempotent_maps(1).size() == 1);
    CHECK(idempotent_maps(2).size() == 3);
    CHECK(idempotent_maps(3).size() == 10);
    CHECK(idempotent_maps(4).size() == 41);
    CHECK(idempotent_maps(5).size() == 196);
    for (std::size_t n = 1; n <= 4; ++n) {
        std::uint64_t prev = 0;
        bool first = true;
        for (auto& q : idempotent_maps(n)) {
            CHECK(is_idempotent(q.q));
            if (!first) CHECK(q.rank() > prev);
            prev = q.rank();
            first = false;
            CHECK(map_from_rank(q.rank(), n) == q.q);
        }
    }
    CHECK_FALSE(is_idempotent({1, 0}));
}

TEST_CASE("code index round trip") {
    for (std::size_t n = 1; n <= 3; ++n) {
        const std::uint64_t K = ipow(n, n);
        for (std::uint64_t s = 0; s < 2000; ++s) {
            auto [tau, r] = split_code_index(s, n);
            REQUIRE(code_index(tau, r, n) == s);
        }
        CHECK(K == ipow(n, n));
    }
}

TEST_CASE("borrow bound and single encodings") {
    std::vector<std::uint8_t> id{0, 1}, collapse{0, 0};
    CHECK(bnd_b(id, {4, 7}, 1) == 7);
    CHECK(bnd_b(collapse, {1, 3}, 0) == 3);
    CHECK(bnd_b(collapse, {1, 3}, 1) == -1);
    CHECK(encode_one({2, 0}, {0, 0}, id) == 0b01);
    CHECK(encode_one({1, 3}, {0, 2}, collapse) == 0b01);
    CHECK(encode_one({1, 3}, {0, 2}, {1, 0}) == 0);
    CHECK_THROWS(encode_one({1}, {0, 0}, id));
}

TEST_CASE("encode matches the definition pointwise") {
    for (std::size_t n = 1; n <= 3; ++n)
        for (auto& sigma : all_tuples(n, 3)) {
            Theta th = encode(sigma);
            const std::uint64_t K = ipow(n, n);
            std::uint64_t m = *std::max_element(sigma.begin(), sigma.end());
            for (std::uint64_t s = 0; s < K * ipow(m + 2, n); ++s) {
                auto [tau, r] = split_code_index(s, n);
                REQUIRE(th.get(s) == oracle_encode_at(sigma, tau, map_from_rank(r, n)));
            }
            for (auto& [s, mask] : th.support()) REQUIRE(s < K * ipow(m, n));
            REQUIRE(height(th) == m);
            REQUIRE(truncate(th) == th);
        }
    Theta z = encode({0, 0, 0});
    CHECK(z.support().empty());
    Theta one = encode({2});
    CHECK(one.support().size() == 2);
    CHECK(one.get(0) == 1);
    CHECK(one.get(1) == 1);
}

TEST_CASE("distance and height") {
    Theta a(2), b(2);
    CHECK(ddist(a, a) == 0);
    b.set(0, 0b11);
    CHECK(ddist(a, b) == 2);
    CHECK(height(a) == 0);
    CHECK_THROWS(ddist(a, Theta(3)));
    std::mt19937_64 rng(4);
    for (int k = 0; k < 200; ++k) {
        std::size_t n = 1 + rng() % 3;
        Theta t(n);
        const std::uint64_t K = ipow(n, n);
        for (int j = 0; j < 6; ++j) t.set(rng() % (K * ipow(5, n)), rng() % (1u << n));
        CHECK(height(t) == oracle_height(t));
    }
    Theta far(2);
    far.set(4 * ipow(5, 2), 1);
    CHECK(height(far) == oracle_height(far));
    CHECK(height(far) == 0);
    CHECK(truncate(far).support().empty());
}

TEST_CASE("decode inverts encode exhaustively for small arity") {
    for (std::size_t n = 1; n <= 3; ++n)
        for (auto& sigma : all_tuples(n, 3)) {
            auto th = encode(sigma);
            REQUIRE(decode_serial(th).sigma == sigma);
            REQUIRE(decode_parallel(th).sigma == sigma);
        }
    CHECK(decode(Theta(2)).sigma == Tuple{0, 0});
}

TEST_CASE("pruned decoders agree with the exhaustive minimizer on corrupted input") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 150; ++k) {
        std::size_t n = 1 + rng() % 3;
        Tuple sigma(n);
        for (auto& v : sigma) v = rng() % 4;
        Theta th = encode(sigma);
        const std::uint64_t K = ipow(n, n);
        int flips = 1 + rng() % 4;
        for (int j = 0; j < flips; ++j) {
            std::uint64_t s = rng() % (K * ipow(4, n));
            th.set(s, th.get(s) ^ (std::uint64_t{1} << (rng() % n)));
        }
        Tuple want = oracle_decode(th);
        REQUIRE(decode_serial(th).sigma == want);
        REQUIRE(decode_parallel(th).sigma == want);
    }
}

TEST_CASE("distortion sandwich and the median witness") {
    for (std::size_t n = 1; n <= 3; ++n) {
        auto all = all_tuples(n, 3);
        std::vector<Theta> enc;
        for (auto& s : all) enc.push_back(encode(s));
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = 0; j < all.size(); ++j) {
                std::uint64_t d = hamming(all[i], all[j]);
                std::uint64_t dd = ddist(enc[i], enc[j]);
                REQUIRE(dd <= d);
                REQUIRE(2 * dd >= d);
                if (d == 0) continue;
                Witness w = median_witness(all[i], all[j]);
                REQUIRE(is_idempotent(w.q));
                auto diff = encode_one(all[i], w.tau, w.q) ^ encode_one(all[j], w.tau, w.q);
                REQUIRE(2 * static_cast<std::uint64_t>(__builtin_popcountll(diff)) >= d);
            }
    }
}

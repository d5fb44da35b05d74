// Tests for closed-form point counts on the moduli curve and the
// injectivity scan for CM-point reductions.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "necklace/bridge.hpp"
#include "necklace/xcount.hpp"

using namespace necklace;
using namespace necklace::ff;
using namespace necklace::xcount;

namespace {

const int64_t kPrimes[13] = {5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47};

FiberInput cusp_input(int64_t p, int64_t ell) {
    FiberInput in;
    in.p = p;
    in.ell = ell;
    in.j_infinity = true;
    return in;
}

// #E(F_ell) for the curve y^2 + y = x^3 - x^2 - 7x + 10, counted directly.
int64_t curve_121b1_points(int64_t ell) {
    int64_t total = 1; // point at infinity
    for (int64_t x = 0; x < ell; ++x) {
        int64_t r = mod_norm(x * x * x - x * x - 7 * x + 10, ell);
        // y^2 + y = r has 1 + chi(1 + 4r) solutions over odd characteristic
        total += 1 + legendre(mod_norm(1 + 4 * r, ell), ell);
    }
    return total;
}

} // namespace

TEST_CASE("fiber sizes above single points", "[xcount]") {
    SECTION("the cusp") {
        CHECK(fiber_size(cusp_input(5, 11)) == 2);  // 11 = 1 mod 5
        CHECK(fiber_size(cusp_input(5, 19)) == 2);  // 19 = -1 mod 5
        CHECK(fiber_size(cusp_input(5, 7)) == 0);   // 7 = 2 mod 5
        CHECK(fiber_size(cusp_input(7, 13)) == 3);  // 13 = -1 mod 7
        CHECK(fiber_size(cusp_input(7, 5)) == 0);
        CHECK(fiber_size(cusp_input(5, 3)) == 0);   // small ell allowed at the cusp
    }
    SECTION("printed examples") {
        // j = 6 in F_7 is 1728; the supersingular fiber for p = 5
        CHECK(fiber_size_at(5, 7, 6) == 4);
        // generic j = 5 in F_13 for p = 7
        CHECK(fiber_size_at(7, 13, 5) == 3);
    }
    SECTION("parameter validation") {
        CHECK_THROWS_AS(fiber_size_at(5, 5, 1), Error);
        CHECK_THROWS_AS(fiber_size_at(5, 3, 1), Error);
        CHECK_THROWS_AS(fiber_size_at(4, 7, 1), Error);
        FiberInput in;
        in.p = 5;
        in.ell = 9;
        CHECK_THROWS_AS(fiber_size(in), Error);
    }
    SECTION("a nonzero trace with vanishing discriminant class needs the isogeny count") {
        // find such a j over F_11 for p = 5 and check the lazy path is exercised
        auto F = Field::prime(11);
        bool found = false;
        for (int64_t j = 2; j < 11 && !found; ++j) {
            if (j == mod_norm(1728, 11)) continue;
            auto E = ec::curve_from_j(*F, F->from_int(j));
            int64_t a = mod_norm(ec::trace_of_frobenius(E).get_si(), 5);
            if (a == 0 || legendre(mod_norm(a * a - 4 * 11, 5), 5) != 0) continue;
            found = true;
            FiberInput in;
            in.p = 5;
            in.ell = 11;
            in.j = j;
            in.a = a;
            in.delta = 0;
            CHECK_THROWS_AS(fiber_size(in), Error); // no isogeny callback
            in.isogenies = [&]() { return isog::count_rational_p_isogenies(E, 5); };
            int64_t v = fiber_size(in);
            CHECK((v == 0 || v == 5 * 4 / 2));
            CHECK(v == fiber_size_at(5, 11, j));
        }
        CHECK(found);
    }
}

TEST_CASE("total point counts over prime fields", "[xcount]") {
    SECTION("the full table of #X(F_ell) for distinct primes below fifty") {
        const int64_t want[13][13] = {
            {0, 8, 12, 14, 18, 20, 24, 30, 32, 38, 42, 44, 48},
            {6, 0, 12, 14, 18, 20, 24, 30, 32, 38, 42, 44, 48},
            {9, 8, 0, 14, 18, 20, 33, 30, 37, 31, 42, 44, 60},
            {10, 11, 20, 0, 20, 24, 29, 31, 37, 26, 49, 31, 66},
            {11, 15, 24, 13, 0, 23, 41, 45, 45, 27, 54, 37, 63},
            {14, 13, 27, 14, 27, 0, 40, 45, 41, 38, 54, 39, 69},
            {13, 16, 25, 22, 34, 30, 0, 47, 51, 31, 69, 44, 93},
            {16, 18, 37, 20, 37, 46, 52, 0, 64, 30, 85, 57, 100},
            {20, 18, 38, 21, 42, 42, 56, 65, 0, 32, 90, 51, 99},
            {21, 21, 41, 23, 50, 49, 73, 72, 69, 0, 83, 65, 111},
            {22, 28, 49, 27, 48, 54, 74, 75, 83, 35, 0, 59, 129},
            {24, 23, 50, 27, 56, 49, 78, 75, 78, 40, 110, 0, 140},
            {25, 30, 49, 34, 60, 56, 78, 79, 81, 48, 116, 69, 0}};
        for (int r = 0; r < 13; ++r)
            for (int c = 0; c < 13; ++c) {
                if (r == c) continue;
                INFO("p=" << kPrimes[r] << " ell=" << kPrimes[c]);
                CHECK(total_points(kPrimes[r], kPrimes[c]) == want[r][c]);
            }
    }
    SECTION("the curves for p = 5 and p = 7 are rational: ell + 1 points") {
        for (int64_t ell : kPrimes) {
            if (ell != 5) CHECK(total_points(5, ell) == ell + 1);
            if (ell != 7) CHECK(total_points(7, ell) == ell + 1);
        }
    }
    SECTION("the p = 11 row counts points of the curve 121b1") {
        for (int64_t ell : kPrimes) {
            if (ell == 11) continue;
            INFO("ell=" << ell);
            CHECK(total_points(11, ell) == curve_121b1_points(ell));
        }
    }
    SECTION("seed independence") {
        CHECK(total_points(5, 13, 7) == 14);
        CHECK(total_points(7, 11, 99) == 12);
    }
}

TEST_CASE("closed-form fibers agree with the geometric fiber enumeration", "[xcount]") {
    for (int64_t p : {int64_t(5), int64_t(7)}) {
        auto g = cartan::canonical_gamma(p);
        for (int64_t ell : {int64_t(5), int64_t(7), int64_t(11), int64_t(13)}) {
            if (ell == p) continue;
            auto F = Field::prime(ell);
            int64_t geo = fiber_size(cusp_input(p, ell));
            for (int64_t j = 0; j < ell; ++j) {
                auto pts = bridge::xpoints_above_j(F, F->from_int(j), p, g);
                INFO("p=" << p << " ell=" << ell << " j=" << j);
                CHECK(fiber_size_at(p, ell, j) == static_cast<int64_t>(pts.size()));
                geo += static_cast<int64_t>(pts.size());
            }
            CHECK(geo == total_points(p, ell));
        }
    }
}

TEST_CASE("candidate primes for CM j-invariant differences", "[xcount]") {
    auto L = candidate_primes();
    CHECK(std::is_sorted(L.begin(), L.end()));
    for (int64_t q : L) CHECK(is_prime_u64(static_cast<uint64_t>(q)));
    auto has = [&](int64_t q) { return std::find(L.begin(), L.end(), q) != L.end(); };
    CHECK(has(3));
    CHECK(has(127));
    CHECK(has(997));
    CHECK_FALSE(has(131));
    CHECK(L.size() == 52);
}

TEST_CASE("injectivity scan reproduces the known collisions", "[xcount]") {
    SECTION("p in {5, 7}, ell up to 17: exactly eight colliding pairs") {
        auto recs = injectivity_scan({5, 7}, {5, 7, 11, 13, 17});
        REQUIRE(recs.size() == 8);
        // (p, ell, j, #X_j, r_j, D1, D2), sorted as produced
        const int64_t want[8][7] = {
            {5, 7, 6, 4, 6, -43, -67},  {5, 7, 6, 4, 6, -7, -163},
            {5, 11, 1, 2, 3, -27, -163}, {5, 13, 5, 4, 5, -28, -67},
            {5, 13, 5, 4, 5, -8, -163},  {5, 17, 8, 4, 4, -12, -163},
            {7, 5, 0, 3, 4, -8, -163},   {7, 13, 5, 3, 4, -67, -163}};
        for (size_t i = 0; i < 8; ++i) {
            INFO("record " << i);
            CHECK(recs[i].p == want[i][0]);
            CHECK(recs[i].ell == want[i][1]);
            CHECK(recs[i].j == want[i][2]);
            CHECK(recs[i].fiber == want[i][3]);
            CHECK(recs[i].r == want[i][4]);
            CHECK(recs[i].D1 == want[i][5]);
            CHECK(recs[i].D2 == want[i][6]);
        }
        // all but one record has strictly more CM points above j than fiber size
        int64_t exceptions = 0;
        for (auto& r : recs)
            if (!(r.r > r.fiber)) ++exceptions;
        CHECK(exceptions == 1);
    }
    SECTION("no collisions for p in {11, 13} at small ell") {
        CHECK(injectivity_scan({11, 13}, {5, 7, 13}).empty());
    }
    SECTION("ell below five and ell equal to p are skipped") {
        CHECK(injectivity_scan({5}, {2, 3, 5}).empty());
    }
}

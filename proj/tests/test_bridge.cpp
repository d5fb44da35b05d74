// Tests for geometric necklaces: pearl systems, Frobenius action, rational
// necklace enumeration, moduli-curve fibers, point comparison, rendering.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "necklace/bridge.hpp"

using namespace necklace;
using namespace necklace::ff;
using namespace necklace::ec;
using namespace necklace::isog;
using namespace necklace::bridge;
namespace ca = necklace::cartan;

namespace {

// a + b*theta in a quadratic presentation
FieldElt qe(const FieldPtr& F, int64_t a, int64_t b) {
    return F->from_coeffs({mod_norm(a, F->p), mod_norm(b, F->p)});
}

// comparable serialization of a polynomial over any field
std::vector<std::vector<int64_t>> ser(const FPoly& f) {
    std::vector<std::vector<int64_t>> out;
    for (auto& c : f) out.push_back(c.c);
    return out;
}

std::vector<std::vector<std::vector<int64_t>>> sorted_kernels(const std::vector<GeoPearl>& ps) {
    std::vector<std::vector<std::vector<int64_t>>> out;
    for (auto& p : ps) out.push_back(ser(p.kernel));
    std::sort(out.begin(), out.end());
    return out;
}

// map a polynomial given over presentation src into dst via one isomorphism
FPoly move_poly(const FieldPtr& src, const FieldPtr& dst, const FPoly& f) {
    Embedding iso = isomorphisms(src, dst).front();
    FPoly g;
    for (auto& c : f) g.push_back(iso.map(c));
    return g;
}

int64_t expected_rational_count(const Curve<Field>& E, int64_t p) {
    mpz_class a = trace_of_frobenius(E);
    int64_t am = mod_norm(mpz_class(a % p).get_si(), p);
    int d = frobenius_delta(E, p);
    if (d == 0) return frobenius_is_scalar_on_p_torsion(E, p) ? p * (p - 1) / 2 : 0;
    if (d == 1) return am == 0 ? (p - 1) / 2 : 0;
    return am == 0 ? (p + 3) / 2 : 1;
}

} // namespace

TEST_CASE("pearl systems: counts, isogeny field, Frobenius action") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4)); // y^2 = x^3 + x + 4

    SECTION("p = 5: six pearls over the quadratic extension, non-split involution") {
        auto S = pearl_system(E, 5);
        REQUIRE(S.pearls.size() == 6);
        REQUIRE(S.L->k == 2);
        // kernels are distinct monic quadratics
        auto ks = sorted_kernels(S.pearls);
        REQUIRE(std::adjacent_find(ks.begin(), ks.end()) == ks.end());
        for (auto& pl : S.pearls) REQUIRE(pdeg(pl.kernel) == 2);
        // coefficient Frobenius is a fixed-point-free involution on pearls
        for (size_t s = 0; s < 6; ++s) {
            FPoly img = coeff_frob(*S.L, S.pearls[s].kernel, 1);
            REQUIRE_FALSE(peq(*S.L, img, S.pearls[s].kernel));
            FPoly back = coeff_frob(*S.L, img, 1);
            REQUIRE(peq(*S.L, back, S.pearls[s].kernel));
        }
        // PGL image: order 2, non-split
        auto id = ca::make_pgl2(5, 1, 0, 0, 1);
        REQUIRE(ca::pgl_mul(S.frob, S.frob) == id);
        REQUIRE(ca::delta(S.frob) == -1);
        // slope coordinates are a bijection
        std::set<int64_t> keys;
        for (auto& pl : S.pearls) keys.insert(pl.coord.key(5));
        REQUIRE(keys.size() == 6);
    }

    SECTION("p = 7: split involution") {
        auto S = pearl_system(E, 7);
        REQUIRE(S.pearls.size() == 8);
        REQUIRE(S.L->k == 2);
        auto id = ca::make_pgl2(7, 1, 0, 0, 1);
        REQUIRE(ca::pgl_mul(S.frob, S.frob) == id);
        REQUIRE(ca::delta(S.frob) == 1);
    }

    SECTION("fully rational torsion: identity action, base-field kernels") {
        auto F7 = Field::prime(7);
        Curve<Field> E0 = make_curve(*F7, F7->from_int(0), F7->from_int(2));
        int d = full_torsion_degree(E0, 3);
        auto M = make_ext(7, d);
        Embedding emb = make_embedding(F7, M);
        Curve<Field> EM = make_curve(*M, emb.map(E0.A), emb.map(E0.B));
        auto S = pearl_system(EM, 3);
        REQUIRE(S.L->k == M->k);
        for (int64_t s = 0; s <= 3; ++s) {
            auto z = s == 3 ? ca::pp_inf() : ca::pp(s);
            REQUIRE(ca::pgl_act(S.frob, z) == z);
        }
    }
}

TEST_CASE("exact group order over extensions") {
    auto F7 = Field::prime(7);
    Curve<Field> E = make_curve(*F7, F7->from_int(1), F7->from_int(3));
    for (int k = 1; k <= 4; ++k) {
        auto M = make_ext(7, k);
        Embedding emb = make_embedding(F7, M);
        Curve<Field> EM = make_curve(*M, emb.map(E.A), emb.map(E.B));
        if (M->size() <= 10000) REQUIRE(group_order_over_ext(E, k) == count_points_enum(EM));
    }
}

TEST_CASE("supersingular curve over F_13, p = 5: pearls match the known list") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4));
    auto S = pearl_system(E, 5);
    // the published subgroup polynomials, over F_13[theta]/(theta^2 - theta + 2)
    auto Lp = Field::ext_with_modulus(13, {2, 12, 1});
    auto mk = [&](int64_t c0a, int64_t c0b, int64_t c1a, int64_t c1b) {
        return FPoly{qe(Lp, c0a, c0b), qe(Lp, c1a, c1b), Lp->one()};
    };
    std::vector<FPoly> paper = {
        mk(8, 12, 9, 5),  mk(7, 1, 1, 8),  // C0, conj
        mk(11, 2, 8, 7),  mk(0, 11, 2, 6), // C1, conj
        mk(1, 6, 7, 5),   mk(7, 7, 12, 8), // C2, conj
    };
    std::vector<GeoPearl> moved;
    for (auto& f : paper) moved.push_back(GeoPearl{move_poly(Lp, S.L, f), ca::pp(0), S.L->zero()});
    REQUIRE(sorted_kernels(moved) == sorted_kernels(S.pearls));
}

TEST_CASE("p = 7 pearls over F_13 match the known list") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4)); // j = 5
    REQUIRE(F13->eq(j_invariant(E), F13->from_int(5)));
    auto S = pearl_system(E, 7);
    auto Lp = Field::ext_with_modulus(13, {2, 12, 1});
    auto mk = [&](std::initializer_list<std::pair<int64_t, int64_t>> lo) {
        FPoly f;
        for (auto& [a, b] : lo) f.push_back(qe(Lp, a, b));
        f.push_back(Lp->one());
        return f;
    };
    std::vector<FPoly> paper = {
        mk({{0, 0}, {11, 0}, {10, 0}}),
        mk({{12, 0}, {5, 0}, {7, 0}}),
        mk({{2, 3}, {11, 9}, {4, 11}}),
        mk({{5, 10}, {7, 4}, {2, 2}}),
        mk({{3, 12}, {8, 10}, {10, 4}}),
        mk({{2, 1}, {5, 3}, {1, 9}}),
        mk({{10, 8}, {8, 1}, {9, 0}}),
        mk({{5, 5}, {9, 12}, {9, 0}}),
    };
    std::vector<GeoPearl> moved;
    for (auto& f : paper) moved.push_back(GeoPearl{move_poly(Lp, S.L, f), ca::pp(0), S.L->zero()});
    REQUIRE(sorted_kernels(moved) == sorted_kernels(S.pearls));
}

TEST_CASE("rational geometric necklaces on the supersingular curve over F_13") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4));

    SECTION("p = 5: four rational necklaces") {
        auto g = ca::canonical_gamma(5);
        auto Ns = rational_geo_necklaces(E, 5, g);
        REQUIRE(Ns.size() == 4);
        for (auto& N : Ns) {
            REQUIRE(N.pearls.size() == 6);
            for (size_t i = 0; i < 6; ++i) REQUIRE(N.pearls[i].coord == N.abstract.order[i]);
        }
    }

    SECTION("p = 7: three rational necklaces, pairwise distinct as points") {
        auto g = ca::canonical_gamma(7);
        auto Ns = rational_geo_necklaces(E, 7, g);
        REQUIRE(Ns.size() == 3);
        for (size_t i = 0; i < Ns.size(); ++i)
            for (size_t j = 0; j < Ns.size(); ++j) {
                bool eq = compare_points(Ns[i], Ns[j]);
                REQUIRE(eq == (i == j));
            }
    }
}

TEST_CASE("comparison across quadratic twists is a bijection") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4));
    Curve<Field> Ed = quadratic_twist(E);
    auto g = ca::canonical_gamma(5);
    auto A = rational_geo_necklaces(E, 5, g);
    auto B = rational_geo_necklaces(Ed, 5, g);
    REQUIRE(A.size() == B.size());
    // compare_points is symmetric on the pooled set
    for (auto& a : A)
        for (auto& b : B) REQUIRE(compare_points(a, b) == compare_points(b, a));
    // each necklace on E matches exactly one on the twist
    std::set<size_t> used;
    for (auto& a : A) {
        size_t hits = 0, hit = 0;
        for (size_t j = 0; j < B.size(); ++j)
            if (compare_points(a, B[j])) { ++hits; hit = j; }
        REQUIRE(hits == 1);
        REQUIRE(used.insert(hit).second);
        REQUIRE(compare_points(a, a));
    }
}

TEST_CASE("moduli fibers above special j-invariants") {
    SECTION("j = 1728 in F_7, p = 5: four points, two glued pairs") {
        auto F7 = Field::prime(7);
        auto g = ca::canonical_gamma(5);
        auto xs = xpoints_above_j(F7, F7->from_int(6), 5, g);
        REQUIRE(xs.size() == 4);
        std::vector<size_t> sizes;
        for (auto& x : xs) sizes.push_back(x.orbit.size());
        std::sort(sizes.begin(), sizes.end());
        REQUIRE(sizes == std::vector<size_t>{1, 1, 2, 2});
        // among the glued pairs, one has both members individually rational
        // and one has the members swapped by Frobenius
        int both_rational = 0, swapped = 0;
        for (auto& x : xs) {
            if (x.orbit.size() != 2) continue;
            auto S = pearl_system(x.orbit[0].E, 5);
            int rat = 0;
            for (auto& w : x.orbit)
                if (ca::act(S.frob, w.abstract).second != ca::ActKind::moved) ++rat;
            if (rat == 2) ++both_rational;
            if (rat == 0) ++swapped;
        }
        REQUIRE(both_rational == 1);
        REQUIRE(swapped == 1);
    }

    SECTION("j = 0 in F_11, p = 5: two points, one a glued triple") {
        auto F11 = Field::prime(11);
        auto g = ca::canonical_gamma(5);
        auto xs = xpoints_above_j(F11, F11->zero(), 5, g);
        REQUIRE(xs.size() == 2);
        std::vector<size_t> sizes;
        for (auto& x : xs) sizes.push_back(x.orbit.size());
        std::sort(sizes.begin(), sizes.end());
        REQUIRE(sizes == std::vector<size_t>{1, 3});
    }

    SECTION("j = 5 in F_13, p = 7: three points, all plain") {
        auto F13 = Field::prime(13);
        auto g = ca::canonical_gamma(7);
        auto xs = xpoints_above_j(F13, F13->from_int(5), 7, g);
        REQUIRE(xs.size() == 3);
        for (auto& x : xs) REQUIRE(x.orbit.size() == 1);
    }
}

TEST_CASE("rational necklace counts across curves follow the trace data") {
    auto run = [&](int64_t p, const std::vector<int64_t>& ells) {
        auto g = ca::canonical_gamma(p);
        for (int64_t ell : ells) {
            if (ell == p) continue;
            auto F = Field::prime(ell);
            for (int64_t j = 0; j < ell; ++j) {
                Curve<Field> E = curve_from_j(*F, F->from_int(j));
                for (int twist = 0; twist < 2; ++twist) {
                    Curve<Field> C = twist ? quadratic_twist(E) : E;
                    auto Ns = rational_geo_necklaces(C, p, g);
                    REQUIRE(static_cast<int64_t>(Ns.size()) == expected_rational_count(C, p));
                }
            }
        }
    };
    run(5, {7, 11, 13, 17, 19, 23});
    run(7, {5, 11, 13, 17, 19, 23});
    run(11, {5, 7, 13});
    run(13, {5, 7, 11});
}

TEST_CASE("necklace rendering") {
    auto F13 = Field::prime(13);
    Curve<Field> E = make_curve(*F13, F13->from_int(1), F13->from_int(4));
    auto g = ca::canonical_gamma(5);
    auto Ns = rational_geo_necklaces(E, 5, g);
    REQUIRE_FALSE(Ns.empty());
    // pick a necklace flipped by Frobenius
    auto S = pearl_system(E, 5);
    const GeoNecklace* flipped = nullptr;
    for (auto& N : Ns)
        if (ca::act(S.frob, N.abstract).second == ca::ActKind::flipped_reflection) flipped = &N;
    REQUIRE(flipped != nullptr);

    std::string svg = render_necklace(*flipped, "svg");
    REQUIRE(svg == render_necklace(*flipped, "svg")); // deterministic
    REQUIRE(std::count(svg.begin(), svg.end(), '\n') > 6);
    size_t circles = 0, pos = 0;
    std::vector<std::pair<double, double>> centers;
    while ((pos = svg.find("<circle cx=\"", pos)) != std::string::npos) {
        ++circles;
        double cx = 0, cy = 0;
        REQUIRE(std::sscanf(svg.c_str() + pos, "<circle cx=\"%lf\" cy=\"%lf\"", &cx, &cy) == 2);
        centers.push_back({cx, cy});
        ++pos;
    }
    REQUIRE(circles == 6);
    // conjugate pearls are mirror images across the horizontal axis
    for (size_t i = 0; i < 6; ++i) {
        FPoly img = coeff_frob(*flipped->L, flipped->pearls[i].kernel, 1);
        size_t t = 6;
        for (size_t s = 0; s < 6; ++s)
            if (peq(*flipped->L, img, flipped->pearls[s].kernel)) t = s;
        REQUIRE(t < 6);
        REQUIRE(std::abs(centers[i].first - centers[t].first) < 1e-6);
        REQUIRE(std::abs(centers[i].second + centers[t].second - 400.0) < 1e-6);
    }

    std::string dot = render_necklace(*flipped, "dot");
    REQUIRE(dot.find("graph necklace") != std::string::npos);
    for (int i = 0; i < 6; ++i) REQUIRE(dot.find("n" + std::to_string(i) + " ") != std::string::npos);
    REQUIRE_THROWS_AS(render_necklace(*flipped, "png"), Error);
}

// Closed-form point counts for the moduli curve X over prime fields, and the
// injectivity scan for CM-point reductions.
//
// The fiber of X above j in P^1(F_ell) has a closed-form size depending only
// on (p, ell, j-class, a, delta, i), where a is the trace of Frobenius mod p
// of a curve with the given j-invariant, delta = legendre(a^2 - 4 ell, p),
// and i is the number of rational p-isogenies (needed only in one rare case).
// Summing fibers gives #X(F_ell); grouping the thirteen CM points by reduced
// j-invariant and comparing their reduced necklaces gives the collision scan.
#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>

#include "necklace/cmred.hpp"

namespace necklace::xcount {

using ff::Field;
using ff::FieldElt;
using ff::FieldPtr;
using ff::legendre;
using cartan::Gamma;
using cmred::CmOrder;

// ---------------------------------------------------------------------------
// Fiber sizes.
// ---------------------------------------------------------------------------

// Data determining the size of the fiber of X above a point j of P^1(F_ell).
struct FiberInput {
    int64_t p = 0;
    int64_t ell = 0;
    bool j_infinity = false;            // the cusp
    int64_t j = 0;                      // representative of j in F_ell
    int64_t a = 0;                      // trace of Frobenius mod p
    int delta = 0;                      // legendre(a^2 - 4 ell, p)
    std::function<int64_t()> isogenies; // rational p-isogeny count, lazy
};

namespace detail {

// Rows of the fiber table keyed on the trace, for j = 0 over F_ell with
// ell = 1 mod 3 (the case with six sextic twists). Returns the fiber size if
// a row matches, nothing for the fall-through ("not above") case.
inline std::optional<int64_t> row_j0(int64_t p, int64_t ell, int64_t a) {
    a = mod_norm(a, p);
    int64_t a2 = mod_norm(a * a, p);
    bool p1 = p % 3 == 1;
    int64_t small = p1 ? (p - 1) / 6 : (p + 7) / 6;
    int64_t big = p1 ? p * (p - 1) / 6 : (p * p - p + 4) / 6;
    if (a == 0) return small;
    if (a2 == mod_norm(3 * ell, p)) return small;
    if (a2 == mod_norm(ell, p)) return big;
    if (a2 == mod_norm(4 * ell, p)) return big;
    return std::nullopt;
}

// Rows keyed on the trace for j = 1728 over F_ell (four quartic twists when
// ell = 1 mod 4). The printed source of this table has two defects in the
// p = 3 mod 4 block, resolved against the geometric fiber count at
// (p, ell) = (7, 11): the condition "delta - 1" is delta = -1, and the value
// of that row is (p+3)/2 (as printed it is not an integer for p = 3 mod 4).
inline std::optional<int64_t> row_j1728(int64_t p, int64_t ell, int64_t a, int delta) {
    a = mod_norm(a, p);
    if (p % 4 == 1) {
        if (a != 0 && delta == 0) return (p * p - 1) / 4;
        if (a != 0 && delta == 1) return 0;
        if (a == 0 && delta == -1) return (p + 3) / 2;
        if (a == 0 && delta == 1 && ell % 4 == 1) return (p * p - 1) / 4;
        return std::nullopt; // fall through to (p-1)/2
    }
    if (a != 0 && delta == 0) return (p * p + 3) / 4;
    if (a != 0) return 1;
    if (a == 0 && delta == 1) return (p - 1) / 2;
    if (a == 0 && delta == -1 && ell % 4 == 3) return (p + 3) / 2;
    return std::nullopt; // fall through to (p^2+3)/4
}

inline int64_t fallthrough_j1728(int64_t p) {
    return p % 4 == 1 ? (p - 1) / 2 : (p * p + 3) / 4;
}

// A generator of the cyclic group F_ell^*.
inline int64_t multiplicative_generator(int64_t ell) {
    std::vector<int64_t> prime_divs;
    for (auto& [q, e] : factor_int(ell - 1)) prime_divs.push_back(q);
    for (int64_t g = 2; g < ell; ++g) {
        bool ok = true;
        for (int64_t q : prime_divs) {
            // g^((ell-1)/q) mod ell by square-and-multiply
            int64_t e = (ell - 1) / q, r = 1, b = g;
            while (e) {
                if (e & 1) r = r * b % ell;
                b = b * b % ell;
                e >>= 1;
            }
            if (r == 1) { ok = false; break; }
        }
        if (ok) return g;
    }
    check(false, ErrKind::internal, "no generator of F_ell^*");
    return 0;
}

inline int delta_of_trace(int64_t a, int64_t ell, int64_t p) {
    return legendre(mod_norm(a * a - 4 * ell, p), p);
}

} // namespace detail

// The size of the fiber of X above a single point of P^1(F_ell), by direct
// table lookup (rows evaluated top to bottom, first match wins). The table
// is total; inputs that match no row raise an internal error.
inline int64_t fiber_size(const FiberInput& in) {
    int64_t p = in.p, ell = in.ell;
    check(p >= 5 && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
          "p must be a prime at least 5");
    check(ell >= 2 && ell != p && is_prime_u64(static_cast<uint64_t>(ell)), ErrKind::domain,
          "ell must be a prime different from p");
    if (in.j_infinity) {
        int64_t r = ell % p;
        return (r == 1 || r == p - 1) ? (p - 1) / 2 : 0;
    }
    check(ell >= 5, ErrKind::domain, "affine fibers need ell at least 5");
    int64_t j = mod_norm(in.j, ell);
    int64_t a = mod_norm(in.a, p);
    if (j == 0) {
        if (ell % 3 == 2) {
            check(in.delta != 0, ErrKind::internal,
                  "supersingular j = 0 must have delta nonzero");
            return in.delta == 1 ? (p - 1) / 2 : (p + 3) / 2;
        }
        auto v = detail::row_j0(p, ell, a);
        if (v) return *v;
        return p % 3 == 1 ? 0 : 1;
    }
    if (j == mod_norm(1728, ell)) {
        auto v = detail::row_j1728(p, ell, a, in.delta);
        return v ? *v : detail::fallthrough_j1728(p);
    }
    if (a == 0) {
        check(in.delta != 0, ErrKind::internal, "a = 0 must have delta nonzero");
        return in.delta == 1 ? (p - 1) / 2 : (p + 3) / 2;
    }
    if (in.delta == 1) return 0;
    if (in.delta == -1) return 1;
    // a != 0 and delta = 0: the only rows needing the isogeny count
    check(static_cast<bool>(in.isogenies), ErrKind::domain,
          "isogeny count required for a != 0, delta = 0");
    int64_t i = in.isogenies();
    if (i > 2) return p * (p - 1) / 2;
    check(i <= 1, ErrKind::internal, "fiber table has no row for i = 2");
    return 0;
}

// The fiber size above a given affine j in F_ell, deriving (a, delta, i)
// from curves. At j in {0, 1728} with extra twists the table rows keyed on
// the trace are evaluated against the whole multiset of twist traces; all
// matching rows must agree on the value (a disagreement means the table was
// misread and raises an internal error).
inline int64_t fiber_size_at(int64_t p, int64_t ell, int64_t j, uint64_t seed = 1) {
    check(p >= 5 && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
          "p must be a prime at least 5");
    check(ell >= 5 && ell != p && is_prime_u64(static_cast<uint64_t>(ell)), ErrKind::domain,
          "ell must be a prime at least 5, different from p");
    j = mod_norm(j, ell);
    FieldPtr F = Field::prime(ell);
    bool j0 = j == 0, j1728 = j == mod_norm(1728, ell);
    bool many_twists = (j0 && ell % 3 == 1) || (j1728 && ell % 4 == 1);
    if (!many_twists) {
        ec::Curve<Field> E = ec::curve_from_j(*F, F->from_int(j));
        int64_t a = mod_norm(ec::trace_of_frobenius(E, seed).get_si(), p);
        FiberInput in;
        in.p = p;
        in.ell = ell;
        in.j = j;
        in.a = a;
        in.delta = detail::delta_of_trace(a, ell, p);
        in.isogenies = [E, p]() { return isog::count_rational_p_isogenies(E, p); };
        return fiber_size(in);
    }
    // j = 0 with six sextic twists, or j = 1728 with four quartic twists
    int64_t g = detail::multiplicative_generator(ell);
    int ntw = j0 ? 6 : 4;
    std::vector<int64_t> values;
    int64_t d = 1;
    for (int k = 0; k < ntw; ++k, d = d * g % ell) {
        ec::Curve<Field> E = j0 ? ec::make_curve(*F, F->zero(), F->from_int(d))
                                : ec::make_curve(*F, F->from_int(d), F->zero());
        int64_t a = mod_norm(ec::trace_of_frobenius(E, seed).get_si(), p);
        std::optional<int64_t> v =
            j0 ? detail::row_j0(p, ell, a)
               : detail::row_j1728(p, ell, a, detail::delta_of_trace(a, ell, p));
        if (v) values.push_back(*v);
    }
    if (values.empty()) {
        if (j0) return p % 3 == 1 ? 0 : 1;
        return detail::fallthrough_j1728(p);
    }
    for (int64_t v : values)
        check(v == values.front(), ErrKind::internal,
              "twist classes match fiber rows with conflicting values");
    return values.front();
}

// #X(F_ell): the cusp fiber plus the fibers above every affine j.
inline int64_t total_points(int64_t p, int64_t ell, uint64_t seed = 1) {
    check(p >= 5 && ell >= 5 && p != ell, ErrKind::domain,
          "p and ell must be distinct primes at least 5");
    FiberInput cusp;
    cusp.p = p;
    cusp.ell = ell;
    cusp.j_infinity = true;
    int64_t total = fiber_size(cusp);
    for (int64_t j = 0; j < ell; ++j) total += fiber_size_at(p, ell, j, seed);
    return total;
}

// ---------------------------------------------------------------------------
// Injectivity scan.
// ---------------------------------------------------------------------------

// Every prime that can divide a difference of two of the thirteen CM
// j-invariants: reductions of distinct CM points can only meet above these.
inline std::vector<int64_t> candidate_primes() {
    std::vector<int64_t> out;
    for (int64_t q = 3; q <= 127; ++q)
        if (is_prime_u64(static_cast<uint64_t>(q))) out.push_back(q);
    for (int64_t q : {137, 139, 157, 163, 173, 193, 197, 211, 229, 233,
                      241, 257, 277, 283, 293, 317, 331, 389, 433, 571, 643, 997})
        out.push_back(q);
    return out;
}

// A witnessed collision: two distinct CM points whose necklace reductions at
// ell are equal points of X(F_ell-bar), above the common j mod ell.
struct CollisionRecord {
    int64_t p = 0;
    int64_t ell = 0;
    int64_t j = 0;       // common j-invariant mod ell
    int64_t fiber = 0;   // #X_j, the closed-form fiber size
    int64_t r = 0;       // number of CM points reducing to this j mod ell
    int64_t D1 = 0;      // the colliding pair of discriminants, D1 > D2
    int64_t D2 = 0;
};

// Scan for collisions: for each (p, ell), group the CM points of X_p by
// j-invariant mod ell, reduce the necklaces within each group of size >= 2,
// and compare all pairs. Records are sorted by (p, ell, j, D1, D2).
inline std::vector<CollisionRecord> injectivity_scan(const std::vector<int64_t>& p_range,
                                                     const std::vector<int64_t>& ell_set,
                                                     uint64_t seed = 1) {
    std::vector<CollisionRecord> out;
    for (int64_t p : p_range) {
        check(p >= 5 && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
              "p must be a prime at least 5");
        Gamma g = cartan::canonical_gamma(p);
        std::vector<CmOrder> pts = cmred::cm_points(p);
        for (int64_t ell : ell_set) {
            if (ell < 5 || ell == p) continue;
            check(is_prime_u64(static_cast<uint64_t>(ell)), ErrKind::domain,
                  "ell must be prime");
            // group by j mod ell
            std::vector<std::pair<int64_t, std::vector<const CmOrder*>>> groups;
            for (auto& O : pts) {
                int64_t jr = mod_norm(mpz_class(O.j % ell).get_si(), ell);
                auto it = std::find_if(groups.begin(), groups.end(),
                                       [&](auto& gr) { return gr.first == jr; });
                if (it == groups.end()) groups.push_back({jr, {&O}});
                else it->second.push_back(&O);
            }
            std::sort(groups.begin(), groups.end(),
                      [](auto& x, auto& y) { return x.first < y.first; });
            for (auto& [jr, members] : groups) {
                if (members.size() < 2) continue;
                std::vector<cmred::ReducedPoint> red;
                for (auto* O : members)
                    red.push_back(cmred::cm_reduced_necklace(*O, p, ell, g, seed));
                int64_t fib = -1;
                for (size_t u = 0; u < red.size(); ++u)
                    for (size_t v = u + 1; v < red.size(); ++v) {
                        if (!bridge::compare_points(red[u].necklace, red[v].necklace))
                            continue;
                        if (fib < 0) fib = fiber_size_at(p, ell, jr, seed);
                        CollisionRecord rec;
                        rec.p = p;
                        rec.ell = ell;
                        rec.j = jr;
                        rec.fiber = fib;
                        rec.r = static_cast<int64_t>(members.size());
                        rec.D1 = std::max(members[u]->D, members[v]->D);
                        rec.D2 = std::min(members[u]->D, members[v]->D);
                        out.push_back(rec);
                    }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CollisionRecord& x, const CollisionRecord& y) {
        return std::tie(x.p, x.ell, x.j, x.D1, x.D2) < std::tie(y.p, y.ell, y.j, y.D1, y.D2);
    });
    return out;
}

} // namespace necklace::xcount

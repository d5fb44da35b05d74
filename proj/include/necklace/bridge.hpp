// Geometric necklaces on elliptic curves over finite fields: the dictionary
// between the p+1 order-p subgroups ("pearls") and P^1(F_p), the Frobenius
// action in pearl coordinates, enumeration of rational necklaces and of the
// points of the moduli curve above a given j-invariant, the equality test
// for reduced points, and diagram rendering.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_BRIDGE_HPP
#define NECKLACE_BRIDGE_HPP

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "necklace/cartan.hpp"
#include "necklace/isog.hpp"

namespace necklace::bridge {

using namespace necklace::ff;
using namespace necklace::ec;
using namespace necklace::isog;
using cartan::Gamma;
using cartan::Necklace;
using cartan::Pgl2;
using cartan::ProjPoint;

// One order-p subgroup of E[p]: its kernel polynomial over the p-isogeny
// field L, its coordinate in P^1(F_p) relative to a fixed torsion basis
// (slope s for <P + sQ>, infinity for <Q>), and the j-invariant of the
// quotient curve E/C (an element of L).
struct GeoPearl {
    FPoly kernel;
    ProjPoint coord;
    FieldElt cod_j;
};

// The full pearl data of (E, p): the p-isogeny field L (the smallest
// extension of the base field over which every one of the p+1 subgroups is
// rational), the base-changed curve, the p+1 pearls indexed by slope
// (0, 1, ..., p-1, infinity), and the Frobenius action on slopes.
struct PearlSystem {
    Curve<Field> E;  // over the base field
    int64_t p = 0;
    FieldPtr L;      // p-isogeny field, canonical presentation
    Embedding embFL; // base field -> L
    Curve<Field> EL; // E base-changed to L
    std::vector<GeoPearl> pearls; // size p+1; pearls[s] has slope s, back() = infinity
    Pgl2 frob;       // q-power Frobenius acting on slopes
    FieldPtr M;      // field of the full p-torsion (contains L)
    Curve<Field> EM; // E base-changed to M (same coefficient chain as EL)
    Point<Field> P, Q; // basis of E[p] over M; slope s labels <P + sQ>, infinity <Q>
};

namespace detail {
inline size_t slot(const ProjPoint& z, int64_t p) {
    return static_cast<size_t>(z.key(p)); // 0..p-1, then p for infinity
}
} // namespace detail

// Degree of the smallest extension of the curve's field over which all of
// E[p] is rational: the multiplicative order of the companion matrix of
// x^2 - a x + q in GL_2(F_p).
inline int full_torsion_degree(const Curve<Field>& E, int64_t p, uint64_t seed = 1) {
    mpz_class a = trace_of_frobenius(E, seed);
    int64_t am = mod_norm(mpz_class(a % p).get_si(), p);
    int64_t qm = mod_norm(mpz_class(E.F->size() % p).get_si(), p);
    check(qm != 0, ErrKind::domain, "p equals the characteristic");
    int64_t m[2][2] = {{0, mod_norm(-qm, p)}, {1, am}};
    int64_t cur[2][2] = {{m[0][0], m[0][1]}, {m[1][0], m[1][1]}};
    int64_t cap = p * (p * p - 1);
    for (int k = 1; k <= cap; ++k) {
        if (cur[0][0] == 1 && cur[1][1] == 1 && cur[0][1] == 0 && cur[1][0] == 0) return k;
        int64_t nxt[2][2];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                nxt[i][j] = mod_norm(cur[i][0] * m[0][j] + cur[i][1] * m[1][j], p);
        std::copy(&nxt[0][0], &nxt[0][0] + 4, &cur[0][0]);
    }
    throw Error(ErrKind::internal, "Frobenius matrix order not found");
}

// Build the pearl system of (E, p): torsion basis over the field of full
// p-torsion, kernel polynomials coerced down to the p-isogeny field, and the
// Frobenius action both as a PGL_2(F_p) element (from the matrix of
// Frobenius on the basis) and as the permutation induced by coefficient-wise
// Frobenius on kernel polynomials; the two are cross-checked.
inline PearlSystem pearl_system(const Curve<Field>& E, int64_t p, uint64_t seed = 1) {
    const Field& F = *E.F;
    check(p >= 3 && p != F.p && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
          "p must be an odd prime different from the characteristic");
    PearlSystem S;
    S.E = E;
    S.p = p;
    // p-isogeny field L and the field M of full p-torsion, with L inside M.
    int dL = static_cast<int>(p_isogeny_field_degree(E, p));
    S.L = dL == 1 ? F.shared_from_this() : make_ext(F.p, F.k * dL);
    S.embFL = make_embedding(F.shared_from_this(), S.L);
    S.EL = make_curve(*S.L, S.embFL.map(E.A), S.embFL.map(E.B));
    int dM = full_torsion_degree(E, p, seed);
    FieldPtr M = dM * F.k == S.L->k ? S.L : make_ext(F.p, F.k * dM);
    Embedding embLM = make_embedding(S.L, M);
    auto liftFM = [&](const FieldElt& a) { return embLM.map(S.embFL.map(a)); };
    Curve<Field> EM = make_curve(*M, liftFM(E.A), liftFM(E.B));
    mpz_class N = group_order_over_ext(E, dM, seed);
    auto [P, Q] = torsion_basis_ord(EM, p, N, seed);
    S.M = M;
    S.EM = EM;
    S.P = P;
    S.Q = Q;
    SubfieldCoercion down(embLM);
    auto lower = [&](const FPoly& f) {
        FPoly g;
        for (auto& c : f) {
            auto d = down.coerce(c);
            check(d.has_value(), ErrKind::internal, "kernel polynomial not over the isogeny field");
            g.push_back(*d);
        }
        return g;
    };
    // Pearls: <P + sQ> for s in F_p, then <Q>.
    Point<Field> R = P;
    for (int64_t s = 0; s <= p; ++s) {
        const Point<Field>& gen = s == p ? Q : R;
        FPoly hM = kernel_poly_from_x(EM, gen.x, p);
        FPoly hL = lower(hM);
        auto phi = velu_odd(S.EL, hL);
        S.pearls.push_back(GeoPearl{std::move(hL), s == p ? cartan::pp_inf() : cartan::pp(s),
                                    j_invariant(phi.codomain)});
        if (s < p) R = pt_add(EM, R, Q);
    }
    // Frobenius in slope coordinates: pi(P) = aP + cQ, pi(Q) = bP + dQ sends
    // the slope s to (c + d s) / (a + b s).
    auto mat = frobenius_matrix(EM, p, P, Q, F.k);
    S.frob = cartan::make_pgl2(p, mat[1][1], mat[1][0], mat[0][1], mat[0][0]);
    // Cross-check: coefficient-wise Frobenius on kernel polynomials induces
    // the same permutation of pearls.
    for (int64_t s = 0; s <= p; ++s) {
        FPoly img = coeff_frob(*S.L, S.pearls[static_cast<size_t>(s)].kernel, F.k);
        ProjPoint t = cartan::pgl_act(S.frob, s == p ? cartan::pp_inf() : cartan::pp(s));
        check(peq(*S.L, img, S.pearls[detail::slot(t, p)].kernel), ErrKind::internal,
              "Frobenius matrix action disagrees with coefficient Frobenius");
    }
    return S;
}

inline std::vector<GeoPearl> pearls(const Curve<Field>& E, int64_t p, uint64_t seed = 1) {
    return pearl_system(E, p, seed).pearls;
}

inline Pgl2 frobenius_pearl_action(const Curve<Field>& E, int64_t p, uint64_t seed = 1) {
    return pearl_system(E, p, seed).frob;
}

// A necklace realized on a concrete curve: the abstract necklace together
// with its pearls in necklace order and the p-isogeny field they live over.
struct GeoNecklace {
    Curve<Field> E; // over the base field
    int64_t p = 0;
    Necklace abstract;
    std::vector<GeoPearl> pearls; // ordered as abstract.order
    FieldPtr L;                   // p-isogeny field descriptor (degree + modulus)
};

inline GeoNecklace realize(const PearlSystem& S, const Necklace& N) {
    GeoNecklace G{S.E, S.p, N, {}, S.L};
    for (auto& z : N.order) G.pearls.push_back(S.pearls[detail::slot(z, S.p)]);
    return G;
}

// All necklaces on E defined over the base field: the ones fixed (as a set)
// by the Frobenius action on pearls.
inline std::vector<GeoNecklace> rational_geo_necklaces(const Curve<Field>& E, int64_t p,
                                                       const Gamma& g, uint64_t seed = 1) {
    auto S = pearl_system(E, p, seed);
    std::vector<GeoNecklace> out;
    for (auto& N : cartan::rational_necklaces(S.frob, g)) out.push_back(realize(S, N));
    return out;
}

// A point of the moduli curve above j: represented by the orbit of a
// necklace under Aut(E)/{+-1} (a singleton unless j is 0 or 1728).
struct XPoint {
    FieldElt j;
    std::vector<GeoNecklace> orbit;
};

namespace detail {
// Permutation of slopes induced by the automorphism scaling x-coordinates by
// c (c = -1 for j = 1728, a primitive cube root of unity for j = 0), matched
// through the kernel polynomials over a field containing c.
inline std::vector<int64_t> aut_slope_perm(const PearlSystem& S, bool j_zero) {
    const Field& L = *S.L;
    bool need_ext = j_zero && (L.size() - 1) % 3 != 0;
    FieldPtr Lc = need_ext ? make_ext(L.p, L.k * 2) : S.L;
    std::optional<Embedding> emb;
    if (need_ext) emb = make_embedding(S.L, Lc);
    auto lift = [&](const FPoly& f) {
        if (!emb) return f;
        FPoly g;
        for (auto& c : f) g.push_back(emb->map(c));
        return g;
    };
    const Field& K = *Lc;
    FieldElt c;
    if (j_zero) {
        // primitive cube root of unity: root of x^2 + x + 1
        auto rts = proots(K, pfrom_coeffs(K, {K.one(), K.one(), K.one()}));
        check(!rts.empty(), ErrKind::internal, "no cube root of unity found");
        c = rts.front();
    } else {
        c = K.from_int(-1);
    }
    std::vector<FPoly> kers;
    for (auto& pl : S.pearls) kers.push_back(lift(pl.kernel));
    std::vector<int64_t> perm(kers.size());
    for (size_t s = 0; s < kers.size(); ++s) {
        // image kernel polynomial: monic f(x / c)
        FPoly img = kers[s];
        FieldElt pw = K.one();
        for (size_t i = 0; i < img.size(); ++i) {
            img[img.size() - 1 - i] = K.mul(img[img.size() - 1 - i], pw);
            pw = K.mul(pw, c);
        }
        img = pmonic(K, img);
        int64_t target = -1;
        for (size_t t = 0; t < kers.size(); ++t)
            if (peq(K, img, kers[t])) { target = static_cast<int64_t>(t); break; }
        check(target >= 0, ErrKind::internal, "automorphism does not permute the pearls");
        perm[s] = target;
    }
    return perm;
}

inline Necklace apply_slope_perm(const std::vector<int64_t>& perm, const Necklace& N) {
    int64_t p = N.gamma.p;
    std::vector<ProjPoint> img;
    for (auto& z : N.order) {
        int64_t t = perm[slot(z, p)];
        img.push_back(t == p ? cartan::pp_inf() : cartan::pp(t));
    }
    return Necklace{N.gamma, cartan::dihedral_canonical(p, std::move(img))};
}
} // namespace detail

// The fiber of the moduli curve above j over the curve's base field: orbits
// of necklaces under Aut(E)/{+-1} that are stable (as sets) under Frobenius.
// The two rationality mechanisms at j in {0, 1728} — every orbit member
// rational, or the orbit forming a single Frobenius orbit — are both covered
// by set-stability.
inline std::vector<XPoint> xpoints_above_j(const FieldPtr& F, const FieldElt& j, int64_t p,
                                           const Gamma& g, uint64_t seed = 1) {
    check(F->p >= 5, ErrKind::domain, "characteristic must be at least 5");
    check(p >= 5, ErrKind::domain, "p must be at least 5");
    Curve<Field> E = curve_from_j(*F, j);
    auto S = pearl_system(E, p, seed);
    bool j_zero = F->is_zero(j);
    bool j_1728 = F->eq(j, F->from_int(1728));
    std::vector<int64_t> perm;
    if (j_zero || j_1728) perm = detail::aut_slope_perm(S, j_zero);
    auto all = cartan::enumerate_all_necklaces(p, g);
    std::set<Necklace> done;
    std::vector<XPoint> out;
    for (auto& N : all) {
        if (done.count(N)) continue;
        // automorphism orbit of N
        std::vector<Necklace> orbit{N};
        if (!perm.empty()) {
            Necklace cur = detail::apply_slope_perm(perm, N);
            while (!(cur == N)) {
                orbit.push_back(cur);
                cur = detail::apply_slope_perm(perm, cur);
            }
        }
        for (auto& w : orbit) done.insert(w);
        // Frobenius stability of the orbit as a set
        bool stable = true;
        for (auto& w : orbit) {
            Necklace img = cartan::act(S.frob, w).first;
            bool found = false;
            for (auto& v : orbit) found = found || v == img;
            if (!found) { stable = false; break; }
        }
        if (!stable) continue;
        std::sort(orbit.begin(), orbit.end());
        XPoint x{j, {}};
        for (auto& w : orbit) x.orbit.push_back(realize(S, w));
        out.push_back(std::move(x));
    }
    return out;
}

// Equality of reduced points (E1, v1) and (E2, v2) over the algebraic
// closure: j-invariants equal, p-isogeny fields isomorphic, and after some
// identification of the fields (a Frobenius power over the base) and some
// curve isomorphism, the cyclic kernel-polynomial sequences match up to
// rotation and reversal. For j in {0, 1728} all automorphism transports are
// among the enumerated isomorphisms.
inline bool compare_points(const GeoNecklace& A, const GeoNecklace& B) {
    const Field& F = *A.E.F;
    check(A.p == B.p, ErrKind::domain, "necklaces have different p");
    check(F.p == B.E.F->p && F.k == B.E.F->k && F.modulus == B.E.F->modulus, ErrKind::domain,
          "necklaces over different base fields");
    check(A.abstract.gamma.t == B.abstract.gamma.t && A.abstract.gamma.n == B.abstract.gamma.n,
          ErrKind::domain, "necklaces built from different gamma");
    if (!F.eq(j_invariant(A.E), j_invariant(B.E))) return false;
    if (A.L->k != B.L->k) return false;
    const int64_t p = A.p;
    const size_t n = static_cast<size_t>(p + 1);
    // Work over a field Lc where every isomorphism E_B -> E_A is defined:
    // the transport acts on x by u^2, and u^2 generates an extension of L of
    // degree at most 2 (j = 1728) or 3 (j = 0).
    FieldElt jv = j_invariant(A.E);
    int e = 1;
    if (F.is_zero(jv)) e = 3;
    else if (F.eq(jv, F.from_int(1728))) e = 2;
    FieldPtr Lc = e == 1 ? A.L : make_ext(F.p, A.L->k * e);
    std::optional<Embedding> embA;
    if (e > 1) embA = make_embedding(A.L, Lc);
    const Field& K = *Lc;
    auto liftA = [&](const FPoly& f) {
        if (!embA) return f;
        FPoly g;
        for (auto& c : f) g.push_back(embA->map(c));
        return g;
    };
    std::vector<FPoly> ka;
    for (auto& pl : A.pearls) ka.push_back(liftA(pl.kernel));
    // Curve coefficients inside Lc, along the same embedding chain as the
    // kernel polynomials (base -> L, deterministic, then L -> Lc).
    Embedding embFL = make_embedding(F.shared_from_this(), A.L);
    auto inK = [&](const FieldElt& a) {
        FieldElt b = embFL.map(a);
        return embA ? embA->map(b) : b;
    };
    FieldElt A1 = inK(A.E.A), B1 = inK(A.E.B), A2 = inK(B.E.A), B2 = inK(B.E.B);
    // B's kernel polynomials moved into A's presentation of the isogeny
    // field (one fixed isomorphism; the Frobenius loop below tries the rest).
    std::vector<FPoly> kb0;
    if (A.L->modulus == B.L->modulus) {
        for (auto& pl : B.pearls) kb0.push_back(pl.kernel);
    } else {
        Embedding iso = isomorphisms(B.L, A.L).front();
        for (auto& pl : B.pearls) {
            FPoly f;
            for (auto& c : pl.kernel) f.push_back(iso.map(c));
            kb0.push_back(std::move(f));
        }
    }
    // Candidate x-scalings v = u^2 with u an isomorphism E_B -> E_A:
    // u^4 A2 = A1 and u^6 B2 = B1.
    std::vector<FieldElt> vs;
    if (!K.is_zero(A1) && !K.is_zero(B1)) {
        vs.push_back(K.div(K.mul(B1, A2), K.mul(B2, A1)));
    } else if (K.is_zero(B1)) { // j = 1728
        for (auto& r : proots(K, pfrom_coeffs(K, {K.neg(K.div(A1, A2)), K.zero(), K.one()})))
            vs.push_back(r);
    } else { // j = 0
        for (auto& r : proots(K, pfrom_coeffs(K, {K.neg(K.div(B1, B2)), K.zero(), K.zero(), K.one()})))
            vs.push_back(r);
    }
    // Validate each candidate: v^2 A2 = A1 and v^3 B2 = B1.
    std::vector<FieldElt> valid;
    for (auto& v : vs)
        if (K.eq(K.mul(K.mul(v, v), A2), A1) && K.eq(K.mul(K.mul(K.mul(v, v), v), B2), B1))
            valid.push_back(v);
    if (valid.empty()) return false;
    // Field identifications L_B -> L_A: Frobenius powers over the base.
    int idents = A.L->k / F.k;
    for (int i = 0; i < idents; ++i) {
        for (auto& v : valid) {
            // transported kernel list of B
            std::vector<FPoly> kb;
            for (auto& k0 : kb0) {
                FPoly f = coeff_frob(*A.L, k0, F.k * i);
                f = liftA(f);
                // x -> x / v, made monic: coefficient of x^(d-t) times v^t
                FieldElt pw = K.one();
                for (size_t t = 0; t < f.size(); ++t) {
                    f[f.size() - 1 - t] = K.mul(f[f.size() - 1 - t], pw);
                    pw = K.mul(pw, v);
                }
                kb.push_back(pmonic(K, f));
            }
            // match cyclic sequences up to rotation and reversal
            for (int dir = 0; dir < 2; ++dir) {
                for (size_t shift = 0; shift < n; ++shift) {
                    bool ok = true;
                    for (size_t t = 0; t < n && ok; ++t) {
                        size_t idx = dir == 0 ? (t + shift) % n : (n + shift - t) % n;
                        ok = peq(K, ka[t], kb[idx]);
                    }
                    if (ok) return true;
                }
            }
        }
    }
    return false;
}

// Deterministic diagram of a necklace: p+1 pearls on a regular (p+1)-gon,
// labeled by the quotient j-invariant, with Frobenius conjugation drawn as
// dashed chords. If Frobenius acts as a reflection, the polygon is rotated
// so the axis is horizontal (conjugate pearls mirror each other).
inline std::string render_necklace(const GeoNecklace& N, const std::string& format) {
    check(format == "svg" || format == "dot", ErrKind::unsupported, "unknown render format");
    const Field& L = *N.L;
    int64_t p = N.p;
    size_t n = static_cast<size_t>(p + 1);
    int base_k = N.E.F->k;
    // Frobenius as a permutation of positions along the necklace.
    std::vector<size_t> sigma(n);
    for (size_t i = 0; i < n; ++i) {
        FPoly img = coeff_frob(L, N.pearls[i].kernel, base_k);
        size_t t = n;
        for (size_t s = 0; s < n; ++s)
            if (peq(L, img, N.pearls[s].kernel)) { t = s; break; }
        check(t < n, ErrKind::internal, "Frobenius does not permute the pearls");
        sigma[i] = t;
    }
    // Detect a reflection i -> r - i; if found, rotate by -pi*r/n so the
    // mirror axis is horizontal.
    double phase = 0.0;
    {
        bool refl = true;
        size_t r = sigma[0];
        for (size_t i = 0; i < n && refl; ++i) refl = sigma[i] == (r + n - i % n) % n;
        if (refl) phase = -3.14159265358979324 * static_cast<double>(r) / static_cast<double>(n);
    }
    std::vector<std::pair<double, double>> pos(n);
    for (size_t i = 0; i < n; ++i) {
        double th = 2.0 * 3.14159265358979324 * static_cast<double>(i) / static_cast<double>(n) + phase;
        pos[i] = {200.0 + 150.0 * std::cos(th), 200.0 - 150.0 * std::sin(th)};
    }
    auto label = [&](size_t i) { return L.to_string(N.pearls[i].cod_j); };
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    if (format == "dot") {
        os << "graph necklace {\n  layout=circo;\n";
        for (size_t i = 0; i < n; ++i)
            os << "  n" << i << " [label=\"" << label(i) << "\"];\n";
        for (size_t i = 0; i < n; ++i) os << "  n" << i << " -- n" << (i + 1) % n << ";\n";
        for (size_t i = 0; i < n; ++i)
            if (sigma[i] != i && sigma[i] > i)
                os << "  n" << i << " -- n" << sigma[i] << " [style=dashed];\n";
        os << "}\n";
        return os.str();
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" "
          "viewBox=\"0 0 400 400\">\n";
    for (size_t i = 0; i < n; ++i) {
        size_t j2 = (i + 1) % n;
        os << "<line x1=\"" << pos[i].first << "\" y1=\"" << pos[i].second << "\" x2=\""
           << pos[j2].first << "\" y2=\"" << pos[j2].second << "\" stroke=\"black\"/>\n";
    }
    for (size_t i = 0; i < n; ++i)
        if (sigma[i] != i && sigma[i] > i)
            os << "<line x1=\"" << pos[i].first << "\" y1=\"" << pos[i].second << "\" x2=\""
               << pos[sigma[i]].first << "\" y2=\"" << pos[sigma[i]].second
               << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
    for (size_t i = 0; i < n; ++i) {
        os << "<circle cx=\"" << pos[i].first << "\" cy=\"" << pos[i].second
           << "\" r=\"14\" fill=\"white\" stroke=\"black\"/>\n";
        os << "<text x=\"" << pos[i].first << "\" y=\"" << pos[i].second + 4
           << "\" font-size=\"10\" text-anchor=\"middle\">" << label(i) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace necklace::bridge

#endif // NECKLACE_BRIDGE_HPP

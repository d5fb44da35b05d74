// Elliptic curves in short Weierstrass form y^2 = x^3 + Ax + B over a field
// context K (characteristic != 2, 3 for the generic routines). Includes
// group law, scalar multiplication, j-invariants, twists, division
// polynomials, point counting, torsion bases and Frobenius matrices.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_EC_HPP
#define NECKLACE_EC_HPP

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "necklace/fqpoly.hpp"

namespace necklace::ec {

using namespace necklace::ff;

template <class K>
struct Curve {
    const K* F = nullptr;
    typename K::Elt A, B;
};

template <class K>
struct Point {
    typename K::Elt x, y;
    bool inf = true;
};

template <class K>
Point<K> infty(const K& F) {
    return Point<K>{F.zero(), F.zero(), true};
}

template <class K>
Point<K> make_point(const K& F, typename K::Elt x, typename K::Elt y) {
    return Point<K>{std::move(x), std::move(y), false};
}

template <class K>
typename K::Elt discriminant(const Curve<K>& E);

template <class K>
Curve<K> make_curve(const K& F, typename K::Elt A, typename K::Elt B) {
    Curve<K> E{&F, std::move(A), std::move(B)};
    check(!F.is_zero(discriminant(E)), ErrKind::domain, "singular Weierstrass equation");
    return E;
}

template <class K>
typename K::Elt discriminant(const Curve<K>& E) {
    const K& F = *E.F;
    // -16(4A^3 + 27B^2)
    auto d = F.add(F.mul(F.from_int(4), F.mul(E.A, F.mul(E.A, E.A))),
                   F.mul(F.from_int(27), F.mul(E.B, E.B)));
    return F.mul(F.from_int(-16), d);
}

template <class K>
typename K::Elt j_invariant(const Curve<K>& E) {
    const K& F = *E.F;
    auto a3 = F.mul(F.from_int(4), F.mul(E.A, F.mul(E.A, E.A)));
    auto den = F.add(a3, F.mul(F.from_int(27), F.mul(E.B, E.B)));
    return F.div(F.mul(F.from_int(1728), a3), den);
}

// A curve with the requested j-invariant (the standard representative).
template <class K>
Curve<K> curve_from_j(const K& F, const typename K::Elt& j) {
    if (F.is_zero(j)) return make_curve(F, F.zero(), F.one());
    if (F.eq(j, F.from_int(1728))) return make_curve(F, F.one(), F.zero());
    // A = 3j(1728 - j), B = 2j(1728 - j)^2
    auto t = F.sub(F.from_int(1728), j);
    auto A = F.mul(F.from_int(3), F.mul(j, t));
    auto B = F.mul(F.from_int(2), F.mul(j, F.mul(t, t)));
    return make_curve(F, A, B);
}

// First nonsquare of F in the canonical element order (deterministic).
inline FieldElt first_nonsquare(const Field& F) {
    mpz_class h = (F.size() - 1) / 2;
    std::vector<int64_t> c(static_cast<size_t>(F.k), 0);
    while (true) {
        FieldElt cand = F.from_coeffs(c);
        if (!F.is_zero(cand) && !F.eq(F.pow(cand, h), F.one())) return cand;
        int i = 0;
        while (i < F.k && ++c[static_cast<size_t>(i)] == F.p) c[static_cast<size_t>(i++)] = 0;
        check(i < F.k, ErrKind::internal, "no nonsquare found");
    }
}

// Quadratic twist by the canonical nonsquare (finite fields).
inline Curve<Field> quadratic_twist(const Curve<Field>& E) {
    const Field& F = *E.F;
    FieldElt d = first_nonsquare(F);
    auto d2 = F.mul(d, d);
    return make_curve(F, F.mul(E.A, d2), F.mul(E.B, F.mul(d2, d)));
}

inline FieldElt sqrt_in_field(const Field& F, const FieldElt& a);

template <class K>
bool on_curve(const Curve<K>& E, const Point<K>& P) {
    if (P.inf) return true;
    const K& F = *E.F;
    auto rhs = F.add(F.mul(P.x, F.mul(P.x, P.x)), F.add(F.mul(E.A, P.x), E.B));
    return F.eq(F.mul(P.y, P.y), rhs);
}

template <class K>
bool pt_eq(const K& F, const Point<K>& P, const Point<K>& Q) {
    if (P.inf || Q.inf) return P.inf == Q.inf;
    return F.eq(P.x, Q.x) && F.eq(P.y, Q.y);
}

template <class K>
Point<K> pt_neg(const K& F, Point<K> P) {
    if (!P.inf) P.y = F.neg(P.y);
    return P;
}

template <class K>
Point<K> pt_add(const Curve<K>& E, const Point<K>& P, const Point<K>& Q) {
    const K& F = *E.F;
    if (P.inf) return Q;
    if (Q.inf) return P;
    typename K::Elt lambda;
    if (F.eq(P.x, Q.x)) {
        if (!F.eq(P.y, Q.y) || F.is_zero(P.y)) return infty(F);
        // tangent: (3x^2 + A) / 2y
        auto num = F.add(F.mul(F.from_int(3), F.mul(P.x, P.x)), E.A);
        lambda = F.div(num, F.mul(F.from_int(2), P.y));
    } else {
        lambda = F.div(F.sub(Q.y, P.y), F.sub(Q.x, P.x));
    }
    auto x3 = F.sub(F.sub(F.mul(lambda, lambda), P.x), Q.x);
    auto y3 = F.sub(F.mul(lambda, F.sub(P.x, x3)), P.y);
    return make_point(F, x3, y3);
}

template <class K>
Point<K> pt_mul(const Curve<K>& E, const Point<K>& P, mpz_class n) {
    const K& F = *E.F;
    Point<K> Q = P;
    if (n < 0) { Q = pt_neg(F, Q); n = -n; }
    Point<K> R = infty(F);
    while (n > 0) {
        if (mpz_odd_p(n.get_mpz_t())) R = pt_add(E, R, Q);
        Q = pt_add(E, Q, Q);
        n >>= 1;
    }
    return R;
}

// A random point on E over its finite field of definition.
inline Point<Field> random_point(const Curve<Field>& E, Rng& rng) {
    const Field& F = *E.F;
    mpz_class h = (F.size() - 1) / 2;
    for (int tries = 0; tries < 4096; ++tries) {
        FieldElt x = F.rand(rng);
        FieldElt rhs = F.add(F.mul(x, F.mul(x, x)), F.add(F.mul(E.A, x), E.B));
        if (F.is_zero(rhs)) return make_point(F, x, F.zero());
        if (!F.eq(F.pow(rhs, h), F.one())) continue;
        FieldElt y = sqrt_in_field(F, rhs);
        return make_point(F, x, y);
    }
    throw Error(ErrKind::internal, "could not sample a point");
}

// Square root in F_q (q odd), assuming the argument is a square.
// Tonelli-Shanks, deterministic nonresidue search.
inline FieldElt sqrt_in_field(const Field& F, const FieldElt& a) {
    if (F.is_zero(a)) return a;
    mpz_class q = F.size();
    mpz_class h = (q - 1) / 2;
    check(F.eq(F.pow(a, h), F.one()), ErrKind::domain, "sqrt of a nonsquare");
    if ((q + 1) % 4 == 0) return F.pow(a, (q + 1) / 4);
    // q = 1 mod 4: Tonelli-Shanks
    mpz_class s = q - 1;
    int e = 0;
    while (mpz_even_p(s.get_mpz_t())) { s /= 2; ++e; }
    FieldElt z = F.pow(first_nonsquare(F), s);
    FieldElt x = F.pow(a, (s + 1) / 2);
    FieldElt b = F.pow(a, s);
    int r = e;
    while (!F.eq(b, F.one())) {
        int m = 0;
        FieldElt t = b;
        while (!F.eq(t, F.one())) { t = F.mul(t, t); ++m; }
        check(m < r, ErrKind::internal, "sqrt failed");
        FieldElt g = z;
        for (int i = 0; i < r - m - 1; ++i) g = F.mul(g, g);
        x = F.mul(x, g);
        z = F.mul(g, g);
        b = F.mul(b, z);
        r = m;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Division polynomials.
//
// We use the univariate convention: psi_n = P_n(x) * y^(n even), where
// psi_n is the classical bivariate division polynomial on y^2 = x^3+Ax+B.
// P_n for odd n has degree (n^2-1)/2 and its roots are the x-coordinates of
// the nonzero n-torsion points.
// ---------------------------------------------------------------------------
template <class K>
std::vector<Poly<K>> division_polys(const Curve<K>& E, int nmax) {
    const K& F = *E.F;
    check(nmax >= 0, ErrKind::domain, "division_polys: negative index");
    std::vector<Poly<K>> P(static_cast<size_t>(std::max(nmax, 4)) + 1);
    auto C = [&](int64_t v) { return pconst(F, F.from_int(v)); };
    auto A = E.A, B = E.B;
    P[0] = {};
    P[1] = C(1);
    P[2] = C(2);
    // P_3 = 3x^4 + 6Ax^2 + 12Bx - A^2
    P[3] = pfrom_coeffs(F, {F.neg(F.mul(A, A)), F.mul(F.from_int(12), B),
                            F.mul(F.from_int(6), A), F.zero(), F.from_int(3)});
    // P_4 = 4(x^6 + 5Ax^4 + 20Bx^3 - 5A^2x^2 - 4ABx - 8B^2 - A^3)
    {
        auto A2 = F.mul(A, A);
        std::vector<typename K::Elt> c = {
            F.neg(F.add(F.mul(F.from_int(8), F.mul(B, B)), F.mul(A2, A))),
            F.neg(F.mul(F.from_int(4), F.mul(A, B))),
            F.neg(F.mul(F.from_int(5), A2)),
            F.mul(F.from_int(20), B),
            F.mul(F.from_int(5), A),
            F.zero(),
            F.one()};
        P[4] = pscale(F, pfrom_coeffs(F, c), F.from_int(4));
    }
    // T = x^3 + Ax + B, the y^2 substitution.
    Poly<K> T = pfrom_coeffs(F, {B, A, F.zero(), F.one()});
    Poly<K> T2 = pmul(F, T, T);
    auto inv2 = F.inv(F.from_int(2));
    for (int n = 5; n <= nmax; ++n) {
        size_t m = static_cast<size_t>(n / 2);
        if (n % 2 == 1) {
            Poly<K> a = pmul(F, P[m + 2], pmul(F, P[m], pmul(F, P[m], P[m])));
            Poly<K> b = pmul(F, P[m - 1], pmul(F, P[m + 1], pmul(F, P[m + 1], P[m + 1])));
            if (m % 2 == 0) P[static_cast<size_t>(n)] = psub(F, pmul(F, T2, a), b);
            else P[static_cast<size_t>(n)] = psub(F, a, pmul(F, T2, b));
        } else {
            Poly<K> a = pmul(F, P[m + 2], pmul(F, P[m - 1], P[m - 1]));
            Poly<K> b = pmul(F, P[m - 2], pmul(F, P[m + 1], P[m + 1]));
            P[static_cast<size_t>(n)] = pscale(F, pmul(F, P[m], psub(F, a, b)), inv2);
        }
    }
    P.resize(static_cast<size_t>(nmax) + 1);
    return P;
}

// The n-division polynomial P_n alone.
template <class K>
Poly<K> division_poly(const Curve<K>& E, int n) {
    return division_polys(E, n).back();
}

// ---------------------------------------------------------------------------
// Point counting.
// ---------------------------------------------------------------------------

// #E(F_q) by direct summation of character values; fine up to q ~ 10^4.
inline mpz_class count_points_enum(const Curve<Field>& E) {
    const Field& F = *E.F;
    mpz_class q = F.size();
    check(q <= 100000, ErrKind::internal, "enumeration count too large");
    mpz_class h = (q - 1) / 2;
    mpz_class total = 1; // infinity
    // iterate over all field elements
    int64_t p = F.p;
    int k = F.k;
    std::vector<int64_t> c(static_cast<size_t>(k), 0);
    while (true) {
        FieldElt x = F.from_coeffs(c);
        FieldElt rhs = F.add(F.mul(x, F.mul(x, x)), F.add(F.mul(E.A, x), E.B));
        if (F.is_zero(rhs)) total += 1;
        else if (F.eq(F.pow(rhs, h), F.one())) total += 2;
        int i = 0;
        while (i < k && ++c[static_cast<size_t>(i)] == p) c[static_cast<size_t>(i++)] = 0;
        if (i == k) break;
    }
    return total;
}

// Order of a point via baby-step giant-step inside the Hasse interval.
inline mpz_class bsgs_point_order_multiple(const Curve<Field>& E, const Point<Field>& P) {
    const Field& F = *E.F;
    mpz_class q = F.size();
    mpz_class sq = sqrt(q);
    while (sq * sq < q) ++sq;
    mpz_class lo = q + 1 - 2 * sq, hi = q + 1 + 2 * sq;
    // Find M in [lo, hi] with M*P = 0: BSGS on the shifted interval.
    mpz_class width = hi - lo + 1;
    mpz_class m = sqrt(width) + 1;
    // baby steps: j*P for j in [0, m)
    std::map<std::pair<std::vector<int64_t>, std::vector<int64_t>>, mpz_class> table;
    Point<Field> Pj = infty(F);
    for (mpz_class j = 0; j < m; ++j) {
        if (Pj.inf) table[{{}, {}}] = j;
        else table[{Pj.x.c, Pj.y.c}] = j;
        Pj = pt_add(E, Pj, P);
    }
    Point<Field> base = pt_mul(E, P, lo);
    Point<Field> giant = pt_mul(E, P, m);
    Point<Field> cur = base;
    for (mpz_class i = 0;; ++i) {
        check(lo + i * m <= hi + m, ErrKind::internal, "bsgs failed");
        auto key = cur.inf ? std::make_pair(std::vector<int64_t>{}, std::vector<int64_t>{})
                           : std::make_pair(cur.x.c, cur.y.c);
        auto it = table.find(key);
        if (it != table.end()) {
            mpz_class M = lo + i * m - it->second;
            if (M > 0 && pt_mul(E, P, M).inf) return M;
            // negative-direction match: M' = lo + i*m + j also possible when
            // cur = -(jP); handled by continuing the scan.
        }
        cur = pt_add(E, cur, giant);
    }
}

// #E(F_q) via random point orders (Hasse interval uniqueness), for larger q.
inline mpz_class count_points_bsgs(const Curve<Field>& E, uint64_t seed = 1) {
    const Field& F = *E.F;
    mpz_class q = F.size();
    mpz_class sq = sqrt(q);
    while (sq * sq < q) ++sq;
    mpz_class lo = q + 1 - 2 * sq, hi = q + 1 + 2 * sq;
    Rng rng(seed);
    mpz_class L = 1;
    for (int trials = 0; trials < 128; ++trials) {
        Point<Field> P = random_point(E, rng);
        mpz_class M = bsgs_point_order_multiple(E, P);
        // reduce M to the exact order of P
        for (auto [r, e] : factor_mpz(M)) {
            for (int i = 0; i < e; ++i) {
                if (pt_mul(E, P, M / r).inf) M /= r;
                else break;
            }
        }
        mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), M.get_mpz_t());
        // count multiples of L in [lo, hi]
        mpz_class first = ((lo + L - 1) / L) * L;
        if (first > hi) throw Error(ErrKind::internal, "no group order multiple in Hasse interval");
        if (first + L > hi) return first;
    }
    throw Error(ErrKind::internal, "group order not determined");
}

inline mpz_class count_points(const Curve<Field>& E, uint64_t seed = 1) {
    if (E.F->size() <= 10000) return count_points_enum(E);
    return count_points_bsgs(E, seed);
}

// Trace of Frobenius a with #E(F_q) = q + 1 - a.
inline mpz_class trace_of_frobenius(const Curve<Field>& E, uint64_t seed = 1) {
    return E.F->size() + 1 - count_points(E, seed);
}

inline bool is_supersingular(const Curve<Field>& E) {
    mpz_class a = trace_of_frobenius(E);
    return a % E.F->p == 0;
}

// #E over the degree-k extension of the curve's own field, from the trace
// over the base via the standard recurrence a_0 = 2, a_1 = a,
// a_{i+1} = a*a_i - q*a_{i-1}; then #E(F_{q^k}) = q^k + 1 - a_k.
inline mpz_class group_order_over_ext(const Curve<Field>& E, int k, uint64_t seed = 1) {
    check(k >= 1, ErrKind::domain, "extension degree must be positive");
    mpz_class q = E.F->size();
    mpz_class a = trace_of_frobenius(E, seed);
    mpz_class prev = 2, cur = a;
    for (int i = 1; i < k; ++i) {
        mpz_class next = a * cur - q * prev;
        prev = cur;
        cur = next;
    }
    mpz_class qk;
    mpz_pow_ui(qk.get_mpz_t(), q.get_mpz_t(), static_cast<unsigned long>(k));
    return qk + 1 - cur;
}

// ---------------------------------------------------------------------------
// Torsion bases and the Frobenius matrix on E[n] (small prime n).
// ---------------------------------------------------------------------------

// A point of exact prime order n on E over its field, or nullopt.
inline std::optional<Point<Field>> point_of_order(const Curve<Field>& E, int64_t n,
                                                  mpz_class group_order, Rng& rng) {
    mpz_class m = group_order;
    int e = 0;
    while (m % n == 0) { m /= n; ++e; }
    if (e == 0) return std::nullopt;
    for (int tries = 0; tries < 256; ++tries) {
        Point<Field> P = pt_mul(E, random_point(E, rng), m);
        if (P.inf) continue;
        // P has order n^i; reduce to exact order n
        while (!pt_mul(E, P, n).inf) P = pt_mul(E, P, n);
        return P;
    }
    return std::nullopt;
}

// Basis (P, Q) of E[n] over the curve's field of definition (requires the
// full n-torsion to be rational; n a small prime). The group order is passed
// in so callers over large extensions can supply it exactly.
inline std::pair<Point<Field>, Point<Field>> torsion_basis_ord(const Curve<Field>& E, int64_t n,
                                                               const mpz_class& N,
                                                               uint64_t seed = 1) {
    const Field& F = *E.F;
    check(N % (mpz_class(n) * n) == 0, ErrKind::domain, "full n-torsion is not rational");
    Rng rng(seed);
    auto P = point_of_order(E, n, N, rng);
    check(P.has_value(), ErrKind::internal, "torsion point not found");
    // multiples of P, for the independence test
    std::vector<Point<Field>> mult(static_cast<size_t>(n), infty(F));
    for (int64_t i = 1; i < n; ++i) mult[static_cast<size_t>(i)] = pt_add(E, mult[static_cast<size_t>(i - 1)], *P);
    for (int tries = 0; tries < 4096; ++tries) {
        auto Q = point_of_order(E, n, N, rng);
        if (!Q) break;
        bool dep = false;
        for (auto& M : mult) dep = dep || pt_eq(F, M, *Q);
        if (!dep) return {*P, *Q};
    }
    throw Error(ErrKind::internal, "independent torsion point not found");
}

inline std::pair<Point<Field>, Point<Field>> torsion_basis(const Curve<Field>& E, int64_t n,
                                                           uint64_t seed = 1) {
    return torsion_basis_ord(E, n, count_points(E, seed), seed);
}

// Discrete log of R in the basis (P, Q) of E[n]: R = aP + bQ, n small.
inline std::pair<int64_t, int64_t> torsion_dlog(const Curve<Field>& E, int64_t n,
                                                const Point<Field>& P, const Point<Field>& Q,
                                                const Point<Field>& R) {
    const Field& F = *E.F;
    Point<Field> Pi = infty(F);
    for (int64_t a = 0; a < n; ++a) {
        Point<Field> S = Pi; // a*P
        for (int64_t b = 0; b < n; ++b) {
            if (pt_eq(F, S, R)) return {a, b};
            S = pt_add(E, S, Q);
        }
        Pi = pt_add(E, Pi, P);
    }
    throw Error(ErrKind::internal, "point not in the torsion subgroup");
}

// Matrix of the p^frob_power Frobenius on E[n] with respect to a basis
// defined over an extension: E is the base-changed curve; frob_power is the
// degree of the original base field over F_p (so the map is x -> x^q0).
// Returns {{a, b}, {c, d}} with pi(P) = aP + cQ, pi(Q) = bP + dQ.
inline std::array<std::array<int64_t, 2>, 2> frobenius_matrix(const Curve<Field>& E, int64_t n,
                                                              const Point<Field>& P,
                                                              const Point<Field>& Q,
                                                              int frob_power = 1) {
    const Field& F = *E.F;
    auto apply_frob = [&](const Point<Field>& R) {
        if (R.inf) return R;
        return make_point(F, F.frob(R.x, frob_power), F.frob(R.y, frob_power));
    };
    auto [a, c] = torsion_dlog(E, n, P, Q, apply_frob(P));
    auto [b, d] = torsion_dlog(E, n, P, Q, apply_frob(Q));
    return {{{a, b}, {c, d}}};
}

// Number of extra automorphisms (beyond +-1): j = 0 has 6 automorphisms,
// j = 1728 has 4, otherwise 2 (char >= 5).
template <class K>
int automorphism_count(const Curve<K>& E) {
    const K& F = *E.F;
    auto j = j_invariant(E);
    if (F.is_zero(j)) return 6;
    if (F.eq(j, F.from_int(1728))) return 4;
    return 2;
}

// ---------------------------------------------------------------------------
// Long Weierstrass support (only what we need): completion of the square /
// cube for char >= 5, and brute-force counting for tiny fields of any
// characteristic.
// ---------------------------------------------------------------------------
struct LongModel {
    int64_t a1, a2, a3, a4, a6;
};

// Short model Y^2 = X^3 - 27 c4 X - 54 c6 isomorphic to the long model
// (valid in characteristic >= 5).
inline Curve<Field> short_from_long(const Field& F, const LongModel& M) {
    check(F.p >= 5, ErrKind::domain, "short model needs characteristic >= 5");
    auto a1 = F.from_int(M.a1), a2 = F.from_int(M.a2), a3 = F.from_int(M.a3),
         a4 = F.from_int(M.a4), a6 = F.from_int(M.a6);
    auto b2 = F.add(F.mul(a1, a1), F.mul(F.from_int(4), a2));
    auto b4 = F.add(F.mul(F.from_int(2), a4), F.mul(a1, a3));
    auto b6 = F.add(F.mul(a3, a3), F.mul(F.from_int(4), a6));
    auto c4 = F.sub(F.mul(b2, b2), F.mul(F.from_int(24), b4));
    auto c6 = F.add(F.sub(F.mul(F.from_int(36), F.mul(b2, b4)), F.mul(b2, F.mul(b2, b2))),
                    F.mul(F.from_int(-216), b6));
    return make_curve(F, F.mul(F.from_int(-27), c4), F.mul(F.from_int(-54), c6));
}

// #E(F_p) for a long model by brute force (any characteristic, tiny p).
inline int64_t count_points_long(int64_t p, const LongModel& M) {
    check(p <= 1000, ErrKind::internal, "long-model counting is brute force only");
    auto md = [&](int64_t v) { return mod_norm(v, p); };
    int64_t total = 1;
    for (int64_t x = 0; x < p; ++x)
        for (int64_t y = 0; y < p; ++y) {
            int64_t lhs = md(y * y + M.a1 * x * y + M.a3 * y);
            int64_t rhs = md(x * x * x + M.a2 * x * x + M.a4 * x + M.a6);
            if (lhs == rhs) ++total;
        }
    return total;
}

} // namespace necklace::ec

#endif // NECKLACE_EC_HPP

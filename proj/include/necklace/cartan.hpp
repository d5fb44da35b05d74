// The abstract necklace calculus on P^1(F_p): PGL_2 elements, the canonical
// generator gamma of F_{p^2}^* and its invariant xi, cross-ratios, necklace
// construction and canonicalization, and rational-necklace counting.
//
// A necklace is a dihedral equivalence class of orderings (C_0, ..., C_p) of
// P^1(F_p) in which every four cyclically-consecutive entries have
// cross-ratio xi = t^2/(t^2 - n).
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_CARTAN_HPP
#define NECKLACE_CARTAN_HPP

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "necklace/fq.hpp"

namespace necklace::cartan {

using namespace necklace::ff;

// A point of P^1(F_p): a slope in [0, p) or infinity.
struct ProjPoint {
    int64_t v = 0; // slope, or kInf
    static constexpr int64_t kInf = -1;
    bool is_inf() const { return v == kInf; }
    bool operator==(const ProjPoint&) const = default;
    // canonical order: 0, 1, ..., p-1, then infinity
    int64_t key(int64_t p) const { return is_inf() ? p : v; }
};

inline ProjPoint pp(int64_t v) { return ProjPoint{v}; }
inline ProjPoint pp_inf() { return ProjPoint{ProjPoint::kInf}; }

// Generator data of the non-split Cartan: gamma in F_{p^2}^* with
// characteristic polynomial x^2 - t x + n, primitive (order p^2 - 1).
struct Gamma {
    int64_t p = 0, t = 0, n = 0;
    bool operator==(const Gamma&) const = default;
};

inline bool is_primitive_quadratic(int64_t p, int64_t t, int64_t n) {
    if (legendre(mod_norm(t * t - 4 * n, p), p) != -1) return false; // reducible
    auto F = Field::ext_with_modulus(p, ZPoly{mod_norm(n, p), mod_norm(-t, p), 1});
    auto root = F->from_coeffs({0, 1});
    return F->mult_order(root) == mpz_class(p) * p - 1;
}

// The smallest (t asc, then n asc) primitive irreducible x^2 - t x + n.
inline Gamma canonical_gamma(int64_t p) {
    check(p >= 3 && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain, "p must be an odd prime");
    for (int64_t t = 0; t < p; ++t)
        for (int64_t n = 0; n < p; ++n)
            if (is_primitive_quadratic(p, t, n)) {
                // the norm of a generator generates F_p^*
                int64_t ord = 1, cur = n;
                while (cur != 1) { cur = mul_mod(cur, n, p); ++ord; }
                check(ord == p - 1, ErrKind::internal, "norm of primitive gamma must generate F_p^*");
                return Gamma{p, t, n};
            }
    throw Error(ErrKind::internal, "no primitive quadratic found");
}

// xi = t^2 / (t^2 - n) in F_p.
inline int64_t xi(const Gamma& g) {
    check(g.t != 0, ErrKind::domain, "gamma with trace 0 is never primitive for p > 3");
    int64_t t2 = mul_mod(g.t, g.t, g.p);
    int64_t den = mod_norm(t2 - g.n, g.p);
    check(den != 0, ErrKind::domain, "t^2 = n is excluded for primitive gamma");
    return mul_mod(t2, inv_mod(den, g.p), g.p);
}

// An element of PGL_2(F_p), stored with the first nonzero entry (row-major)
// normalized to 1.
struct Pgl2 {
    int64_t p = 0;
    int64_t m[2][2] = {{1, 0}, {0, 1}};
    bool operator==(const Pgl2&) const = default;
};

inline Pgl2 make_pgl2(int64_t p, int64_t a, int64_t b, int64_t c, int64_t d) {
    a = mod_norm(a, p); b = mod_norm(b, p); c = mod_norm(c, p); d = mod_norm(d, p);
    check(mod_norm(a * d - b * c, p) != 0, ErrKind::domain, "singular matrix");
    int64_t lead = a ? a : b ? b : c;
    int64_t s = inv_mod(lead ? lead : d, p);
    Pgl2 h{p, {{mul_mod(a, s, p), mul_mod(b, s, p)}, {mul_mod(c, s, p), mul_mod(d, s, p)}}};
    return h;
}

inline Pgl2 pgl_mul(const Pgl2& x, const Pgl2& y) {
    int64_t p = x.p;
    return make_pgl2(p, x.m[0][0] * y.m[0][0] + x.m[0][1] * y.m[1][0],
                     x.m[0][0] * y.m[0][1] + x.m[0][1] * y.m[1][1],
                     x.m[1][0] * y.m[0][0] + x.m[1][1] * y.m[1][0],
                     x.m[1][0] * y.m[0][1] + x.m[1][1] * y.m[1][1]);
}

// Moebius action on P^1(F_p).
inline ProjPoint pgl_act(const Pgl2& h, const ProjPoint& z) {
    int64_t p = h.p;
    int64_t a = h.m[0][0], b = h.m[0][1], c = h.m[1][0], d = h.m[1][1];
    if (z.is_inf()) {
        if (c == 0) return pp_inf();
        return pp(mul_mod(a, inv_mod(c, p), p));
    }
    int64_t num = mod_norm(a * z.v + b, p);
    int64_t den = mod_norm(c * z.v + d, p);
    if (den == 0) return pp_inf();
    return pp(mul_mod(num, inv_mod(den, p), p));
}

// Split/non-split/parabolic classification: legendre(tr^2 - 4 det).
// Scalar-invariant, so well defined on PGL_2.
inline int delta(const Pgl2& h) {
    int64_t p = h.p;
    int64_t tr = mod_norm(h.m[0][0] + h.m[1][1], p);
    int64_t det = mod_norm(h.m[0][0] * h.m[1][1] - h.m[0][1] * h.m[1][0], p);
    return legendre(mod_norm(tr * tr - 4 * det, p), p);
}

// Cross-ratio [a, b; c, d] = ((a-c)(b-d)) / ((a-d)(b-c)), via homogeneous
// coordinates so the infinity cases need no special handling.
inline ProjPoint cross_ratio(int64_t p, const ProjPoint& a, const ProjPoint& b,
                             const ProjPoint& c, const ProjPoint& d) {
    auto lift = [&](const ProjPoint& z) -> std::pair<int64_t, int64_t> {
        return z.is_inf() ? std::make_pair<int64_t, int64_t>(1, 0)
                          : std::make_pair(z.v, static_cast<int64_t>(1));
    };
    auto [xa, ya] = lift(a);
    auto [xb, yb] = lift(b);
    auto [xc, yc] = lift(c);
    auto [xd, yd] = lift(d);
    auto det2 = [&](int64_t x1, int64_t y1, int64_t x2, int64_t y2) {
        return mod_norm(x1 * y2 - x2 * y1, p);
    };
    int64_t num = mul_mod(det2(xa, ya, xc, yc), det2(xb, yb, xd, yd), p);
    int64_t den = mul_mod(det2(xa, ya, xd, yd), det2(xb, yb, xc, yc), p);
    if (den == 0) {
        check(num != 0, ErrKind::domain, "cross-ratio of non-distinct points");
        return pp_inf();
    }
    return pp(mul_mod(num, inv_mod(den, p), p));
}

// A necklace: the dihedral-minimal ordering of the p+1 pearls.
struct Necklace {
    Gamma gamma;
    std::vector<ProjPoint> order; // canonical representative, size p+1
    bool operator==(const Necklace&) const = default;
    bool operator<(const Necklace& o) const {
        for (size_t i = 0; i < order.size(); ++i) {
            auto x = order[i].key(gamma.p), y = o.order[i].key(gamma.p);
            if (x != y) return x < y;
        }
        return false;
    }
};

// Dihedral-minimal representative of a cyclic sequence.
inline std::vector<ProjPoint> dihedral_canonical(int64_t p, std::vector<ProjPoint> seq) {
    size_t n = seq.size();
    auto better = [&](const std::vector<ProjPoint>& a, const std::vector<ProjPoint>& b) {
        for (size_t i = 0; i < n; ++i) {
            if (a[i].key(p) != b[i].key(p)) return a[i].key(p) < b[i].key(p);
        }
        return false;
    };
    std::vector<ProjPoint> best = seq;
    std::vector<ProjPoint> rev(seq.rbegin(), seq.rend());
    for (auto* base : {&seq, &rev}) {
        for (size_t s = 0; s < n; ++s) {
            std::vector<ProjPoint> cand(n);
            for (size_t i = 0; i < n; ++i) cand[i] = (*base)[(i + s) % n];
            if (better(cand, best)) best = cand;
        }
    }
    return best;
}

inline Necklace make_necklace(const Gamma& g, std::vector<ProjPoint> seq) {
    check(static_cast<int64_t>(seq.size()) == g.p + 1, ErrKind::internal, "necklace needs p+1 pearls");
    int64_t x = xi(g);
    size_t n = seq.size();
    for (size_t i = 0; i < n; ++i) {
        auto cr = cross_ratio(g.p, seq[i], seq[(i + 1) % n], seq[(i + 2) % n], seq[(i + 3) % n]);
        check(cr == pp(x), ErrKind::internal, "ordering violates the cross-ratio condition");
    }
    return Necklace{g, dihedral_canonical(g.p, std::move(seq))};
}

// The unique fourth pearl continuing a consecutive run (a, b, c).
inline ProjPoint next_pearl(const Gamma& g, const ProjPoint& a, const ProjPoint& b,
                            const ProjPoint& c) {
    int64_t x = xi(g);
    for (int64_t v = 0; v <= g.p; ++v) {
        ProjPoint d = v == g.p ? pp_inf() : pp(v);
        if (d == a || d == b || d == c) continue;
        if (cross_ratio(g.p, a, b, c, d) == pp(x)) return d;
    }
    throw Error(ErrKind::internal, "no continuation pearl found");
}

// The unique necklace with consecutive run (c0, c1, c2).
inline Necklace necklace_from_three_pearls(const ProjPoint& c0, const ProjPoint& c1,
                                           const ProjPoint& c2, const Gamma& g) {
    check(!(c0 == c1) && !(c1 == c2) && !(c0 == c2), ErrKind::domain, "pearls must be distinct");
    std::vector<ProjPoint> seq = {c0, c1, c2};
    while (static_cast<int64_t>(seq.size()) < g.p + 1)
        seq.push_back(next_pearl(g, seq[seq.size() - 3], seq[seq.size() - 2], seq.back()));
    return make_necklace(g, std::move(seq));
}

// The necklace obtained by acting successively with h on a base pearl;
// requires (some scalar multiple of) h to have characteristic polynomial
// x^2 - t x + n.
inline Necklace necklace_from_generator(const Pgl2& h, const Gamma& g) {
    int64_t p = g.p;
    check(h.p == p, ErrKind::domain, "prime mismatch");
    int64_t tr = mod_norm(h.m[0][0] + h.m[1][1], p);
    int64_t det = mod_norm(h.m[0][0] * h.m[1][1] - h.m[0][1] * h.m[1][0], p);
    bool ok = false;
    for (int64_t s = 1; s < p && !ok; ++s)
        if (mul_mod(s, tr, p) == mod_norm(g.t, p) && mul_mod(mul_mod(s, s, p), det, p) == mod_norm(g.n, p))
            ok = true;
    check(ok, ErrKind::domain, "matrix has no representative with the characteristic polynomial of gamma");
    std::vector<ProjPoint> seq;
    ProjPoint z = pp(0);
    for (int64_t i = 0; i <= p; ++i) {
        seq.push_back(z);
        z = pgl_act(h, z);
    }
    check(z == pp(0), ErrKind::internal, "orbit did not close after p+1 steps");
    return make_necklace(g, std::move(seq));
}

// All p(p-1)/2 necklaces.
inline std::vector<Necklace> enumerate_all_necklaces(int64_t p, const Gamma& g) {
    std::set<Necklace> out;
    // c0 = 0, c1 ranges; c2 ranges: every necklace contains a run (0, x, y).
    for (int64_t b = 0; b <= p; ++b)
        for (int64_t c = 0; c <= p; ++c) {
            ProjPoint c1 = b == p ? pp_inf() : pp(b);
            ProjPoint c2 = c == p ? pp_inf() : pp(c);
            if (c1 == pp(0) || c2 == pp(0) || c1 == c2) continue;
            out.insert(necklace_from_three_pearls(pp(0), c1, c2, g));
        }
    check(static_cast<int64_t>(out.size()) == p * (p - 1) / 2, ErrKind::internal,
          "necklace enumeration has the wrong cardinality");
    return {out.begin(), out.end()};
}

enum class ActKind { fixed_rotation, flipped_reflection, moved };

// Apply h to a necklace; classify the action when the necklace is fixed.
inline std::pair<Necklace, ActKind> act(const Pgl2& h, const Necklace& N) {
    int64_t p = N.gamma.p;
    size_t n = N.order.size();
    std::vector<ProjPoint> img(n);
    for (size_t i = 0; i < n; ++i) img[i] = pgl_act(h, N.order[i]);
    Necklace M{N.gamma, dihedral_canonical(p, img)};
    if (!(M == N)) return {M, ActKind::moved};
    // h permutes the pearls of N; as a symmetry of the (p+1)-gon it is a
    // rotation iff it preserves the cyclic orientation.
    auto pos = [&](const ProjPoint& z) {
        for (size_t i = 0; i < n; ++i)
            if (N.order[i] == z) return i;
        throw Error(ErrKind::internal, "pearl not found");
    };
    size_t p0 = pos(img[0]), p1 = pos(img[1]);
    bool rotation = (p0 + 1) % n == p1;
    return {M, rotation ? ActKind::fixed_rotation : ActKind::flipped_reflection};
}

// All necklaces fixed (as a set) by h.
inline std::vector<Necklace> rational_necklaces(const Pgl2& h, const Gamma& g) {
    std::vector<Necklace> out;
    for (auto& N : enumerate_all_necklaces(g.p, g))
        if (act(h, N).second != ActKind::moved) out.push_back(N);
    return out;
}

// Positions i, j are antipodal on a necklace of p+1 pearls.
inline bool antipodal(int64_t i, int64_t j, int64_t p) {
    check(i >= 0 && i <= p && j >= 0 && j <= p, ErrKind::domain, "positions out of range");
    return mod_norm(i - j, p + 1) == (p + 1) / 2;
}

// Equivalence across different gamma choices: the cyclic sequences agree up
// to reindexing i -> n*i + k (n coprime to p+1) and reversal.
inline bool equiv_any_gamma(const Necklace& N1, const Necklace& N2) {
    check(N1.gamma.p == N2.gamma.p, ErrKind::domain, "prime mismatch");
    int64_t m = N1.gamma.p + 1;
    for (int64_t n = 1; n < m; ++n) {
        if (std::gcd(n, m) != 1) continue;
        for (int64_t k = 0; k < m; ++k) {
            bool fwd = true, bwd = true;
            for (int64_t i = 0; i < m && (fwd || bwd); ++i) {
                auto& target = N1.order[static_cast<size_t>(i)];
                auto& f = N2.order[static_cast<size_t>(mod_norm(n * i + k, m))];
                auto& r = N2.order[static_cast<size_t>(mod_norm(-n * i + k, m))];
                if (!(f == target)) fwd = false;
                if (!(r == target)) bwd = false;
            }
            if (fwd || bwd) return true;
        }
    }
    return false;
}

} // namespace necklace::cartan

#endif // NECKLACE_CARTAN_HPP

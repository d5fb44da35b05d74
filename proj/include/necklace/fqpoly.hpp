// Factorization of univariate polynomials over finite fields, canonical
// extension field construction, and embeddings between presentations.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_FQPOLY_HPP
#define NECKLACE_FQPOLY_HPP

#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "necklace/poly.hpp"

namespace necklace::ff {

using FPoly = Poly<Field>;

// x^(q^n) mod f, computed by iterated q-power maps on a cached x^q table
// would be overkill here; plain square-and-multiply on q^n is fine for the
// sizes we use (q^n has at most a few thousand bits).
inline FPoly frob_power_x(const Field& F, const PModCtx<Field>& ctx, int n) {
    mpz_class e;
    mpz_pow_ui(e.get_mpz_t(), F.size().get_mpz_t(), static_cast<unsigned long>(n));
    return ctx.powmod(px(F), e);
}

inline bool is_irreducible(const Field& F, const FPoly& f) {
    int n = pdeg(f);
    if (n <= 0) return false;
    if (n == 1) return true;
    FPoly fm = pmonic(F, f);
    if (F.is_zero(fm[0])) return false; // divisible by x
    PModCtx<Field> ctx(F, fm);
    // f is irreducible iff it has no irreducible factor of degree <= n/2;
    // such a factor of degree d divides gcd(x^(q^d) - x, f). Walking d
    // upward lets reducible inputs fail after very few Frobenius steps.
    FPoly Xd = px(F);
    for (int d = 1; 2 * d <= n; ++d) {
        Xd = ctx.powmod(Xd, F.size()); // x^(q^d) mod f
        FPoly g = pgcd(F, psub(F, Xd, px(F)), fm);
        if (pdeg(g) != 0) return false;
    }
    return true;
}

// Squarefree decomposition (Yun, adapted to characteristic p).
// Returns pairs (g_i, i) with f = prod g_i^i up to a constant, g_i squarefree.
inline std::vector<std::pair<FPoly, int>> squarefree_decomposition(const Field& F, FPoly f) {
    std::vector<std::pair<FPoly, int>> out;
    f = pmonic(F, std::move(f));
    if (pdeg(f) <= 0) return out;
    FPoly d = pderiv(F, f);
    if (d.empty()) {
        // f is a p-th power: f(x) = h(x^p) with h obtained by taking q-th...
        // in F_q the p-th root of a coefficient c is c^(q/p).
        FPoly h;
        mpz_class e = F.size() / F.p;
        for (size_t i = 0; i < f.size(); i += static_cast<size_t>(F.p))
            h.push_back(F.pow(f[i], e));
        auto sub = squarefree_decomposition(F, h);
        for (auto& [g, m] : sub) out.emplace_back(g, m * static_cast<int>(F.p));
        return out;
    }
    FPoly c = pgcd(F, f, d);
    FPoly w = pdivmod(F, f, c).first;
    int i = 1;
    while (pdeg(w) > 0) {
        FPoly y = pgcd(F, w, c);
        FPoly z = pdivmod(F, w, y).first;
        if (pdeg(z) > 0) out.emplace_back(pmonic(F, z), i);
        c = pdivmod(F, c, y).first;
        w = std::move(y);
        ++i;
    }
    if (pdeg(c) > 0) {
        // Residual p-th power part.
        auto sub = squarefree_decomposition(F, c);
        for (auto& [g, m] : sub) out.emplace_back(g, m);
    }
    return out;
}

// Distinct-degree factorization of a squarefree monic f. Returns pairs
// (product of irreducible factors of degree d, d). Stops early once the
// remaining cofactor must be irreducible. max_degree limits the search
// (0 = no limit); any unsplit remainder is returned with d = -1.
inline std::vector<std::pair<FPoly, int>> ddf(const Field& F, FPoly f, int max_degree = 0) {
    std::vector<std::pair<FPoly, int>> out;
    f = pmonic(F, std::move(f));
    if (pdeg(f) <= 0) return out;
    PModCtx<Field> ctx(F, f);
    FPoly frob = ctx.powmod(px(F), F.size()); // x^(q^d) mod f, d = 1
    int d = 1;
    while (pdeg(f) > 0) {
        if (2 * d > pdeg(f)) {
            out.emplace_back(f, pdeg(f));
            break;
        }
        if (max_degree > 0 && d > max_degree) {
            out.emplace_back(f, -1);
            break;
        }
        FPoly g = pgcd(F, psub(F, frob, px(F)), f);
        if (pdeg(g) > 0) {
            out.emplace_back(g, d);
            f = pdivmod(F, f, g).first;
            if (pdeg(f) == 0) break;
            ctx = PModCtx<Field>(F, f);
            frob = ctx.reduce(frob);
        }
        ++d;
        if (2 * d <= pdeg(f) && (max_degree == 0 || d <= max_degree))
            frob = ctx.powmod(frob, F.size());
    }
    return out;
}

// Equal-degree splitting (Cantor–Zassenhaus) of a monic squarefree f whose
// irreducible factors all have degree d. Appends the factors to out.
inline void edf(const Field& F, const FPoly& f, int d, Rng& rng, std::vector<FPoly>& out) {
    if (pdeg(f) == d) {
        out.push_back(pmonic(F, f));
        return;
    }
    check(pdeg(f) % d == 0, ErrKind::internal, "edf: degree mismatch");
    PModCtx<Field> ctx(F, f);
    mpz_class qd;
    mpz_pow_ui(qd.get_mpz_t(), F.size().get_mpz_t(), static_cast<unsigned long>(d));
    FPoly g;
    while (true) {
        FPoly a(static_cast<size_t>(pdeg(f)));
        for (auto& c : a) c = F.rand(rng);
        ptrim(F, a);
        if (pdeg(a) <= 0) continue;
        if (F.p == 2) {
            // Trace map sum a^(2^i); not needed for this project (p >= 3)
            // but kept for completeness.
            FPoly t = a, cur = a;
            mpz_class bits = qd;
            long nb = mpz_sizeinbase(bits.get_mpz_t(), 2) - 1;
            for (long i = 1; i < nb; ++i) {
                cur = ctx.mulmod(cur, cur);
                t = padd(F, t, cur);
            }
            g = pgcd(F, t, f);
        } else {
            FPoly b = ctx.powmod(a, (qd - 1) / 2);
            g = pgcd(F, psub(F, b, pconst(F, F.one())), f);
        }
        if (pdeg(g) > 0 && pdeg(g) < pdeg(f)) break;
    }
    edf(F, g, d, rng, out);
    edf(F, pdivmod(F, f, g).first, d, rng, out);
}

// Full factorization: monic irreducible factors with multiplicities,
// sorted deterministically (by degree, then coefficient order).
inline std::vector<std::pair<FPoly, int>> factor_poly(const Field& F, const FPoly& f, uint64_t seed = 1) {
    Rng rng(seed);
    std::vector<std::pair<FPoly, int>> out;
    for (auto& [sf, mult] : squarefree_decomposition(F, f)) {
        for (auto& [prod, d] : ddf(F, sf)) {
            check(d > 0, ErrKind::internal, "factor_poly: unfinished ddf");
            std::vector<FPoly> irr;
            edf(F, prod, d, rng, irr);
            for (auto& g : irr) out.emplace_back(std::move(g), mult);
        }
    }
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        for (size_t i = 0; i < a.first.size(); ++i)
            if (!(a.first[i] == b.first[i])) return a.first[i] < b.first[i];
        return false;
    });
    return out;
}

// Roots of f in F, each listed once, sorted.
inline std::vector<FieldElt> proots(const Field& F, const FPoly& f, uint64_t seed = 1) {
    std::vector<FieldElt> out;
    if (pdeg(f) <= 0) return out;
    FPoly fm = pmonic(F, f);
    // Radical part first, then gcd with x^q - x.
    FPoly rad = pdivmod(F, fm, pgcd(F, fm, pderiv(F, fm))).first;
    if (rad.empty()) rad = fm; // derivative vanished identically
    PModCtx<Field> ctx(F, rad);
    FPoly xq = ctx.powmod(px(F), F.size());
    FPoly lin = pgcd(F, psub(F, xq, px(F)), rad);
    if (pdeg(lin) <= 0) return out;
    Rng rng(seed);
    std::vector<FPoly> irr;
    edf(F, lin, 1, rng, irr);
    for (auto& g : irr) out.push_back(F.neg(g[0]));
    std::sort(out.begin(), out.end());
    return out;
}

// Deterministic canonical modulus: the first monic irreducible
// x^k + c_{k-1} x^{k-1} + ... + c_0 over F_p in the ordering that compares
// the coefficient vector (c_0, c_1, ...) as integers, low degree first.
inline ZPoly canonical_modulus(int64_t p, int k) {
    check(k >= 1, ErrKind::domain, "extension degree must be positive");
    static std::map<std::pair<int64_t, int>, ZPoly> cache;
    if (auto it = cache.find({p, k}); it != cache.end()) return it->second;
    FieldPtr Fp = Field::prime(p);
    std::vector<int64_t> c(static_cast<size_t>(k), 0);
    while (true) {
        FPoly f(static_cast<size_t>(k) + 1);
        for (int i = 0; i < k; ++i) f[static_cast<size_t>(i)] = Fp->from_int(c[static_cast<size_t>(i)]);
        f[static_cast<size_t>(k)] = Fp->one();
        if (k == 1 || is_irreducible(*Fp, f)) {
            ZPoly m(static_cast<size_t>(k) + 1);
            for (int i = 0; i < k; ++i) m[static_cast<size_t>(i)] = c[static_cast<size_t>(i)];
            m[static_cast<size_t>(k)] = 1;
            cache[{p, k}] = m;
            return m;
        }
        int i = 0;
        while (i < k && ++c[static_cast<size_t>(i)] == p) c[static_cast<size_t>(i++)] = 0;
        check(i < k, ErrKind::internal, "no irreducible polynomial found");
    }
}

inline FieldPtr make_ext(int64_t p, int k) {
    if (k == 1) return Field::prime(p);
    return Field::ext_with_modulus(p, canonical_modulus(p, k));
}

// An embedding F_{p^a} -> F_{p^b} (a | b), realized by the image of the
// source generator. Deterministic: smallest root of the source modulus.
struct Embedding {
    FieldPtr src, dst;
    FieldElt gen_image; // image of x mod src.modulus

    FieldElt map(const FieldElt& a) const {
        FPoly pa;
        for (int64_t c : a.c) pa.push_back(dst->from_int(c));
        return peval(*dst, pa, gen_image);
    }
};

inline Embedding make_embedding(const FieldPtr& src, const FieldPtr& dst) {
    check(src->p == dst->p && dst->k % src->k == 0, ErrKind::domain, "no embedding between these fields");
    if (src->k == 1) return Embedding{src, dst, dst->one()};
    // The root search can be expensive over large targets; the result only
    // depends on the two presentations, so cache it.
    static std::map<std::tuple<int64_t, ZPoly, ZPoly>, ZPoly> cache;
    std::tuple<int64_t, ZPoly, ZPoly> key{src->p, src->modulus, dst->modulus};
    if (auto it = cache.find(key); it != cache.end())
        return Embedding{src, dst, dst->from_coeffs(it->second)};
    FPoly m;
    for (int64_t c : src->modulus) m.push_back(dst->from_int(c));
    auto rts = proots(*dst, m);
    check(!rts.empty(), ErrKind::internal, "source modulus has no root in target field");
    cache[key] = rts.front().c;
    return Embedding{src, dst, rts.front()};
}

// All field automorphisms of F (the Frobenius powers), as generator images.
inline std::vector<FieldElt> automorphism_images(const Field& F) {
    std::vector<FieldElt> out;
    FieldElt g = F.from_coeffs({0, 1});
    if (F.k == 1) return {F.one()};
    for (int i = 0; i < F.k; ++i) out.push_back(F.frob(g, i));
    return out;
}

// Isomorphisms between two presentations of the same finite field, as the
// list of images of src's generator inside dst (one per Frobenius power).
inline std::vector<Embedding> isomorphisms(const FieldPtr& src, const FieldPtr& dst) {
    check(src->p == dst->p && src->k == dst->k, ErrKind::domain, "fields are not isomorphic");
    std::vector<Embedding> out;
    if (src->k == 1) return {Embedding{src, dst, dst->one()}};
    FPoly m;
    for (int64_t c : src->modulus) m.push_back(dst->from_int(c));
    for (auto& r : proots(*dst, m)) out.push_back(Embedding{src, dst, r});
    return out;
}

// Apply Frobenius x -> x^(p^i) coefficientwise to a polynomial over F.
inline FPoly coeff_frob(const Field& F, FPoly f, int i) {
    for (auto& c : f) c = F.frob(c, i);
    return f;
}

// Inverse of an embedding on its image: express elements of dst that lie in
// the embedded copy of src back in src coordinates. Built once (Gaussian
// elimination over F_p), then applied per element.
class SubfieldCoercion {
public:
    explicit SubfieldCoercion(Embedding emb) : emb_(std::move(emb)) {
        int64_t p = emb_.src->p;
        int k0 = emb_.src->k, k1 = emb_.dst->k;
        // Columns: images of the src basis 1, g, g^2, ... in dst coordinates.
        mat_.assign(static_cast<size_t>(k1), std::vector<int64_t>(static_cast<size_t>(k0) + 1, 0));
        FieldElt pw = emb_.dst->one();
        for (int j = 0; j < k0; ++j) {
            for (size_t i = 0; i < pw.c.size(); ++i) mat_[i][static_cast<size_t>(j)] = pw.c[i];
            pw = emb_.dst->mul(pw, emb_.gen_image);
        }
        // Row-reduce [M | .] once; remember pivots. We redo elimination per
        // solve on the augmented column only.
        rows_ = k1;
        cols_ = k0;
        pivots_.assign(static_cast<size_t>(cols_), -1);
        int r = 0;
        for (int c = 0; c < cols_ && r < rows_; ++c) {
            int sel = -1;
            for (int i = r; i < rows_; ++i)
                if (mat_[static_cast<size_t>(i)][static_cast<size_t>(c)] != 0) { sel = i; break; }
            if (sel < 0) continue;
            std::swap(mat_[static_cast<size_t>(sel)], mat_[static_cast<size_t>(r)]);
            ops_.push_back({-1, sel, r, 0}); // swap marker
            int64_t inv = inv_mod(mat_[static_cast<size_t>(r)][static_cast<size_t>(c)], p);
            for (auto& v : mat_[static_cast<size_t>(r)]) v = mul_mod(v, inv, p);
            ops_.push_back({-2, r, 0, inv}); // scale marker
            for (int i = 0; i < rows_; ++i) {
                if (i == r) continue;
                int64_t f = mat_[static_cast<size_t>(i)][static_cast<size_t>(c)];
                if (f == 0) continue;
                for (int cc = 0; cc <= cols_; ++cc)
                    mat_[static_cast<size_t>(i)][static_cast<size_t>(cc)] =
                        mod_norm(mat_[static_cast<size_t>(i)][static_cast<size_t>(cc)] -
                                     f * mat_[static_cast<size_t>(r)][static_cast<size_t>(cc)] % p,
                                 p);
                ops_.push_back({-3, i, r, f}); // axpy marker
            }
            pivots_[static_cast<size_t>(c)] = r;
            ++r;
        }
    }

    // Coordinates of z in src, if z lies in the embedded subfield.
    std::optional<FieldElt> coerce(const FieldElt& z) const {
        int64_t p = emb_.src->p;
        std::vector<int64_t> b(static_cast<size_t>(rows_), 0);
        for (size_t i = 0; i < z.c.size(); ++i) b[i] = z.c[i];
        // Replay the recorded row operations on b.
        for (auto& op : ops_) {
            if (op.kind == -1) std::swap(b[static_cast<size_t>(op.i)], b[static_cast<size_t>(op.j)]);
            else if (op.kind == -2) b[static_cast<size_t>(op.i)] = mul_mod(b[static_cast<size_t>(op.i)], op.f, p);
            else b[static_cast<size_t>(op.i)] = mod_norm(b[static_cast<size_t>(op.i)] - op.f * b[static_cast<size_t>(op.j)] % p, p);
        }
        std::vector<int64_t> x(static_cast<size_t>(cols_), 0);
        for (int c = 0; c < cols_; ++c)
            if (pivots_[static_cast<size_t>(c)] >= 0) x[static_cast<size_t>(c)] = b[static_cast<size_t>(pivots_[static_cast<size_t>(c)])];
        // Consistency: rows without pivots must have zero rhs; verify by
        // mapping back.
        FieldElt cand = emb_.src->from_coeffs(x);
        if (!emb_.dst->eq(emb_.map(cand), z)) return std::nullopt;
        return cand;
    }

    const Embedding& embedding() const { return emb_; }

private:
    struct Op { int kind; int i; int j; int64_t f; };
    Embedding emb_;
    std::vector<std::vector<int64_t>> mat_;
    std::vector<int> pivots_;
    std::vector<Op> ops_;
    int rows_ = 0, cols_ = 0;
};

} // namespace necklace::ff

#endif // NECKLACE_FQPOLY_HPP

// Finite field contexts: prime fields F_p and flattened extensions F_{p^k}.
//
// A Field object carries the modulus data and exposes the arithmetic; field
// elements are plain coefficient vectors, so they stay cheap to copy and
// hash. Extensions are always presented over the prime field (no towers).
// Multiplication of large-degree elements goes through Kronecker
// substitution into GMP integers, with Newton/Barrett reduction, which is
// what keeps degree ~10^3 work practical on one core.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_FQ_HPP
#define NECKLACE_FQ_HPP

#include <algorithm>
#include <memory>
#include <sstream>
#include <vector>

#include "necklace/util.hpp"

namespace necklace::ff {

using ZPoly = std::vector<int64_t>; // dense coefficients mod p, low degree first

namespace zp {

inline void trim(ZPoly& a) {
    while (!a.empty() && a.back() == 0) a.pop_back();
}

inline int deg(const ZPoly& a) { return static_cast<int>(a.size()) - 1; }

inline ZPoly add(const ZPoly& a, const ZPoly& b, int64_t p) {
    ZPoly r(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < r.size(); ++i) {
        int64_t v = (i < a.size() ? a[i] : 0) + (i < b.size() ? b[i] : 0);
        r[i] = v >= p ? v - p : v;
    }
    trim(r);
    return r;
}

inline ZPoly sub(const ZPoly& a, const ZPoly& b, int64_t p) {
    ZPoly r(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < r.size(); ++i) {
        int64_t v = (i < a.size() ? a[i] : 0) - (i < b.size() ? b[i] : 0);
        r[i] = v < 0 ? v + p : v;
    }
    trim(r);
    return r;
}

// Kronecker substitution: pack 64 bits per coefficient so that mpz limbs are
// exactly the packed words. Safe because p < 2^16 and degrees < 2^20.
inline ZPoly mul_kronecker(const ZPoly& a, const ZPoly& b, int64_t p) {
    mpz_class za, zb;
    std::vector<uint64_t> wa(a.begin(), a.end()), wb(b.begin(), b.end());
    mpz_import(za.get_mpz_t(), wa.size(), -1, sizeof(uint64_t), 0, 0, wa.data());
    mpz_import(zb.get_mpz_t(), wb.size(), -1, sizeof(uint64_t), 0, 0, wb.data());
    mpz_class zc = za * zb;
    size_t n = a.size() + b.size() - 1;
    std::vector<uint64_t> wc(n, 0);
    size_t written = 0;
    mpz_export(wc.data(), &written, -1, sizeof(uint64_t), 0, 0, zc.get_mpz_t());
    ZPoly r(n);
    for (size_t i = 0; i < n; ++i) r[i] = static_cast<int64_t>(wc[i] % static_cast<uint64_t>(p));
    trim(r);
    return r;
}

inline ZPoly mul(const ZPoly& a, const ZPoly& b, int64_t p) {
    if (a.empty() || b.empty()) return {};
    if (a.size() >= 32 && b.size() >= 32) return mul_kronecker(a, b, p);
    ZPoly r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p;
    }
    trim(r);
    return r;
}

inline ZPoly scale(const ZPoly& a, int64_t c, int64_t p) {
    ZPoly r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = mul_mod(a[i], c, p);
    trim(r);
    return r;
}

inline ZPoly shift(const ZPoly& a, int n) { // multiply by x^n
    if (a.empty()) return {};
    ZPoly r(a.size() + static_cast<size_t>(n), 0);
    std::copy(a.begin(), a.end(), r.begin() + n);
    return r;
}

inline ZPoly trunc(const ZPoly& a, size_t n) {
    ZPoly r(a.begin(), a.begin() + std::min(a.size(), n));
    trim(r);
    return r;
}

inline ZPoly reverse(const ZPoly& a, size_t n) { // reversal w.r.t. degree n-1
    ZPoly r(n, 0);
    for (size_t i = 0; i < a.size() && i < n; ++i) r[n - 1 - i] = a[i];
    trim(r);
    return r;
}

// Newton iteration for the inverse of f modulo x^n (f(0) must be a unit).
inline ZPoly inv_series(const ZPoly& f, size_t n, int64_t p) {
    check(!f.empty() && f[0] != 0, ErrKind::internal, "inv_series: zero constant term");
    ZPoly g{inv_mod(f[0], p)};
    for (size_t m = 1; m < n;) {
        m = std::min(2 * m, n);
        ZPoly t = mul(trunc(f, m), g, p);
        // g <- g * (2 - f g) mod x^m
        ZPoly two_minus(t.size() ? t : ZPoly{0});
        if (two_minus.empty()) two_minus = {0};
        for (auto& c : two_minus) c = c ? p - c : 0;
        if (two_minus.empty()) two_minus = {2 % p};
        else two_minus[0] = (two_minus[0] + 2) % p;
        g = trunc(mul(g, two_minus, p), m);
    }
    return g;
}

struct DivCtx { // cached data for repeated remainders by a fixed monic modulus
    ZPoly mod;
    ZPoly rev_inv; // inverse of reversed modulus modulo x^(deg)
};

inline ZPoly rem_naive(ZPoly a, const ZPoly& m, int64_t p) {
    int dm = deg(m);
    int64_t lead_inv = inv_mod(m.back(), p);
    while (deg(a) >= dm) {
        int d = deg(a);
        int64_t c = mul_mod(a.back(), lead_inv, p);
        for (int i = 0; i <= dm; ++i) {
            a[static_cast<size_t>(d - dm + i)] =
                mod_norm(a[static_cast<size_t>(d - dm + i)] - mul_mod(c, m[static_cast<size_t>(i)], p), p);
        }
        trim(a);
    }
    return a;
}

inline ZPoly rem(const ZPoly& a, const DivCtx& ctx, int64_t p) {
    int dm = deg(ctx.mod);
    if (deg(a) < dm) return a;
    if (dm < 64 || ctx.rev_inv.empty()) return rem_naive(a, ctx.mod, p);
    // Barrett: q = rev(rev(a) * rev_inv mod x^(da-dm+1)), r = a - q*m
    int da = deg(a);
    size_t qn = static_cast<size_t>(da - dm + 1);
    ZPoly ra = reverse(a, static_cast<size_t>(da + 1));
    ZPoly q = trunc(mul(trunc(ra, qn), trunc(ctx.rev_inv, qn), p), qn);
    q = reverse(q, qn);
    ZPoly r = sub(a, mul(q, ctx.mod, p), p);
    if (deg(r) >= dm) r = rem_naive(r, ctx.mod, p); // defensive; should not trigger
    return r;
}

inline DivCtx make_divctx(const ZPoly& monic_mod, int64_t p, size_t max_lhs_deg) {
    DivCtx ctx{monic_mod, {}};
    int dm = deg(monic_mod);
    if (dm >= 64) {
        size_t need = max_lhs_deg >= static_cast<size_t>(dm) ? max_lhs_deg - static_cast<size_t>(dm) + 2
                                                             : 2;
        ctx.rev_inv = inv_series(reverse(monic_mod, static_cast<size_t>(dm + 1)), need, p);
    }
    return ctx;
}

} // namespace zp

// ---------------------------------------------------------------------------
// Field context.
// ---------------------------------------------------------------------------

struct FieldElt {
    ZPoly c; // size <= k, trailing zeros trimmed

    bool operator==(const FieldElt& o) const { return c == o.c; }
    bool operator<(const FieldElt& o) const { // lexicographic, low degree first
        size_t n = std::max(c.size(), o.c.size());
        for (size_t i = 0; i < n; ++i) {
            int64_t a = i < c.size() ? c[i] : 0, b = i < o.c.size() ? o.c[i] : 0;
            if (a != b) return a < b;
        }
        return false;
    }
};

class Field;
using FieldPtr = std::shared_ptr<const Field>;

class Field : public std::enable_shared_from_this<Field> {
public:
    using Elt = FieldElt;

    int64_t p;          // characteristic, prime < 2^16
    int k;              // extension degree over F_p
    ZPoly modulus;      // monic of degree k (size k+1); {0,1} placeholder for k=1

    static FieldPtr prime(int64_t p) {
        check(p >= 2 && p < (1 << 16) && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
              "prime field characteristic must be a prime < 2^16");
        auto f = std::make_shared<Field>();
        f->p = p;
        f->k = 1;
        f->modulus = {0, 1};
        f->init();
        return f;
    }

    static FieldPtr ext_with_modulus(int64_t p, const ZPoly& modulus) {
        check(p >= 2 && p < (1 << 16) && is_prime_u64(static_cast<uint64_t>(p)), ErrKind::domain,
              "extension characteristic must be a prime < 2^16");
        check(zp::deg(modulus) >= 2 && modulus.back() == 1, ErrKind::domain,
              "extension modulus must be monic of degree >= 2");
        auto f = std::make_shared<Field>();
        f->p = p;
        f->k = zp::deg(modulus);
        f->modulus = modulus;
        f->init();
        return f;
    }

    mpz_class size() const {
        mpz_class q;
        mpz_ui_pow_ui(q.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(k));
        return q;
    }

    bool is_prime_field() const { return k == 1; }

    Elt zero() const { return {}; }
    Elt one() const { return from_int(1); }

    Elt from_int(int64_t v) const {
        v = mod_norm(v, p);
        return v ? Elt{{v}} : Elt{};
    }

    // Element from coefficient vector in this field's basis 1, x, ..., x^{k-1}.
    Elt from_coeffs(ZPoly c) const {
        for (auto& v : c) v = mod_norm(v, p);
        zp::trim(c);
        check(zp::deg(c) < k, ErrKind::domain, "from_coeffs: degree exceeds field degree");
        return {std::move(c)};
    }

    bool is_zero(const Elt& a) const { return a.c.empty(); }
    bool eq(const Elt& a, const Elt& b) const { return a.c == b.c; }

    Elt add(const Elt& a, const Elt& b) const { return {zp::add(a.c, b.c, p)}; }
    Elt sub(const Elt& a, const Elt& b) const { return {zp::sub(a.c, b.c, p)}; }

    Elt neg(const Elt& a) const {
        Elt r = a;
        for (auto& v : r.c) v = v ? p - v : 0;
        return r;
    }

    Elt mul(const Elt& a, const Elt& b) const {
        if (a.c.empty() || b.c.empty()) return {};
        if (k == 1) return {{mul_mod(a.c[0], b.c[0], p)}};
        return {zp::rem(zp::mul(a.c, b.c, p), divctx_, p)};
    }

    Elt sqr(const Elt& a) const { return mul(a, a); }

    Elt inv(const Elt& a) const {
        check(!a.c.empty(), ErrKind::internal, "division by zero field element");
        if (k == 1) return {{inv_mod(a.c[0], p)}};
        // extended Euclid in F_p[x] against the modulus
        ZPoly r0 = modulus, r1 = a.c, s0 = {}, s1 = {1};
        while (!r1.empty()) {
            auto [q, r2] = divmod_(r0, r1);
            ZPoly s2 = zp::sub(s0, zp::mul(q, s1, p), p);
            r0 = std::move(r1); r1 = std::move(r2);
            s0 = std::move(s1); s1 = std::move(s2);
        }
        check(zp::deg(r0) == 0, ErrKind::internal, "field inverse failed (modulus not irreducible?)");
        return {zp::scale(s0, inv_mod(r0[0], p), p)};
    }

    Elt div(const Elt& a, const Elt& b) const { return mul(a, inv(b)); }

    Elt pow(Elt a, mpz_class e) const {
        check(e >= 0 || !is_zero(a), ErrKind::internal, "0^negative");
        if (e < 0) { a = inv(a); e = -e; }
        Elt r = one();
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) r = mul(r, a);
            a = sqr(a);
            e >>= 1;
        }
        return r;
    }

    // Frobenius x -> x^(p^i).
    Elt frob(const Elt& a, int i = 1) const {
        if (k == 1 || a.c.size() <= 1) return a;
        mpz_class e;
        mpz_ui_pow_ui(e.get_mpz_t(), static_cast<unsigned long>(p),
                      static_cast<unsigned long>(mod_norm(i, k)));
        return pow(a, e);
    }

    Elt rand(Rng& rng) const {
        ZPoly c(static_cast<size_t>(k));
        for (auto& v : c) v = rand_below(rng, p);
        zp::trim(c);
        return {std::move(c)};
    }

    // Multiplicative order of a; |F|^x - 1 must factor quickly (desk scale).
    mpz_class mult_order(const Elt& a) const {
        check(!is_zero(a), ErrKind::domain, "mult_order of zero");
        mpz_class n = size() - 1;
        auto fac = factor_mpz(n);
        mpz_class ord = n;
        for (auto& [q, e] : fac) {
            for (int i = 0; i < e; ++i) {
                mpz_class cand = ord / q;
                if (eq(pow(a, cand), one())) ord = cand;
                else break;
            }
        }
        return ord;
    }

    std::string to_string(const Elt& a) const {
        if (a.c.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (size_t i = 0; i < a.c.size(); ++i) {
            if (a.c[i] == 0) continue;
            if (!first) os << "+";
            first = false;
            if (i == 0 || a.c[i] != 1) os << a.c[i];
            if (i >= 1) { if (a.c[i] != 1) os << "*"; os << "t"; }
            if (i >= 2) os << "^" << i;
        }
        return os.str();
    }

    void init() {
        if (k > 1) divctx_ = zp::make_divctx(modulus, p, static_cast<size_t>(2 * k));
    }

private:
    zp::DivCtx divctx_;

    std::pair<ZPoly, ZPoly> divmod_(const ZPoly& a, const ZPoly& b) const {
        ZPoly r = a, q;
        int db = zp::deg(b);
        int64_t li = inv_mod(b.back(), p);
        while (zp::deg(r) >= db) {
            int d = zp::deg(r);
            int64_t c = mul_mod(r.back(), li, p);
            if (zp::deg(q) < d - db) q.resize(static_cast<size_t>(d - db) + 1, 0);
            q[static_cast<size_t>(d - db)] = c;
            for (int i = 0; i <= db; ++i)
                r[static_cast<size_t>(d - db + i)] =
                    mod_norm(r[static_cast<size_t>(d - db + i)] - mul_mod(c, b[static_cast<size_t>(i)], p), p);
            zp::trim(r);
        }
        return {q, r};
    }
};

// Legendre symbol over the prime field (0 for 0, else +/-1).
inline int legendre(int64_t a, int64_t p) {
    a = mod_norm(a, p);
    if (a == 0) return 0;
    return pow_mod(a, static_cast<uint64_t>((p - 1) / 2), p) == 1 ? 1 : -1;
}

} // namespace necklace::ff

#endif // NECKLACE_FQ_HPP

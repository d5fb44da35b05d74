// Dense univariate polynomials over an arbitrary field context K.
//
// K must expose: Elt, zero/one/from_int, add/sub/neg/mul/inv/div, is_zero,
// eq. This is instantiated with the finite field context (necklace::ff::Field)
// and with the exact quadratic field used for CM work. Fast multiplication
// paths for finite fields (Kronecker substitution) are selected by overload.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_POLY_HPP
#define NECKLACE_POLY_HPP

#include <algorithm>
#include <type_traits>
#include <utility>
#include <vector>

#include "necklace/fq.hpp"

namespace necklace::ff {

template <class K>
using Poly = std::vector<typename K::Elt>; // low degree first, trimmed

template <class K>
void ptrim(const K& F, Poly<K>& a) {
    while (!a.empty() && F.is_zero(a.back())) a.pop_back();
}

template <class T>
int pdeg(const std::vector<T>& a) {
    return static_cast<int>(a.size()) - 1;
}

template <class K>
Poly<K> pconst(const K& F, typename K::Elt c) {
    Poly<K> r{std::move(c)};
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> pfrom_coeffs(const K& F, std::vector<typename K::Elt> c) {
    ptrim(F, c);
    return c;
}

template <class K>
Poly<K> px(const K& F) { // the monomial x
    return {F.zero(), F.one()};
}

template <class K>
bool peq(const K& F, const Poly<K>& a, const Poly<K>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!F.eq(a[i], b[i])) return false;
    return true;
}

template <class K>
Poly<K> padd(const K& F, const Poly<K>& a, const Poly<K>& b) {
    Poly<K> r(std::max(a.size(), b.size()), F.zero());
    for (size_t i = 0; i < r.size(); ++i) {
        if (i < a.size() && i < b.size()) r[i] = F.add(a[i], b[i]);
        else r[i] = i < a.size() ? a[i] : b[i];
    }
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> psub(const K& F, const Poly<K>& a, const Poly<K>& b) {
    Poly<K> r(std::max(a.size(), b.size()), F.zero());
    for (size_t i = 0; i < r.size(); ++i) {
        typename K::Elt x = i < a.size() ? a[i] : F.zero();
        typename K::Elt y = i < b.size() ? b[i] : F.zero();
        r[i] = F.sub(x, y);
    }
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> pneg(const K& F, const Poly<K>& a) {
    Poly<K> r = a;
    for (auto& c : r) c = F.neg(c);
    return r;
}

template <class K>
Poly<K> pscale(const K& F, const Poly<K>& a, const typename K::Elt& c) {
    if (F.is_zero(c)) return {};
    Poly<K> r = a;
    for (auto& v : r) v = F.mul(v, c);
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> pmul_schoolbook(const K& F, const Poly<K>& a, const Poly<K>& b) {
    if (a.empty() || b.empty()) return {};
    Poly<K> r(a.size() + b.size() - 1, F.zero());
    for (size_t i = 0; i < a.size(); ++i) {
        if (F.is_zero(a[i])) continue;
        for (size_t j = 0; j < b.size(); ++j) r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
    }
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> pmul(const K& F, const Poly<K>& a, const Poly<K>& b) {
    return pmul_schoolbook(F, a, b);
}

// Finite-field fast path: flatten to F_p coefficients via Kronecker packing
// (one 64-bit word per F_p coefficient, stride 2k-1 words per outer
// coefficient), multiply as integers, reduce chunks by the field modulus.
inline Poly<Field> pmul(const Field& F, const Poly<Field>& a, const Poly<Field>& b) {
    if (a.empty() || b.empty()) return {};
    size_t total = a.size() * b.size();
    if (F.k == 1) {
        if (total < 1024) return pmul_schoolbook(F, a, b);
        ZPoly za(a.size(), 0), zb(b.size(), 0);
        for (size_t i = 0; i < a.size(); ++i) za[i] = a[i].c.empty() ? 0 : a[i].c[0];
        for (size_t i = 0; i < b.size(); ++i) zb[i] = b[i].c.empty() ? 0 : b[i].c[0];
        ZPoly zc = zp::mul(za, zb, F.p);
        Poly<Field> r(zc.size());
        for (size_t i = 0; i < zc.size(); ++i) r[i] = F.from_int(zc[i]);
        ptrim(F, r);
        return r;
    }
    if (total < 256) return pmul_schoolbook(F, a, b);
    size_t stride = static_cast<size_t>(2 * F.k);
    std::vector<uint64_t> wa(a.size() * stride, 0), wb(b.size() * stride, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].c.size(); ++j) wa[i * stride + j] = static_cast<uint64_t>(a[i].c[j]);
    for (size_t i = 0; i < b.size(); ++i)
        for (size_t j = 0; j < b[i].c.size(); ++j) wb[i * stride + j] = static_cast<uint64_t>(b[i].c[j]);
    mpz_class za, zb;
    mpz_import(za.get_mpz_t(), wa.size(), -1, sizeof(uint64_t), 0, 0, wa.data());
    mpz_import(zb.get_mpz_t(), wb.size(), -1, sizeof(uint64_t), 0, 0, wb.data());
    mpz_class zc = za * zb;
    size_t outn = a.size() + b.size() - 1;
    std::vector<uint64_t> wc(outn * stride, 0);
    size_t written = 0;
    mpz_export(wc.data(), &written, -1, sizeof(uint64_t), 0, 0, zc.get_mpz_t());
    Poly<Field> r(outn);
    for (size_t i = 0; i < outn; ++i) {
        ZPoly chunk(stride);
        for (size_t j = 0; j < stride; ++j)
            chunk[j] = static_cast<int64_t>(wc[i * stride + j] % static_cast<uint64_t>(F.p));
        zp::trim(chunk);
        r[i] = FieldElt{zp::rem_naive(std::move(chunk), F.modulus, F.p)};
    }
    ptrim(F, r);
    return r;
}

template <class K>
Poly<K> psqr(const K& F, const Poly<K>& a) {
    return pmul(F, a, a);
}

template <class K>
std::pair<Poly<K>, Poly<K>> pdivmod(const K& F, Poly<K> a, const Poly<K>& b) {
    check(!b.empty(), ErrKind::internal, "polynomial division by zero");
    int db = pdeg(b);
    typename K::Elt li = F.inv(b.back());
    Poly<K> q;
    while (pdeg(a) >= db) {
        int d = pdeg(a);
        typename K::Elt c = F.mul(a.back(), li);
        if (pdeg(q) < d - db) q.resize(static_cast<size_t>(d - db) + 1, F.zero());
        q[static_cast<size_t>(d - db)] = c;
        for (int i = 0; i <= db; ++i) {
            size_t idx = static_cast<size_t>(d - db + i);
            a[idx] = F.sub(a[idx], F.mul(c, b[static_cast<size_t>(i)]));
        }
        ptrim(F, a);
    }
    return {std::move(q), std::move(a)};
}

template <class K>
Poly<K> prem(const K& F, Poly<K> a, const Poly<K>& b) {
    return pdivmod(F, std::move(a), b).second;
}

template <class K>
Poly<K> pmonic(const K& F, Poly<K> a) {
    if (a.empty()) return a;
    typename K::Elt li = F.inv(a.back());
    for (auto& c : a) c = F.mul(c, li);
    return a;
}

template <class K>
Poly<K> pgcd(const K& F, Poly<K> a, Poly<K> b) {
    while (!b.empty()) {
        a = prem(F, std::move(a), b);
        std::swap(a, b);
    }
    return pmonic(F, std::move(a));
}

template <class K>
typename K::Elt peval(const K& F, const Poly<K>& a, const typename K::Elt& x) {
    typename K::Elt r = F.zero();
    for (size_t i = a.size(); i-- > 0;) r = F.add(F.mul(r, x), a[i]);
    return r;
}

template <class K>
Poly<K> pderiv(const K& F, const Poly<K>& a) {
    Poly<K> r;
    for (size_t i = 1; i < a.size(); ++i)
        r.push_back(F.mul(a[i], F.from_int(static_cast<int64_t>(i))));
    ptrim(F, r);
    return r;
}

// Modular exponentiation context: repeated reduction by a fixed monic f.
// Keeps a Barrett inverse when the base field is prime and f is large.
template <class K>
struct PModCtx {
    const K* Fp = nullptr; // non-owning; assignable so contexts can be rebuilt
    Poly<K> f;

    PModCtx(const K& field, Poly<K> modulus) : Fp(&field), f(std::move(modulus)) {
        const K& F = *Fp;
        check(!f.empty() && F.eq(f.back(), F.one()), ErrKind::internal, "PModCtx needs monic modulus");
        if constexpr (std::is_same_v<K, Field>) {
            if (F.k == 1 && pdeg(f) >= 64) {
                ZPoly zm(f.size());
                for (size_t i = 0; i < f.size(); ++i) zm[i] = f[i].c.empty() ? 0 : f[i].c[0];
                zctx_ = zp::make_divctx(zm, F.p, 2 * f.size());
                fast_ = true;
            }
        }
    }

    Poly<K> reduce(Poly<K> a) const {
        const K& F = *Fp;
        if (pdeg(a) < pdeg(f)) return a;
        if constexpr (std::is_same_v<K, Field>) {
            if (fast_) {
                ZPoly za(a.size());
                for (size_t i = 0; i < a.size(); ++i) za[i] = a[i].c.empty() ? 0 : a[i].c[0];
                ZPoly zr = zp::rem(za, zctx_, F.p);
                Poly<K> r(zr.size());
                for (size_t i = 0; i < zr.size(); ++i) r[i] = F.from_int(zr[i]);
                ptrim(F, r);
                return r;
            }
        }
        return prem(F, std::move(a), f);
    }

    Poly<K> mulmod(const Poly<K>& a, const Poly<K>& b) const { return reduce(pmul(*Fp, a, b)); }

    Poly<K> powmod(Poly<K> base, mpz_class e) const {
        const K& F = *Fp;
        Poly<K> r = pconst(F, F.one());
        base = reduce(std::move(base));
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) r = mulmod(r, base);
            base = mulmod(base, base);
            e >>= 1;
        }
        return r;
    }

private:
    bool fast_ = false;
    zp::DivCtx zctx_;
};

// Build the monic polynomial with the given roots.
template <class K>
Poly<K> pfrom_roots(const K& F, const std::vector<typename K::Elt>& roots) {
    Poly<K> r = pconst(F, F.one());
    for (const auto& x : roots) r = pmul(F, r, Poly<K>{F.neg(x), F.one()});
    return r;
}

// Resultant of a and b via the Euclidean algorithm.
template <class K>
typename K::Elt presultant(const K& F, Poly<K> a, Poly<K> b) {
    if (a.empty() || b.empty()) return F.zero();
    typename K::Elt res = F.one();
    while (pdeg(b) > 0) {
        Poly<K> r = prem(F, a, b);
        if (r.empty()) return F.zero();
        int da = pdeg(a), db = pdeg(b), dr = pdeg(r);
        typename K::Elt factor = F.pow(b.back(), da - dr);
        if ((static_cast<int64_t>(da) * db) % 2 == 1) factor = F.neg(factor);
        res = F.mul(res, factor);
        a = std::move(b);
        b = std::move(r);
    }
    return F.mul(res, F.pow(b[0], pdeg(a)));
}

} // namespace necklace::ff

#endif // NECKLACE_POLY_HPP

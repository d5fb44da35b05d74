// Exact arithmetic in an imaginary quadratic field Q(sqrt(Delta)).
//
// Elements are stored as x + y*sqrt(Delta) with exact rational x, y (this
// covers the half-integer ring elements that appear when Delta = 1 mod 4).
// The context class satisfies the field concept of poly.hpp, so dense
// polynomials, division with remainder, gcds and modular contexts all work
// over this field unchanged.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_QUAD_HPP
#define NECKLACE_QUAD_HPP

#include <gmpxx.h>

#include <cstdint>
#include <string>

#include "necklace/util.hpp"

namespace necklace::quad {

struct QuadElem {
    mpq_class x, y; // x + y sqrt(Delta)
    bool operator==(const QuadElem&) const = default;
};

// Field context for Q(sqrt(Delta)), Delta a negative fundamental
// discriminant. Mirrors the necklace::ff::Field interface.
class QuadField {
public:
    using Elt = QuadElem;

    mpz_class Delta;

    explicit QuadField(mpz_class D) : Delta(std::move(D)) {
        check(Delta < 0, ErrKind::domain, "imaginary quadratic field needs a negative discriminant");
    }

    Elt zero() const { return {}; }
    Elt one() const { return {mpq_class(1), mpq_class(0)}; }
    Elt from_int(int64_t v) const { return {mpq_class(static_cast<long>(v)), mpq_class(0)}; }
    Elt from_rationals(mpq_class x, mpq_class y) const { return {std::move(x), std::move(y)}; }

    bool is_zero(const Elt& a) const { return a.x == 0 && a.y == 0; }
    bool eq(const Elt& a, const Elt& b) const { return a.x == b.x && a.y == b.y; }

    Elt add(const Elt& a, const Elt& b) const { return {a.x + b.x, a.y + b.y}; }
    Elt sub(const Elt& a, const Elt& b) const { return {a.x - b.x, a.y - b.y}; }
    Elt neg(const Elt& a) const { return {-a.x, -a.y}; }

    Elt mul(const Elt& a, const Elt& b) const {
        return {a.x * b.x + a.y * b.y * Delta, a.x * b.y + a.y * b.x};
    }

    Elt sqr(const Elt& a) const { return mul(a, a); }

    Elt conj(const Elt& a) const { return {a.x, -a.y}; }

    mpq_class norm(const Elt& a) const { return a.x * a.x - Delta * a.y * a.y; }

    Elt inv(const Elt& a) const {
        mpq_class n = norm(a);
        check(n != 0, ErrKind::internal, "division by zero quadratic element");
        return {a.x / n, -a.y / n};
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

    std::string to_string(const Elt& a) const {
        if (is_zero(a)) return "0";
        std::string s;
        if (a.x != 0) s += a.x.get_str();
        if (a.y != 0) {
            if (!s.empty() && a.y > 0) s += "+";
            s += a.y.get_str() + "*sqrt(" + Delta.get_str() + ")";
        }
        return s;
    }
};

} // namespace necklace::quad

#endif // NECKLACE_QUAD_HPP

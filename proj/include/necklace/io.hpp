// Serialization and data ingestion: JSON emission for necklaces, reduced
// points and collision records; parsing of the CM order table and of sparse
// modular-polynomial files; cross-validation of a modular polynomial against
// the isogeny enumeration.
#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "necklace/xcount.hpp"

namespace necklace::io {

using json = nlohmann::json;
using ff::Field;
using ff::FieldElt;
using ff::FPoly;
using cartan::Necklace;
using cartan::ProjPoint;
using cmred::CmOrder;

// ---------------------------------------------------------------------------
// JSON emission. Field elements are emitted as coefficient arrays over the
// prime field; nlohmann objects keep keys sorted, so dumps are byte-stable.
// ---------------------------------------------------------------------------

inline json elt_json(const FieldElt& e) {
    json a = json::array();
    for (int64_t c : e.c) a.push_back(c);
    return a;
}

inline json poly_json(const FPoly& f) {
    json a = json::array();
    for (auto& c : f) a.push_back(elt_json(c));
    return a;
}

inline json slope_json(const ProjPoint& z) {
    if (z.is_inf()) return json("inf");
    return json(z.v);
}

inline json necklace_json(const Necklace& N) {
    json out;
    out["p"] = N.gamma.p;
    out["gamma"] = json::array({N.gamma.t, N.gamma.n});
    json ord = json::array();
    for (auto& z : N.order) ord.push_back(slope_json(z));
    out["order"] = ord;
    return out;
}

inline json geo_necklace_json(const bridge::GeoNecklace& G) {
    json out = necklace_json(G.abstract);
    json curve;
    curve["char"] = G.E.F->p;
    curve["degree"] = G.E.F->k;
    curve["A"] = elt_json(G.E.A);
    curve["B"] = elt_json(G.E.B);
    curve["j"] = elt_json(ec::j_invariant(G.E));
    out["curve"] = curve;
    json lf;
    lf["degree"] = G.L->k;
    json mod = json::array();
    for (int64_t c : G.L->modulus) mod.push_back(c);
    lf["modulus"] = mod;
    out["isogeny_field"] = lf;
    json pearls = json::array();
    for (auto& pl : G.pearls) {
        json pe;
        pe["kernel"] = poly_json(pl.kernel);
        pe["slope"] = slope_json(pl.coord);
        pe["j"] = elt_json(pl.cod_j);
        pearls.push_back(pe);
    }
    out["pearls"] = pearls;
    return out;
}

inline json reduced_point_json(const cmred::ReducedPoint& R) {
    json out = geo_necklace_json(R.necklace);
    out["D"] = R.D;
    out["p"] = R.p;
    out["ell"] = R.ell;
    return out;
}

inline json collision_json(const xcount::CollisionRecord& r) {
    json out;
    out["p"] = r.p;
    out["ell"] = r.ell;
    out["j"] = r.j;
    out["fiber"] = r.fiber;
    out["r"] = r.r;
    out["pair"] = json::array({r.D1, r.D2});
    return out;
}

// ---------------------------------------------------------------------------
// CM order table file: CSV `D,Delta_F,f,j,a4,a6` with a header line.
// ---------------------------------------------------------------------------

namespace detail {

inline void ingest_fail(const std::string& msg) { throw Error(ErrKind::unsupported, msg); }

inline mpq_class model_j(const mpz_class& a4, const mpz_class& a6) {
    mpq_class A(a4), B(a6);
    mpq_class c = 4 * A * A * A;
    mpq_class num = 1728 * c, den = c + 27 * B * B;
    mpq_class j = num / den;
    j.canonicalize();
    return j;
}

} // namespace detail

inline std::vector<CmOrder> load_cm_orders(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::ingest_fail("cannot open CM table: " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<CmOrder> out;
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        CmOrder O;
        std::string j, a4, a6;
        if (!(ss >> O.D >> O.Delta_F >> O.f >> j >> a4 >> a6))
            detail::ingest_fail("CM table: malformed line " + std::to_string(ln));
        O.j = mpz_class(j);
        O.a4 = mpz_class(a4);
        O.a6 = mpz_class(a6);
        if (O.D != O.Delta_F * O.f * O.f)
            detail::ingest_fail("CM table line " + std::to_string(ln) +
                                ": D is not Delta_F * f^2");
        if (detail::model_j(O.a4, O.a6) != mpq_class(O.j))
            detail::ingest_fail("CM table line " + std::to_string(ln) +
                                ": model does not have the listed j-invariant");
        out.push_back(O);
    }
    if (out.size() != 13) detail::ingest_fail("CM table must have exactly 13 rows");
    return out;
}

// Directory for shipped data files, from the environment; empty if unset.
inline std::string data_dir() {
    const char* d = std::getenv("NECKLACE_DATA_DIR");
    return d ? std::string(d) : std::string();
}

// The CM table: from $NECKLACE_DATA_DIR/cm_orders.csv when the variable is
// set, otherwise the built-in table.
inline std::vector<CmOrder> cm_orders_from_env() {
    std::string d = data_dir();
    if (d.empty()) return cmred::cm_table();
    return load_cm_orders(d + "/cm_orders.csv");
}

// ---------------------------------------------------------------------------
// Sparse modular-polynomial files: lines `[a,b] c` with integer exponents
// a >= b and big-integer coefficients; the polynomial is symmetric and only
// one representative of each exponent pair is stored.
// ---------------------------------------------------------------------------

struct ModPolyFile {
    int64_t level = 0;                                       // p, degree is p+1
    std::vector<std::tuple<int64_t, int64_t, mpz_class>> terms; // a >= b
};

inline ModPolyFile ingest_modpoly(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::ingest_fail("cannot open modular polynomial file: " + path);
    ModPolyFile out;
    std::string line;
    int ln = 0;
    int64_t maxdeg = 0;
    std::set<std::pair<int64_t, int64_t>> seen;
    while (std::getline(in, line)) {
        ++ln;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(line);
        char lb = 0, comma = 0, rb = 0;
        int64_t a = 0, b = 0;
        std::string coeff;
        ss >> lb >> a >> comma >> b >> rb >> coeff;
        if (ss.fail() || lb != '[' || comma != ',' || rb != ']' || coeff.empty())
            detail::ingest_fail("modular polynomial parse error at line " +
                                std::to_string(ln));
        if (a < b)
            detail::ingest_fail("modular polynomial symmetry violation at line " +
                                std::to_string(ln) + ": exponents must satisfy a >= b");
        if (!seen.insert({a, b}).second)
            detail::ingest_fail("modular polynomial duplicate exponent pair at line " +
                                std::to_string(ln));
        mpz_class c;
        if (c.set_str(coeff, 10) != 0)
            detail::ingest_fail("modular polynomial bad coefficient at line " +
                                std::to_string(ln));
        maxdeg = std::max(maxdeg, a);
        out.terms.emplace_back(a, b, c);
    }
    if (maxdeg < 3) detail::ingest_fail("modular polynomial file has no terms of degree >= 3");
    out.level = maxdeg - 1;
    check(is_prime_u64(static_cast<uint64_t>(out.level)), ErrKind::unsupported,
          "modular polynomial degree must be p + 1 for a prime p");
    // degree p+1 in each variable, and the expansion is monic in each
    bool lead = false;
    for (auto& [a, b, c] : out.terms)
        if (a == maxdeg && b == 0 && c == 1) lead = true;
    if (!lead) detail::ingest_fail("modular polynomial is not monic of degree p + 1");
    return out;
}

// Phi_p(jx, Y) as a polynomial in Y over the field of jx, coefficients
// reduced mod the characteristic; symmetric expansion of the stored terms.
inline FPoly modpoly_in_y(const ModPolyFile& mp, const Field& F, const FieldElt& jx) {
    std::vector<FieldElt> coeff(static_cast<size_t>(mp.level + 2), F.zero());
    auto add_term = [&](int64_t xe, int64_t ye, const mpz_class& c) {
        mpz_class r = c % F.p;
        FieldElt v = F.mul(F.from_int(mod_norm(r.get_si(), F.p)), F.pow(jx, mpz_class(xe)));
        coeff[static_cast<size_t>(ye)] = F.add(coeff[static_cast<size_t>(ye)], v);
    };
    for (auto& [a, b, c] : mp.terms) {
        add_term(a, b, c);
        if (a != b) add_term(b, a, c);
    }
    FPoly f(coeff.begin(), coeff.end());
    while (f.size() > 1 && F.is_zero(f.back())) f.pop_back();
    return f;
}

// Cross-validation: Phi_p(j(E), Y) factors exactly as the product of
// (Y - j') over the p+1 isogenous j-invariants recorded in the pearls of a
// geometric necklace (a necklace visits every order-p subgroup once).
inline bool modpoly_matches_necklace(const ModPolyFile& mp, const bridge::GeoNecklace& G) {
    if (mp.level != G.p) return false;
    const Field& L = *G.L;
    Embedding emb = ff::make_embedding(G.E.F->shared_from_this(), G.L);
    FPoly phi = modpoly_in_y(mp, L, emb.map(ec::j_invariant(G.E)));
    if (ff::pdeg(phi) != G.p + 1) return false;
    for (auto& pl : G.pearls) {
        // divide out (Y - cod_j); remainder must vanish
        FPoly lin = ff::pfrom_coeffs(L, {L.neg(pl.cod_j), L.one()});
        auto [q, r] = ff::pdivmod(L, phi, lin);
        if (ff::pdeg(r) >= 0 && !(ff::pdeg(r) == 0 && L.is_zero(r[0]))) return false;
        phi = q;
    }
    return ff::pdeg(phi) == 0 && L.eq(phi[0], L.one());
}

} // namespace necklace::io

// Small shared utilities: modular machine arithmetic, primes, errors, RNG.
//
// SPDX-License-Identifier: MIT
#ifndef NECKLACE_UTIL_HPP
#define NECKLACE_UTIL_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace necklace {

// ---------------------------------------------------------------------------
// Errors. Kinds map onto the CLI exit codes (2 = bad input / domain,
// 3 = unsupported, 4 = internal arithmetic failure).
// ---------------------------------------------------------------------------
enum class ErrKind { domain = 2, unsupported = 3, internal = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

inline void check(bool ok, ErrKind kind, const std::string& msg) {
    if (!ok) throw Error(kind, msg);
}

// ---------------------------------------------------------------------------
// Machine modular arithmetic (moduli < 2^31, values normalized to [0, m)).
// ---------------------------------------------------------------------------
inline int64_t mod_norm(int64_t a, int64_t m) {
    int64_t r = a % m;
    return r < 0 ? r + m : r;
}

inline int64_t mul_mod(int64_t a, int64_t b, int64_t m) {
    return static_cast<int64_t>(static_cast<__int128>(a) * b % m);
}

inline int64_t pow_mod(int64_t a, uint64_t e, int64_t m) {
    int64_t r = 1 % m;
    a = mod_norm(a, m);
    while (e) {
        if (e & 1) r = mul_mod(r, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return r;
}

// Extended gcd based inverse; requires gcd(a, m) = 1.
inline int64_t inv_mod(int64_t a, int64_t m) {
    int64_t t = 0, nt = 1, r = m, nr = mod_norm(a, m);
    while (nr != 0) {
        int64_t q = r / nr;
        int64_t tmp = t - q * nt; t = nt; nt = tmp;
        tmp = r - q * nr; r = nr; nr = tmp;
    }
    check(r == 1, ErrKind::internal, "inv_mod: element not invertible");
    return mod_norm(t, m);
}

inline bool is_prime_u64(uint64_t n) {
    if (n < 2) return false;
    for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    // deterministic Miller-Rabin for 64-bit range
    uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        uint64_t x = 1, base = a % n, e = d;
        __uint128_t acc;
        while (e) {
            if (e & 1) { acc = static_cast<__uint128_t>(x) * base; x = static_cast<uint64_t>(acc % n); }
            acc = static_cast<__uint128_t>(base) * base; base = static_cast<uint64_t>(acc % n);
            e >>= 1;
        }
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < s; ++i) {
            acc = static_cast<__uint128_t>(x) * x; x = static_cast<uint64_t>(acc % n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

inline std::vector<int64_t> primes_below(int64_t bound) {
    std::vector<bool> sieve(static_cast<size_t>(std::max<int64_t>(bound, 2)), true);
    std::vector<int64_t> out;
    for (int64_t i = 2; i < bound; ++i) {
        if (!sieve[static_cast<size_t>(i)]) continue;
        out.push_back(i);
        for (int64_t j = i * i; j < bound; j += i) sieve[static_cast<size_t>(j)] = false;
    }
    return out;
}

// Trial-division factorization into (prime, exponent) pairs; n fits 64 bits
// and all callers have smooth-enough inputs for this to be instant.
inline std::vector<std::pair<int64_t, int>> factor_int(int64_t n) {
    check(n > 0, ErrKind::internal, "factor_int: positive input expected");
    std::vector<std::pair<int64_t, int>> out;
    for (int64_t d = 2; d * d <= n; d == 2 ? d = 3 : d += 2) {
        if (n % d) continue;
        int e = 0;
        while (n % d == 0) { n /= d; ++e; }
        out.emplace_back(d, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

inline std::vector<std::pair<mpz_class, int>> factor_mpz(mpz_class n) {
    std::vector<std::pair<mpz_class, int>> out;
    for (mpz_class d = 2; d * d <= n; d += (d == 2 ? 1 : 2)) {
        if (n % d != 0) continue;
        int e = 0;
        while (n % d == 0) { n /= d; ++e; }
        out.emplace_back(d, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

// Deterministic RNG used by every randomized routine; seeds are part of each
// call-site's configuration so runs are reproducible.
using Rng = std::mt19937_64;

inline int64_t rand_below(Rng& rng, int64_t bound) {
    return static_cast<int64_t>(rng() % static_cast<uint64_t>(bound));
}

} // namespace necklace

#endif // NECKLACE_UTIL_HPP

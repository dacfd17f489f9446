#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "groupsieve/errors.hpp"
#include "groupsieve/integers.hpp"

namespace groupsieve {

// Primes < bound (strict), sieve of Eratosthenes.
inline std::vector<u64> primes_below(u64 bound) {
    std::vector<u64> out;
    if (bound <= 2) return out;
    std::vector<char> composite(bound, 0);
    for (u64 i = 2; i < bound; ++i) {
        if (!composite[i]) {
            out.push_back(i);
            for (u64 j = i * i; j < bound; j += i) composite[j] = 1;
        }
    }
    return out;
}

// Deterministic Miller-Rabin for 64-bit inputs. The base set
// {2,3,5,7,11,13,17,19,23,29,31,37} is correct for all n < 3.3e24.
inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                  23ull, 29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                  23ull, 29ull, 31ull, 37ull}) {
        u64 x = powmod_u64(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (unsigned r = 1; r < s; ++r) {
            x = mulmod_u64(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

// Primality for arbitrary-precision values: exact below 2^64, otherwise
// GMP's Baillie-PSW + fixed Miller-Rabin rounds (deterministic for a given
// input, no known pseudoprimes).
inline bool is_prime(const Integer& n) {
    if (n < 2) return false;
    if (n.fits_ulong_p()) return is_prime_u64(n.get_ui());
    return mpz_probab_prime_p(n.get_mpz_t(), 32) > 0;
}

// Brent's cycle variant of Pollard rho. Deterministic: the polynomial
// increment walks c = 1, 2, 3, ... until a factor splits off.
inline Integer pollard_brent(const Integer& n) {
    if (n % 2 == 0) return 2;
    for (unsigned long c = 1;; ++c) {
        Integer x = 2, y = 2, d = 1, q = 1, ys = 0;
        unsigned long r = 1;
        const unsigned long block = 128;
        auto step = [&](Integer& v) { v = (v * v + c) % n; };
        while (d == 1) {
            x = y;
            for (unsigned long i = 0; i < r; ++i) step(y);
            unsigned long k = 0;
            while (k < r && d == 1) {
                ys = y;
                unsigned long lim = std::min(block, r - k);
                for (unsigned long i = 0; i < lim; ++i) {
                    step(y);
                    Integer diff = x - y;
                    if (diff < 0) diff = -diff;
                    q = (q * diff) % n;
                }
                mpz_gcd(d.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
                k += lim;
            }
            r *= 2;
            if (r > (1ul << 24)) break;  // give up on this c
        }
        if (d == n) {
            // backtrack to the first colliding pair
            do {
                step(ys);
                Integer diff = x - ys;
                if (diff < 0) diff = -diff;
                mpz_gcd(d.get_mpz_t(), diff.get_mpz_t(), n.get_mpz_t());
            } while (d == 1);
        }
        if (d != 1 && d != n) return d;
    }
}

struct PrimeFactor {
    Integer p;
    unsigned exponent;
};

// Certified factorization: sorted prime factors with multiplicities.
// verify() re-multiplies and rechecks primality of each factor.
struct Factorization {
    Integer value;  // the factored |value| (always >= 1)
    std::vector<PrimeFactor> factors;

    bool verify() const {
        Integer prod = 1;
        for (const auto& f : factors) {
            if (!is_prime(f.p)) return false;
            for (unsigned i = 0; i < f.exponent; ++i) prod *= f.p;
        }
        return prod == value;
    }

    std::vector<Integer> distinct_primes() const {
        std::vector<Integer> out;
        out.reserve(factors.size());
        for (const auto& f : factors) out.push_back(f.p);
        return out;
    }
};

// Factor |n|: trial division by primes below trial_bound, then recursive
// Brent-Pollard splitting with primality certification at every leaf.
inline Factorization factorize(const Integer& n_in, u64 trial_bound = 1000000) {
    Integer n = n_in >= 0 ? n_in : Integer(-n_in);
    if (n == 0) throw error("factorize: zero has no factorization");
    Factorization out;
    out.value = n;
    std::map<Integer, unsigned> acc;

    for (u64 p = 2; p < trial_bound && n > 1; p = (p == 2 ? 3 : p + 2)) {
        if (Integer(static_cast<unsigned long>(p)) * static_cast<unsigned long>(p) > n) break;
        while (mpz_divisible_ui_p(n.get_mpz_t(), static_cast<unsigned long>(p))) {
            ++acc[Integer(static_cast<unsigned long>(p))];
            n /= static_cast<unsigned long>(p);
        }
    }
    if (n > 1) {
        std::vector<Integer> stack{n};
        while (!stack.empty()) {
            Integer m = stack.back();
            stack.pop_back();
            if (m == 1) continue;
            if (is_prime(m)) {
                ++acc[m];
                continue;
            }
            Integer d = pollard_brent(m);
            stack.push_back(d);
            stack.push_back(m / d);
        }
    }
    for (auto& [p, e] : acc) out.factors.push_back(PrimeFactor{p, e});
    if (!out.verify()) throw error("factorize: certification failed for " + to_string(out.value));
    return out;
}

// Smallest-prime-factor table for 0..n.
inline std::vector<u64> spf_table(u64 n) {
    std::vector<u64> spf(n + 1, 0);
    for (u64 i = 2; i <= n; ++i) {
        if (spf[i] == 0) {
            for (u64 j = i; j <= n; j += i)
                if (spf[j] == 0) spf[j] = i;
        }
    }
    return spf;
}

struct SquarefreeInfo {
    bool squarefree;
    std::vector<u64> primes;  // distinct prime divisors, ascending
};

inline SquarefreeInfo squarefree_split(u64 d, const std::vector<u64>& spf) {
    SquarefreeInfo info{true, {}};
    while (d > 1) {
        u64 p = spf[d];
        info.primes.push_back(p);
        d /= p;
        if (d % p == 0) {
            info.squarefree = false;
            return info;
        }
    }
    return info;
}

}  // namespace groupsieve

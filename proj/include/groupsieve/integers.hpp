#pragma once

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "groupsieve/errors.hpp"

namespace groupsieve {

using Integer = mpz_class;
using Rational = mpq_class;

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// ---- small integer helpers -------------------------------------------------

inline i64 isqrt_i64(i64 n) {
    if (n < 0) return -1;
    if (n == 0) return 0;
    i64 r = static_cast<i64>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline bool is_square_i64(i64 n, i64& root) {
    if (n < 0) return false;
    root = isqrt_i64(n);
    return root * root == n;
}

inline u64 mod_i128(i128 v, u64 m) {
    i128 r = v % static_cast<i128>(m);
    if (r < 0) r += m;
    return static_cast<u64>(r);
}

inline u64 mulmod_u64(u64 a, u64 b, u64 m) {
    return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

inline u64 addmod_u64(u64 a, u64 b, u64 m) {
    u64 s = a + b;
    if (s >= m || s < a) s = static_cast<u64>((static_cast<u128>(a) + b) % m);
    return s % m;
}

inline u64 powmod_u64(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 r = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) r = mulmod_u64(r, base, m);
        base = mulmod_u64(base, base, m);
        exp >>= 1;
    }
    return r;
}

inline u64 gcd_u64(u64 a, u64 b) {
    while (b) {
        u64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// Extended gcd: returns g = gcd(a,b) and x,y with a*x + b*y = g.
inline i64 ext_gcd_i64(i64 a, i64 b, i64& x, i64& y) {
    if (b == 0) {
        x = (a >= 0) ? 1 : -1;
        y = 0;
        return a >= 0 ? a : -a;
    }
    i64 x1, y1;
    i64 g = ext_gcd_i64(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
    return g;
}

// Inverse of a mod m (requires gcd(a,m)=1).
inline u64 invmod_u64(u64 a, u64 m) {
    i64 x, y;
    i64 g = ext_gcd_i64(static_cast<i64>(a % m), static_cast<i64>(m), x, y);
    if (g != 1) throw error("invmod: arguments not coprime");
    i64 r = x % static_cast<i64>(m);
    if (r < 0) r += static_cast<i64>(m);
    return static_cast<u64>(r);
}

// CRT for a pair of coprime moduli: value v with v = r1 (m1), v = r2 (m2).
inline u64 crt_pair_u64(u64 r1, u64 m1, u64 r2, u64 m2) {
    // v = r1 + m1 * t,  t = (r2 - r1) / m1 mod m2
    u64 diff = (r2 + m2 - (r1 % m2)) % m2;
    u64 t = mulmod_u64(diff, invmod_u64(m1 % m2, m2), m2);
    return r1 + m1 * t;
}

inline Integer mod_floor(const Integer& a, const Integer& m) {
    Integer r = a % m;
    if (r < 0) r += m;
    return r;
}

inline u64 mod_u64(const Integer& a, u64 m) {
    Integer r = mod_floor(a, Integer(static_cast<unsigned long>(m)));
    return r.get_ui();
}

inline std::string to_string(const Integer& v) { return v.get_str(); }

inline Integer integer_from_string(const std::string& s) {
    try {
        return Integer(s);
    } catch (const std::invalid_argument&) {
        throw error("not a decimal integer: '" + s + "'");
    }
}

// v_p(n): exponent of prime p in n (n > 0).
inline unsigned valuation_u64(u64 n, u64 p) {
    unsigned v = 0;
    while (n % p == 0) {
        n /= p;
        ++v;
    }
    return v;
}

struct PrimePower {
    u64 p;
    unsigned e;
    u64 q;  // p^e
};

// Factor a small modulus into prime powers by trial division.
inline std::vector<PrimePower> prime_power_split_u64(u64 n) {
    std::vector<PrimePower> out;
    for (u64 p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            PrimePower pp{p, 0, 1};
            while (n % p == 0) {
                n /= p;
                ++pp.e;
                pp.q *= p;
            }
            out.push_back(pp);
        }
    }
    if (n > 1) out.push_back(PrimePower{n, 1, n});
    return out;
}

}  // namespace groupsieve

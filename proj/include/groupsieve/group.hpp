#pragma once

#include <array>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "groupsieve/errors.hpp"
#include "groupsieve/integers.hpp"

namespace groupsieve {

enum class GroupModel { Sl2, QuatNormOne };

// ---- Hilbert symbols --------------------------------------------------------

inline int legendre_symbol(Integer a, const Integer& p) {
    a = mod_floor(a, p);
    if (a == 0) return 0;
    Integer e = (p - 1) / 2;
    Integer r;
    mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    return r == 1 ? 1 : -1;
}

inline int hilbert_symbol_real(const Integer& a, const Integer& b) {
    return (a < 0 && b < 0) ? -1 : 1;
}

// (a,b)_p for a prime p and nonzero integers a, b.
inline int hilbert_symbol(Integer a, Integer b, const Integer& p) {
    if (a == 0 || b == 0) throw error("hilbert symbol needs nonzero entries");
    unsigned long alpha = mpz_remove(a.get_mpz_t(), a.get_mpz_t(), p.get_mpz_t());
    unsigned long beta = mpz_remove(b.get_mpz_t(), b.get_mpz_t(), p.get_mpz_t());
    // now a, b are the unit parts u, v
    if (p == 2) {
        auto eps = [](const Integer& u) {  // (u-1)/2 mod 2
            return mod_u64((u - 1) / 2, 2);
        };
        auto omega = [](const Integer& u) {  // (u^2-1)/8 mod 2
            return mod_u64((u * u - 1) / 8, 2);
        };
        u64 e = (eps(a) * eps(b) + alpha * omega(b) + beta * omega(a)) % 2;
        return e == 0 ? 1 : -1;
    }
    int sign = 1;
    if ((alpha * beta) % 2 == 1 && mod_u64((p - 1) / 2, 2) == 1) sign = -sign;
    if (beta % 2 == 1 && legendre_symbol(a, p) == -1) sign = -sign;
    if (alpha % 2 == 1 && legendre_symbol(b, p) == -1) sign = -sign;
    return sign;
}

// ---- GroupSpec ---------------------------------------------------------------

// Evidence that the ternary form a x^2 + b y^2 - z^2 has no nonzero rational
// zero: an exhaustive search bound plus the ramified places of B(a,b).
struct DivisionCertificate {
    long search_bound = 0;
    std::vector<long> ramified_places;  // 0 stands for the real place
};

struct GroupSpec {
    GroupModel model = GroupModel::Sl2;
    long quat_a = 0;
    long quat_b = 0;
    u64 level = 1;  // principal congruence level alpha

    bool operator==(const GroupSpec& o) const {
        return model == o.model && quat_a == o.quat_a && quat_b == o.quat_b &&
               level == o.level;
    }

    bool is_quat() const { return model == GroupModel::QuatNormOne; }

    std::string describe() const {
        if (model == GroupModel::Sl2) return "sl2(level " + std::to_string(level) + ")";
        return "quat(" + std::to_string(quat_a) + "," + std::to_string(quat_b) +
               ", level " + std::to_string(level) + ")";
    }

    // Primes of declared bad reduction: divisors of 2ab for the quaternion
    // model; SL2 is smooth everywhere.
    bool good_reduction_at(u64 p) const {
        if (model == GroupModel::Sl2) return true;
        long n = 2 * quat_a * quat_b;
        if (n < 0) n = -n;
        return static_cast<u64>(n) % p != 0;
    }
};

// Checks the QuatNormOne invariants and returns the certificate:
// exhaustive zero search for a x^2 + b y^2 = z^2 up to |coord| <= bound,
// and Hilbert-symbol ramification at 2, odd divisors of ab, and the real
// place (the algebra is division iff some place ramifies).
inline DivisionCertificate certify_division_algebra(long a, long b, long bound = 100) {
    if (a == 0 || b == 0) throw config_error("quaternion parameters must be nonzero");
    if (a <= 0 && b <= 0)
        throw config_error("need a > 0 or b > 0 so the real points are non-compact");
    for (long x = -bound; x <= bound; ++x)
        for (long y = -bound; y <= bound; ++y) {
            if (x == 0 && y == 0) continue;
            i64 t = static_cast<i64>(a) * x * x + static_cast<i64>(b) * y * y;
            i64 z;
            if (is_square_i64(t, z) && z <= bound)
                throw config_error("a x^2 + b y^2 - z^2 has the nonzero rational zero (" +
                                   std::to_string(x) + "," + std::to_string(y) + "," +
                                   std::to_string(z) + "): B(a,b) is not division");
        }
    DivisionCertificate cert;
    cert.search_bound = bound;
    if (hilbert_symbol_real(a, b) == -1) cert.ramified_places.push_back(0);
    std::vector<u64> candidates{2};
    u64 n = static_cast<u64>(std::abs(a)) * static_cast<u64>(std::abs(b));
    while (n % 2 == 0) n /= 2;
    for (u64 p = 3; p * p <= n; p += 2)
        if (n % p == 0) {
            candidates.push_back(p);
            while (n % p == 0) n /= p;
        }
    if (n > 2) candidates.push_back(n);
    for (u64 p : candidates)
        if (hilbert_symbol(a, b, Integer(static_cast<long>(p))) == -1)
            cert.ramified_places.push_back(static_cast<long>(p));
    if (cert.ramified_places.empty())
        throw config_error("B(" + std::to_string(a) + "," + std::to_string(b) +
                           ") is unramified everywhere: matrix algebra, not division");
    return cert;
}

inline void validate_spec(const GroupSpec& spec) {
    if (spec.level < 1) throw config_error("congruence level must be >= 1");
    if (spec.is_quat()) certify_division_algebra(spec.quat_a, spec.quat_b);
}

// ---- coordinate products -----------------------------------------------------
//
// Both models live on integer 4-vectors. SL2 coords are the matrix entries
// (g11,g12,g21,g22); quaternion coords are (x,y,z,w) for x + y i + z j + w ij
// with i^2 = a, j^2 = b, ij = -ji. One templated product serves exact
// integers and polynomial coefficients alike.

template <class T>
std::array<T, 4> model_product(const GroupSpec& spec, const std::array<T, 4>& u,
                               const std::array<T, 4>& v) {
    std::array<T, 4> r;
    if (spec.model == GroupModel::Sl2) {
        r[0] = u[0] * v[0] + u[1] * v[2];
        r[1] = u[0] * v[1] + u[1] * v[3];
        r[2] = u[2] * v[0] + u[3] * v[2];
        r[3] = u[2] * v[1] + u[3] * v[3];
    } else {
        const long a = spec.quat_a, b = spec.quat_b;
        r[0] = u[0] * v[0] + a * (u[1] * v[1]) + b * (u[2] * v[2]) - (a * b) * (u[3] * v[3]);
        r[1] = u[0] * v[1] + u[1] * v[0] - b * (u[2] * v[3]) + b * (u[3] * v[2]);
        r[2] = u[0] * v[2] + u[2] * v[0] + a * (u[1] * v[3]) - a * (u[3] * v[1]);
        r[3] = u[0] * v[3] + u[3] * v[0] + u[1] * v[2] - u[2] * v[1];
    }
    return r;
}

template <class T>
std::array<T, 4> model_conj_inverse(const GroupSpec& spec, const std::array<T, 4>& u) {
    if (spec.model == GroupModel::Sl2) return {u[3], -u[1], -u[2], u[0]};
    return {u[0], -u[1], -u[2], -u[3]};
}

// det - 1 resp. nrd - 1; zero on the group.
template <class T>
T model_equation(const GroupSpec& spec, const std::array<T, 4>& u) {
    if (spec.model == GroupModel::Sl2) return u[0] * u[3] - u[1] * u[2] - 1;
    const long a = spec.quat_a, b = spec.quat_b;
    return u[0] * u[0] - a * (u[1] * u[1]) - b * (u[2] * u[2]) + (a * b) * (u[3] * u[3]) - 1;
}

template <class T>
std::array<T, 4> model_identity(const GroupSpec& spec) {
    if (spec.model == GroupModel::Sl2) return {T(1), T(0), T(0), T(1)};
    return {T(1), T(0), T(0), T(0)};
}

// Reduced norm (quat) resp. determinant (SL2) of an arbitrary 4-vector.
template <class T>
T model_norm(const GroupSpec& spec, const std::array<T, 4>& u) {
    if (spec.model == GroupModel::Sl2) return u[0] * u[3] - u[1] * u[2];
    const long a = spec.quat_a, b = spec.quat_b;
    return u[0] * u[0] - a * (u[1] * u[1]) - b * (u[2] * u[2]) + (a * b) * (u[3] * u[3]);
}

// ---- GroupElement / ResidueElement -------------------------------------------

struct ResidueElement {
    u64 modulus = 1;
    std::array<u64, 4> coords{0, 0, 0, 0};

    bool operator==(const ResidueElement& o) const {
        return modulus == o.modulus && coords == o.coords;
    }
    bool operator<(const ResidueElement& o) const { return coords < o.coords; }

    // packs into one u64 when modulus^4 fits; used as a set key
    u64 pack() const {
        u64 k = 0;
        for (int i = 0; i < 4; ++i) k = k * modulus + coords[i];
        return k;
    }
};

inline ResidueElement identity_residue(const GroupSpec& spec, u64 m) {
    if (m == 0) throw invalid_modulus_error("modulus must be positive");
    ResidueElement r;
    r.modulus = m;
    auto id = model_identity<i64>(spec);
    for (int i = 0; i < 4; ++i) r.coords[i] = static_cast<u64>(id[i]) % m;
    return r;
}

inline bool residue_satisfies_equation(const GroupSpec& spec, const ResidueElement& r) {
    std::array<i128, 4> c;
    for (int i = 0; i < 4; ++i) c[i] = r.coords[i];
    i128 v;
    if (spec.model == GroupModel::Sl2) {
        v = c[0] * c[3] - c[1] * c[2] - 1;
    } else {
        const i128 a = spec.quat_a, b = spec.quat_b;
        v = c[0] * c[0] - a * c[1] * c[1] - b * c[2] * c[2] + a * b * c[3] * c[3] - 1;
    }
    return mod_i128(v, r.modulus) == 0;
}

inline ResidueElement residue_multiply(const GroupSpec& spec, const ResidueElement& x,
                                       const ResidueElement& y) {
    if (x.modulus != y.modulus) throw invalid_modulus_error("residue moduli differ");
    const u64 m = x.modulus;
    std::array<i128, 4> u, v;
    for (int i = 0; i < 4; ++i) {
        u[i] = x.coords[i];
        v[i] = y.coords[i];
    }
    std::array<i128, 4> r;
    if (spec.model == GroupModel::Sl2) {
        r[0] = u[0] * v[0] + u[1] * v[2];
        r[1] = u[0] * v[1] + u[1] * v[3];
        r[2] = u[2] * v[0] + u[3] * v[2];
        r[3] = u[2] * v[1] + u[3] * v[3];
    } else {
        const i128 a = spec.quat_a, b = spec.quat_b;
        r[0] = u[0] * v[0] + a * u[1] * v[1] + b * u[2] * v[2] - a * b * u[3] * v[3];
        r[1] = u[0] * v[1] + u[1] * v[0] - b * u[2] * v[3] + b * u[3] * v[2];
        r[2] = u[0] * v[2] + u[2] * v[0] + a * u[1] * v[3] - a * u[3] * v[1];
        r[3] = u[0] * v[3] + u[3] * v[0] + u[1] * v[2] - u[2] * v[1];
    }
    ResidueElement out;
    out.modulus = m;
    for (int i = 0; i < 4; ++i) out.coords[i] = mod_i128(r[i], m);
    return out;
}

struct GroupElement {
    GroupSpec spec;
    std::array<Integer, 4> coords;

    bool operator==(const GroupElement& o) const {
        return spec == o.spec && coords == o.coords;
    }
};

// An element of the ambient algebra (matrix ring resp. quaternion order) in
// model coordinates; no group-membership check.
inline GroupElement make_raw(const GroupSpec& spec, std::array<Integer, 4> coords) {
    return GroupElement{spec, std::move(coords)};
}

inline GroupElement make_raw_i(const GroupSpec& spec, i64 c0, i64 c1, i64 c2, i64 c3) {
    return make_raw(spec, {Integer(static_cast<long>(c0)), Integer(static_cast<long>(c1)),
                           Integer(static_cast<long>(c2)), Integer(static_cast<long>(c3))});
}

inline bool is_group_point(const GroupElement& g) {
    return model_equation<Integer>(g.spec, g.coords) == 0;
}

inline GroupElement make_element(const GroupSpec& spec, std::array<Integer, 4> coords) {
    GroupElement g{spec, std::move(coords)};
    if (!is_group_point(g))
        throw error("coordinates do not satisfy the defining equation of " + spec.describe());
    return g;
}

inline GroupElement make_element_i(const GroupSpec& spec, i64 c0, i64 c1, i64 c2, i64 c3) {
    return make_element(spec, {Integer(static_cast<long>(c0)), Integer(static_cast<long>(c1)),
                               Integer(static_cast<long>(c2)), Integer(static_cast<long>(c3))});
}

inline GroupElement identity_element(const GroupSpec& spec) {
    auto id = model_identity<i64>(spec);
    return make_element_i(spec, id[0], id[1], id[2], id[3]);
}

inline GroupElement multiply(const GroupElement& g, const GroupElement& h) {
    if (!(g.spec == h.spec))
        throw spec_mismatch_error("cannot multiply elements of " + g.spec.describe() +
                                  " and " + h.spec.describe());
    GroupElement out{g.spec, model_product<Integer>(g.spec, g.coords, h.coords)};
    return out;
}

inline GroupElement conj_inverse(const GroupElement& g) {
    return GroupElement{g.spec, model_conj_inverse<Integer>(g.spec, g.coords)};
}

inline GroupElement power(const GroupElement& g, u64 n) {
    GroupElement acc = identity_element(g.spec);
    GroupElement base = g;
    while (n > 0) {
        if (n & 1) acc = multiply(acc, base);
        base = multiply(base, base);
        n >>= 1;
    }
    return acc;
}

// H(g) = max |coordinate|.
inline Integer height(const GroupElement& g) {
    Integer h = 0;
    for (const auto& c : g.coords) {
        Integer a = c >= 0 ? c : Integer(-c);
        if (a > h) h = a;
    }
    return h;
}

inline ResidueElement reduce_mod(const GroupElement& g, u64 m) {
    if (m == 0) throw invalid_modulus_error("reduce_mod: modulus must be >= 1");
    ResidueElement r;
    r.modulus = m;
    for (int i = 0; i < 4; ++i) r.coords[i] = mod_u64(g.coords[i], m);
    return r;
}

inline bool in_congruence_subgroup(const GroupElement& g, u64 alpha) {
    return reduce_mod(g, alpha) == identity_residue(g.spec, alpha);
}

}  // namespace groupsieve

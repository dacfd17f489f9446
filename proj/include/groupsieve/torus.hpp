#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "groupsieve/errors.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/integers.hpp"
#include "groupsieve/finite_models.hpp"
#include "groupsieve/polynomial.hpp"
#include "groupsieve/primes.hpp"

namespace groupsieve {

// ---- Pell units -----------------------------------------------------------------

// Minimal (u, v) with u^2 - d v^2 = 1, v >= 1, via the continued fraction of
// sqrt(d); the fundamental solution appears among the convergents.
inline std::pair<Integer, Integer> pell_fundamental(long d) {
    if (d < 2) throw invalid_torus_error("torus parameter must be >= 2");
    Integer D(d), a0;
    mpz_sqrt(a0.get_mpz_t(), D.get_mpz_t());
    if (a0 * a0 == D) throw invalid_torus_error("torus parameter must be nonsquare");

    Integer P = 0, Q = 1, a = a0;
    Integer h_prev = 1, h = a0, k_prev = 0, k = 1;
    for (int iter = 0; iter < 100000; ++iter) {
        if (h * h - D * k * k == 1) return {h, k};
        P = a * Q - P;
        Q = (D - P * P) / Q;
        a = (a0 + P) / Q;
        Integer h_next = a * h + h_prev;
        Integer k_next = a * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    throw error("pell expansion did not close; d=" + std::to_string(d));
}

// The Q(sqrt(d)) norm-one torus: Q = u + v i inside the quaternion model
// with i^2 = d = a.
struct TorusSpec {
    long d = 2;
    Integer u, v;  // the distinguished infinite-order unit

    std::pair<Integer, Integer> unit() const { return {u, v}; }
};

inline TorusSpec make_torus(long d, std::optional<std::pair<Integer, Integer>> unit = std::nullopt) {
    TorusSpec ts;
    ts.d = d;
    if (unit) {
        ts.u = unit->first;
        ts.v = unit->second;
        if (ts.u * ts.u - Integer(d) * ts.v * ts.v != 1)
            throw invalid_torus_error("supplied unit is not norm-one for d=" + std::to_string(d));
        if (ts.v == 0)
            throw invalid_torus_error("supplied unit is +-identity: finite order");
        if (d < 2 || [&] { Integer r; mpz_sqrt(r.get_mpz_t(), Integer(d).get_mpz_t()); return r * r == d; }())
            throw invalid_torus_error("torus parameter must be a nonsquare >= 2");
    } else {
        auto [u, v] = pell_fundamental(d);
        ts.u = u;
        ts.v = v;
    }
    return ts;
}

// Embeds the unit u + v i as a group element of the quaternion model.
inline GroupElement torus_unit_element(const GroupSpec& spec, const TorusSpec& ts) {
    if (!spec.is_quat() || spec.quat_a != ts.d)
        throw invalid_torus_error("torus lives in the i-subfield: need quat model with a = d");
    return make_element(spec, {ts.u, ts.v, Integer(0), Integer(0)});
}

inline std::pair<Integer, Integer> torus_multiply(long d, const std::pair<Integer, Integer>& x,
                                                  const std::pair<Integer, Integer>& y) {
    return {x.first * y.first + Integer(d) * x.second * y.second,
            x.first * y.second + x.second * y.first};
}

inline std::pair<Integer, Integer> torus_power(long d, std::pair<Integer, Integer> base, u64 n) {
    std::pair<Integer, Integer> acc{1, 0};
    while (n > 0) {
        if (n & 1) acc = torus_multiply(d, acc, base);
        base = torus_multiply(d, base, base);
        n >>= 1;
    }
    return acc;
}

// Multiplicative order of Q mod p in the finite torus, by iterated
// multiplication; the group order p -+ 1 is only a stopping bound.
inline u64 torus_order_mod(const TorusSpec& ts, u64 p) {
    if (!is_prime_u64(p)) throw bad_reduction_error("torus order needs a prime modulus");
    u64 twod = static_cast<u64>(2 * std::abs(ts.d));
    if (twod % p == 0)
        throw bad_reduction_error("p=" + std::to_string(p) + " divides 2d: bad torus reduction");
    const u64 du = mod_u64(Integer(ts.d), p);
    const u64 qu = mod_u64(ts.u, p), qv = mod_u64(ts.v, p);
    u64 s = qu, t = qv;
    for (u64 ord = 1; ord <= p + 1; ++ord) {
        if (s == 1 && t == 0) return ord;
        u64 s2 = addmod_u64(mulmod_u64(s, qu, p), mulmod_u64(du, mulmod_u64(t, qv, p), p), p);
        u64 t2 = addmod_u64(mulmod_u64(s, qv, p), mulmod_u64(t, qu, p), p);
        s = s2;
        t = t2;
    }
    throw error("torus order exceeded p+1: p is not of good reduction?");
}

// ---- torus-order threshold --------------------------------------------------------

struct ThresholdReport {
    Integer M = 1;          // least bound: good p > M have order > l
    u64 l = 0;              // r * N_fiber + 1
    std::vector<std::pair<Integer, u64>> bad_primes;  // (p, order), order <= l
    std::vector<std::pair<u64, Integer>> resultants;  // (j, gcd(u_j - 1, v_j))
};

// Every good prime with ord(Q mod p) <= l divides gcd(u_j - 1, v_j) for some
// j <= l, so factoring those certifies the threshold beyond any scan bound.
// Primes <= prime_bound are additionally scanned exhaustively as a
// cross-check of the divisibility criterion.
inline ThresholdReport threshold_M(const TorusSpec& ts, u64 r, u64 n_fiber, u64 prime_bound,
                                   u64 factor_trial_bound = 1000000) {
    ThresholdReport rep;
    rep.l = r * n_fiber + 1;
    std::map<Integer, u64> bad;
    std::pair<Integer, Integer> q{1, 0};
    for (u64 j = 1; j <= rep.l; ++j) {
        q = torus_multiply(ts.d, q, ts.unit());
        Integer rj;
        Integer um1 = q.first - 1;
        mpz_gcd(rj.get_mpz_t(), um1.get_mpz_t(), q.second.get_mpz_t());
        if (rj == 0) throw invalid_torus_error("unit has finite order: Q^j = identity");
        rep.resultants.push_back({j, rj});
        if (rj == 1) continue;
        Factorization fac = factorize(rj, factor_trial_bound);
        for (const auto& pf : fac.factors) {
            if (!pf.p.fits_ulong_p()) {
                bad.emplace(pf.p, 0);  // beyond direct order computation; still a divisor bound
                continue;
            }
            u64 p = pf.p.get_ui();
            if ((2 * static_cast<u64>(std::abs(ts.d))) % p == 0) continue;  // bad torus reduction
            u64 ord = torus_order_mod(ts, p);
            if (ord > rep.l)
                throw error("divisibility criterion inconsistency at p=" + std::to_string(p));
            bad[pf.p] = ord;
        }
    }
    // exhaustive cross-check below prime_bound
    std::vector<Integer> offending;
    for (u64 p : primes_below(prime_bound + 1)) {
        if ((2 * static_cast<u64>(std::abs(ts.d))) % p == 0) continue;
        u64 ord = torus_order_mod(ts, p);
        if (ord <= rep.l && bad.find(Integer(static_cast<unsigned long>(p))) == bad.end())
            offending.push_back(Integer(static_cast<unsigned long>(p)));
    }
    if (!offending.empty()) {
        std::string names;
        for (const auto& p : offending) names += " " + to_string(p);
        throw error("threshold certification failed; offending primes:" + names);
    }
    for (const auto& [p, ord] : bad) {
        rep.bad_primes.push_back({p, ord});
        if (p > rep.M) rep.M = p;
    }
    return rep;
}

// ---- bad places ----------------------------------------------------------------------

// S0: prime factors of the f-value outside S and the divisors of alpha*N.
// The sieve contract promises each exceeds M; a smaller one is a pipeline
// violation.
inline std::vector<Integer> bad_places(const Factorization& value_factorization,
                                       const std::vector<u64>& S, const Integer& alphaN,
                                       const Integer& M) {
    std::vector<u64> S_sorted = S;
    std::sort(S_sorted.begin(), S_sorted.end());
    std::vector<Integer> out;
    for (const auto& pf : value_factorization.factors) {
        if (pf.p.fits_ulong_p() &&
            std::binary_search(S_sorted.begin(), S_sorted.end(), static_cast<u64>(pf.p.get_ui())))
            continue;
        if (mpz_divisible_p(alphaN.get_mpz_t(), pf.p.get_mpz_t())) continue;
        if (pf.p <= M)
            throw pipeline_violation_error("bad place " + to_string(pf.p) +
                                           " does not exceed the threshold M=" + to_string(M) +
                                           ": the sieve stage violated its contract");
        out.push_back(pf.p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- quotient map pi(g) = conj(g) * i * g ----------------------------------------------

// Pure-quaternion coordinates (y, z, w) of pi as polynomials in the group
// coordinates. Left torus translation fixes pi exactly since the torus
// centralizes i.
inline std::array<RegularFunction, 3> quotient_map_polys(const GroupSpec& spec) {
    if (!spec.is_quat()) throw error("the quotient map is defined for the quaternion model");
    auto g = symbolic_coordinates();
    auto gbar = model_conj_inverse<RegularFunction>(spec, g);
    std::array<RegularFunction, 4> i_basis{RegularFunction(0), RegularFunction(1),
                                           RegularFunction(0), RegularFunction(0)};
    auto left = model_product<RegularFunction>(spec, gbar, i_basis);
    auto full = model_product<RegularFunction>(spec, left, g);
    if (!full[0].is_zero())
        throw error("pi is not pure: conjugation identity violated (internal)");
    return {full[1], full[2], full[3]};
}

inline std::array<Integer, 3> pi_of(const GroupElement& g) {
    const auto& spec = g.spec;
    if (!spec.is_quat()) throw error("the quotient map is defined for the quaternion model");
    auto gbar = model_conj_inverse<Integer>(spec, g.coords);
    std::array<Integer, 4> i_basis{0, 1, 0, 0};
    auto left = model_product<Integer>(spec, gbar, i_basis);
    auto full = model_product<Integer>(spec, left, g.coords);
    if (full[0] != 0) throw error("pi is not pure at the given point (internal)");
    return {full[1], full[2], full[3]};
}

inline std::array<u64, 3> pi_residue(const GroupSpec& spec, const std::array<u64, 4>& c, u64 p) {
    ResidueElement g{p, c};
    ResidueElement gbar{p, {c[0], (p - c[1] % p) % p, (p - c[2] % p) % p, (p - c[3] % p) % p}};
    ResidueElement i_basis{p, {0, 1 % p, 0, 0}};
    auto left = residue_multiply(spec, gbar, i_basis);
    auto full = residue_multiply(spec, left, g);
    return {full.coords[1], full.coords[2], full.coords[3]};
}

// Index into pi's image coordinates (y, z, w).
enum class SeparatingCoord { PiY = 0, PiZ = 1, PiW = 2 };

inline SeparatingCoord separating_coord_from_name(const std::string& name) {
    if (name == "pi_y") return SeparatingCoord::PiY;
    if (name == "pi_z") return SeparatingCoord::PiZ;
    if (name == "pi_w") return SeparatingCoord::PiW;
    throw config_error("separating function must be one of pi_y, pi_z, pi_w");
}

inline std::string separating_coord_name(SeparatingCoord c) {
    switch (c) {
        case SeparatingCoord::PiY: return "pi_y";
        case SeparatingCoord::PiZ: return "pi_z";
        default: return "pi_w";
    }
}

// f(g) = F(pi(g * P)) as an exact polynomial in the coordinates of g.
inline RegularFunction compose_separating_function(const GroupSpec& spec, SeparatingCoord F,
                                                   const GroupElement& P) {
    if (!spec.is_quat()) throw error("separating composition needs the quaternion model");
    auto g = symbolic_coordinates();
    auto gP = model_product<RegularFunction>(spec, g, symbolic_constant(P));
    auto gPbar = model_conj_inverse<RegularFunction>(spec, gP);
    std::array<RegularFunction, 4> i_basis{RegularFunction(0), RegularFunction(1),
                                           RegularFunction(0), RegularFunction(0)};
    auto left = model_product<RegularFunction>(spec, gPbar, i_basis);
    auto full = model_product<RegularFunction>(spec, left, gP);
    if (!full[0].is_zero()) throw error("composed pi is not pure (internal)");
    RegularFunction f = full[1 + static_cast<int>(F)];
    f.set_name(separating_coord_name(F) + "@P");
    return f;
}

// ---- removed subset ---------------------------------------------------------------------

struct SubsetSpec {
    std::vector<RegularFunction> generators;
    unsigned declared_codim = 2;
    u64 n_fiber = 0;  // declared fibre-degree bound; 0 = derive Bezout default
};

inline bool residue_in_subset(const SubsetSpec& D, const ResidueElement& r) {
    for (const auto& g : D.generators)
        if (g.eval_mod(r.coords, r.modulus) != 0) return false;
    return true;
}

inline bool element_in_subset_mod(const SubsetSpec& D, const GroupElement& g, u64 p) {
    return residue_in_subset(D, reduce_mod(g, p));
}

// Fibre of the quotient through a point is its torus orbit: the conic
// 2-parameter count for degree-2 curves against min-degree generators.
inline u64 default_fiber_bound(const SubsetSpec& D) {
    unsigned mindeg = ~0u;
    for (const auto& g : D.generators)
        if (!g.is_zero()) mindeg = std::min(mindeg, g.total_degree());
    if (mindeg == ~0u || mindeg == 0) throw config_error("subset generators must be nonconstant");
    return 2ull * mindeg;
}

// ---- fibre counting mod p -----------------------------------------------------------------

namespace detail {

// chi(x) mod odd prime p: 0, 1, or -1.
inline int euler_chi(u64 x, u64 p) {
    x %= p;
    if (x == 0) return 0;
    return powmod_u64(x, (p - 1) / 2, p) == 1 ? 1 : -1;
}

// number of roots of A s^2 + B s + C mod odd p
inline u64 quadratic_root_count(u64 A, u64 B, u64 C, u64 p) {
    A %= p;
    B %= p;
    C %= p;
    if (A == 0) {
        if (B != 0) return 1;
        return C == 0 ? p : 0;  // degenerate: identically zero / inconsistent
    }
    u64 disc = addmod_u64(mulmod_u64(B, B, p), p - mulmod_u64(4 % p, mulmod_u64(A, C, p), p), p);
    int chi = euler_chi(disc, p);
    if (chi == 0) return 1;
    return chi == 1 ? 2 : 0;
}

}  // namespace detail

struct FiberCountResult {
    u64 p = 0;
    u64 count = 0;
    bool linear_path = false;  // solved algebraically; otherwise enumerated
};

// #(D intersect T-orbit of the base point) over F_p. The orbit point
// (s + t i) * P has coordinates linear in (s, t); degree-1 generators give a
// line/conic intersection solved exactly for any p, higher degree falls back
// to enumerating the torus (p within the enumeration budget).
inline FiberCountResult count_subset_in_fiber_mod(const GroupSpec& spec, const SubsetSpec& D,
                                                  const std::array<u64, 4>& base, long torus_d,
                                                  u64 p, u64 enum_bound = (1u << 21)) {
    if (!spec.is_quat()) throw error("fibre counting needs the quaternion model");
    if (p == 2 || (2 * static_cast<u64>(std::abs(torus_d))) % p == 0)
        throw bad_reduction_error("fibre counting at a bad-reduction prime");
    FiberCountResult res;
    res.p = p;
    const u64 a = mod_u64(Integer(torus_d), p);
    // coords of (s + t i) * P: s * P + t * (i * P)
    const std::array<u64, 4> sc = {base[0] % p, base[1] % p, base[2] % p, base[3] % p};
    const std::array<u64, 4> tc = {mulmod_u64(a, base[1] % p, p), base[0] % p,
                                   mulmod_u64(a, base[3] % p, p), base[2] % p};

    bool all_linear = true;
    for (const auto& g : D.generators)
        if (g.total_degree() > 1) all_linear = false;

    if (all_linear) {
        res.linear_path = true;
        // rows A s + B t + C = 0
        std::vector<std::array<u64, 3>> rows;
        bool all_zero = true;
        for (const auto& g : D.generators) {
            u64 A = 0, B = 0, C = 0;
            for (const auto& mono : g.terms()) {
                u64 cm = mod_u64(mono.c, p);
                unsigned total = mono.e[0] + mono.e[1] + mono.e[2] + mono.e[3];
                if (total == 0) {
                    C = addmod_u64(C, cm, p);
                } else {
                    for (int i = 0; i < 4; ++i)
                        if (mono.e[i] == 1) {
                            A = addmod_u64(A, mulmod_u64(cm, sc[i], p), p);
                            B = addmod_u64(B, mulmod_u64(cm, tc[i], p), p);
                        }
                }
            }
            if (A != 0 || B != 0 || C != 0) all_zero = false;
            rows.push_back({A, B, C});
        }
        if (all_zero)
            throw pipeline_violation_error(
                "every subset generator vanishes on the whole fibre mod " + std::to_string(p) +
                ": D contains a torus coset");
        // drop zero rows; detect inconsistent constant rows
        std::vector<std::array<u64, 3>> lines;
        for (const auto& r : rows) {
            if (r[0] == 0 && r[1] == 0) {
                if (r[2] != 0) return res;  // 0 points
                continue;
            }
            lines.push_back(r);
        }
        if (lines.empty())
            throw pipeline_violation_error("subset generators cut nothing out of the fibre mod " +
                                           std::to_string(p));
        // try to find two independent lines
        const auto& L0 = lines[0];
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto& L = lines[i];
            u64 det = addmod_u64(mulmod_u64(L0[0], L[1], p), p - mulmod_u64(L0[1], L[0], p), p);
            if (det != 0) {
                // unique (s, t) by Cramer
                u64 inv = invmod_u64(det, p);
                u64 rhs0 = (p - L0[2]) % p, rhs1 = (p - L[2]) % p;
                u64 s = mulmod_u64(addmod_u64(mulmod_u64(rhs0, L[1], p),
                                              p - mulmod_u64(L0[1], rhs1, p), p),
                                   inv, p);
                u64 t = mulmod_u64(addmod_u64(mulmod_u64(L0[0], rhs1, p),
                                              p - mulmod_u64(rhs0, L[0], p), p),
                                   inv, p);
                // conic membership and remaining rows
                u64 conic = addmod_u64(mulmod_u64(s, s, p),
                                       p - mulmod_u64(a, mulmod_u64(t, t, p), p), p);
                if (conic != 1 % p) return res;
                for (const auto& L2 : lines) {
                    u64 val = addmod_u64(addmod_u64(mulmod_u64(L2[0], s, p),
                                                    mulmod_u64(L2[1], t, p), p),
                                         L2[2], p);
                    if (val != 0) return res;
                }
                res.count = 1;
                return res;
            }
        }
        // rank 1: all lines proportional to L0 = (A, B, C); consistency first
        u64 A = L0[0], B = L0[1], C = L0[2];
        for (const auto& L : lines) {
            // L = lambda * L0 for some lambda? cross-check all 2x2 minors
            u64 m1 = addmod_u64(mulmod_u64(A, L[2], p), p - mulmod_u64(C, L[0], p), p);
            u64 m2 = addmod_u64(mulmod_u64(B, L[2], p), p - mulmod_u64(C, L[1], p), p);
            if (m1 != 0 || m2 != 0) return res;  // inconsistent: empty
        }
        if (B != 0) {
            // t = -(C + A s) / B; (B^2 - d A^2) s^2 - 2 d A C s - (d C^2 + B^2) = 0
            u64 B2 = mulmod_u64(B, B, p);
            u64 qa = addmod_u64(B2, p - mulmod_u64(a, mulmod_u64(A, A, p), p), p);
            u64 qb = (p - mulmod_u64(2 % p, mulmod_u64(a, mulmod_u64(A, C, p), p), p)) % p;
            u64 qc = (p - addmod_u64(mulmod_u64(a, mulmod_u64(C, C, p), p), B2, p)) % p;
            u64 roots = detail::quadratic_root_count(qa, qb, qc, p);
            if (roots == p) throw error("line inside the torus conic mod p (internal)");
            res.count = roots;
            return res;
        }
        // B == 0, A != 0: s fixed, t^2 = (s^2 - 1)/d
        u64 s = mulmod_u64((p - C) % p, invmod_u64(A, p), p);
        u64 num = addmod_u64(mulmod_u64(s, s, p), p - 1 % p, p);
        u64 t2 = mulmod_u64(num, invmod_u64(a, p), p);
        int chi = detail::euler_chi(t2, p);
        res.count = t2 == 0 ? 1 : (chi == 1 ? 2 : 0);
        return res;
    }

    // enumeration fallback
    if (p > enum_bound)
        throw budget_error("fibre enumeration needs p <= " + std::to_string(enum_bound) +
                               " for nonlinear generators",
                           std::to_string(p));
    std::vector<u64> root(p, p);  // p = no root marker; stores min root
    for (u64 x = 0; x <= p / 2; ++x) {
        u64 sq = mulmod_u64(x, x, p);
        if (root[sq] == p) root[sq] = x;
    }
    std::vector<RegularFunction::ModEvaluator> evs;
    for (const auto& g : D.generators) evs.push_back(g.evaluator_mod(p));
    for (u64 t = 0; t < p; ++t) {
        u64 s2 = addmod_u64(1 % p, mulmod_u64(a, mulmod_u64(t, t, p), p), p);
        u64 s0 = root[s2];
        if (s0 == p) continue;
        for (u64 s : {s0, (p - s0) % p}) {
            // group point (s + t i) * P
            std::array<u64, 4> pt;
            for (int i = 0; i < 4; ++i)
                pt[i] = addmod_u64(mulmod_u64(s, sc[i], p), mulmod_u64(t, tc[i], p), p);
            bool in_D = true;
            for (const auto& ev : evs)
                if (ev(pt) != 0) {
                    in_D = false;
                    break;
                }
            if (in_D) ++res.count;
            if (s0 == 0 || 2 * s0 == p) break;  // s and p-s coincide
        }
    }
    return res;
}

// Empirical fibre-degree bound: max over all fibres mod p of the number of
// D-points (exhaustive reduction).
inline u64 max_fiber_count_mod(const GroupSpec& spec, const SubsetSpec& D, u64 p) {
    std::map<std::array<u64, 3>, u64> buckets;
    std::vector<RegularFunction::ModEvaluator> evs;
    for (const auto& g : D.generators) evs.push_back(g.evaluator_mod(p));
    detail::for_each_group_point_mod(spec, p, [&](const std::array<u64, 4>& c) {
        for (const auto& ev : evs)
            if (ev(c) != 0) return true;
        ++buckets[pi_residue(spec, c, p)];
        return true;
    });
    u64 best = 0;
    for (const auto& [key, n] : buckets) best = std::max(best, n);
    return best;
}

struct PiVanishingCheck {
    u64 p = 0;
    u64 d_points = 0;              // # D(F_p)
    bool d_maps_into_VF = true;    // F(pi(x)) = 0 for every x in D(F_p)
    bool F_nonvanishing = false;   // some group point has F(pi) != 0
};

// Step-I containment at p: pi(D) lies in the zero locus of F, and F does not
// vanish on the whole quotient data.
inline PiVanishingCheck check_pi_vanishing(const GroupSpec& spec, const SubsetSpec& D,
                                           SeparatingCoord F, u64 p) {
    PiVanishingCheck chk;
    chk.p = p;
    std::vector<RegularFunction::ModEvaluator> evs;
    for (const auto& g : D.generators) evs.push_back(g.evaluator_mod(p));
    const int fi = static_cast<int>(F);
    detail::for_each_group_point_mod(spec, p, [&](const std::array<u64, 4>& c) {
        auto pi = pi_residue(spec, c, p);
        if (pi[fi] != 0) chk.F_nonvanishing = true;
        for (const auto& ev : evs)
            if (ev(c) != 0) return true;
        ++chk.d_points;
        if (pi[fi] != 0) chk.d_maps_into_VF = false;
        return true;
    });
    return chk;
}

// ---- avoidance ------------------------------------------------------------------------------

struct AvoidanceState {
    GroupSpec spec;
    TorusSpec torus;
    GroupElement P_prime;
    std::vector<Integer> S0;
    u64 r0 = 1;
    u64 n_fiber = 1;
};

struct PrimeTranscript {
    Integer p;
    u64 order = 0;          // ord(Q mod p)
    u64 fiber_count = 0;    // # D-points in the fibre through P' mod p
    u64 orbit_distinct = 0; // # distinct reductions of Theta mod p
    std::vector<u64> bad_ls;  // orbit indices landing in D mod p
};

struct AvoidanceOutcome {
    u64 l = 0;
    GroupElement P_dprime;
    u64 orbit_size = 0;  // r0 * n_fiber + 1
    std::vector<PrimeTranscript> per_prime;
    Integer fiber_product = 1;  // prod over S0 of fibre counts
    bool product_inequality = false;  // orbit_size > fiber_product
    u64 fiber_sum = 0;
    bool sum_inequality = false;      // orbit_size > fiber_sum (union bound)
};

// Walks Theta = {Q^l P'} and returns the first orbit element avoiding D at
// every bad place. The pigeonhole inequality is checked and logged first;
// selection itself only fails if no orbit element qualifies.
inline AvoidanceOutcome select_avoiding(const AvoidanceState& state, const SubsetSpec& D) {
    const u64 orbit_size = state.r0 * state.n_fiber + 1;
    AvoidanceOutcome out;
    out.orbit_size = orbit_size;

    GroupElement Q = torus_unit_element(state.spec, state.torus);
    std::vector<GroupElement> orbit;
    orbit.reserve(orbit_size);
    GroupElement cur = state.P_prime;
    for (u64 l = 0; l < orbit_size; ++l) {
        orbit.push_back(cur);
        cur = multiply(Q, cur);
    }

    for (const Integer& pz : state.S0) {
        if (!pz.fits_ulong_p())
            throw budget_error("bad place too large for residue tables: " + to_string(pz),
                               to_string(pz));
        u64 p = pz.get_ui();
        PrimeTranscript tr;
        tr.p = pz;
        tr.order = torus_order_mod(state.torus, p);
        if (tr.order <= orbit_size)
            throw pipeline_violation_error("torus order " + std::to_string(tr.order) + " at p=" +
                                           std::to_string(p) + " does not exceed r0*N+1=" +
                                           std::to_string(orbit_size));
        auto base = reduce_mod(state.P_prime, p);
        auto fc = count_subset_in_fiber_mod(state.spec, D, base.coords, state.torus.d, p);
        tr.fiber_count = fc.count;
        if (tr.fiber_count > state.n_fiber)
            throw pigeonhole_violation_error(
                "fibre count " + std::to_string(tr.fiber_count) + " at p=" + std::to_string(p) +
                " exceeds the declared bound N=" + std::to_string(state.n_fiber));
        std::vector<std::array<u64, 4>> reductions;
        for (u64 l = 0; l < orbit_size; ++l) {
            auto r = reduce_mod(orbit[l], p);
            reductions.push_back(r.coords);
            if (residue_in_subset(D, r)) tr.bad_ls.push_back(l);
        }
        std::sort(reductions.begin(), reductions.end());
        tr.orbit_distinct = static_cast<u64>(
            std::unique(reductions.begin(), reductions.end()) - reductions.begin());
        out.per_prime.push_back(std::move(tr));
    }

    out.fiber_product = 1;
    out.fiber_sum = 0;
    for (const auto& tr : out.per_prime) {
        out.fiber_product *= static_cast<unsigned long>(tr.fiber_count);
        out.fiber_sum += tr.fiber_count;
    }
    out.product_inequality = Integer(static_cast<unsigned long>(orbit_size)) > out.fiber_product;
    out.sum_inequality = orbit_size > out.fiber_sum;

    for (u64 l = 0; l < orbit_size; ++l) {
        bool good = true;
        for (const auto& tr : out.per_prime)
            if (std::binary_search(tr.bad_ls.begin(), tr.bad_ls.end(), l)) {
                good = false;
                break;
            }
        if (good) {
            out.l = l;
            out.P_dprime = orbit[l];
            return out;
        }
    }
    throw pigeonhole_violation_error(
        "no orbit element avoids D at every bad place: wrong N_fiber or r0 "
        "(orbit size " +
        std::to_string(orbit_size) + ")");
}

}  // namespace groupsieve

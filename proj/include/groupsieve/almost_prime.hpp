#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "groupsieve/enumerate.hpp"
#include "groupsieve/errors.hpp"
#include "groupsieve/finite_models.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/polynomial.hpp"
#include "groupsieve/primes.hpp"
#include "groupsieve/sieve.hpp"

namespace groupsieve {

struct SaturationQuery {
    GroupSpec spec;
    RegularFunction f;
    u64 alpha = 1;
    std::vector<u64> S;   // excluded primes
    double beta = 0.5;    // threshold exponent in (0, 1]
    i64 T = 64;           // height bound
    Integer M = 0;        // admitted factors must exceed M (point search)
    unsigned r = 0;       // admitted factor-count bound (point search)
};

struct AlmostPrimeHit {
    GroupElement g;
    Integer value;                // f(g)
    Factorization factorization;  // of |f(g)|
    unsigned outside_count = 0;   // distinct primes outside S and alpha*N
};

namespace detail {

inline bool prime_is_excluded(const Integer& p, const std::vector<u64>& S,
                              const Integer& alphaN) {
    if (p.fits_ulong_p() &&
        std::binary_search(S.begin(), S.end(), static_cast<u64>(p.get_ui())))
        return true;
    return mpz_divisible_p(alphaN.get_mpz_t(), p.get_mpz_t());
}

}  // namespace detail

inline std::optional<Congruence> congruence_id(const GroupSpec& spec, u64 alpha) {
    if (alpha <= 1) return std::nullopt;
    auto id = identity_residue(spec, alpha);
    return Congruence{alpha, id.coords};
}

// theta_fit = max log|f(g)| / log H(g) over the enumerated sample (the
// measured regularity exponent |f(g)| <= T^theta).
inline double measure_theta(const GroupSpec& spec, const RegularFunction& f, u64 alpha,
                            i64 T, const EnumOptions& opts = {}) {
    auto pts = enumerate_ball_raw(BallQuery{spec, T, congruence_id(spec, alpha)}, opts);
    double theta = 0;
    bool seen = false;
    for (const auto& c : pts) {
        i64 h = 0;
        for (i64 v : c) h = std::max(h, v >= 0 ? v : -v);
        if (h < 2) continue;
        std::array<Integer, 4> x{Integer(static_cast<long>(c[0])), Integer(static_cast<long>(c[1])),
                                 Integer(static_cast<long>(c[2])), Integer(static_cast<long>(c[3]))};
        Integer v = f.eval(x);
        if (v == 0) continue;
        if (v < 0) v = -v;
        if (v == 1) continue;
        double logv = std::log(mpz_get_d(v.get_mpz_t()));
        theta = std::max(theta, logv / std::log(static_cast<double>(h)));
        seen = true;
    }
    if (!seen) throw insufficient_data_error("no usable points to measure theta");
    return theta;
}

// r = floor(theta/beta) + 1 (degree-one base field).
inline unsigned report_r_formula(double theta_fit, double beta) {
    if (beta <= 0 || beta > 1) throw error("beta must lie in (0, 1]");
    return static_cast<unsigned>(std::floor(theta_fit / beta)) + 1;
}

struct SaturationResult {
    u64 count = 0;       // survivors of the small-prime test
    u64 X = 0;           // #Gamma_alpha points with H < T
    u64 f_zero_count = 0;  // points with f(g) = 0, excluded and reported
    std::vector<AlmostPrimeHit> sample_hits;  // first few survivors
    double z = 0;        // T^beta
    bool nonconstant_certified = false;  // two sample points with distinct f-values
};

// Exact count of enumerated g in Gamma_alpha, H(g) < T, such that f(g)/N is
// free of primes below T^beta outside S and the divisors of alpha*N.
inline SaturationResult saturation_scan(const SaturationQuery& q, const GcdCertificate& cert,
                                        const EnumOptions& opts = {},
                                        std::size_t max_sample_hits = 16) {
    if (q.beta <= 0 || q.beta > 1) throw error("beta must lie in (0, 1]");
    const double z = std::pow(static_cast<double>(q.T), q.beta);
    if (static_cast<double>(cert.prime_bound) < z)
        throw certification_needed_error(
            "gcd certificate bound " + std::to_string(cert.prime_bound) +
            " is below the sieve level T^beta = " + std::to_string(z));
    const Integer N = cert.N;
    const Integer alphaN = Integer(static_cast<unsigned long>(q.alpha)) * N;
    std::vector<u64> S_sorted = q.S;
    std::sort(S_sorted.begin(), S_sorted.end());

    std::vector<u64> test_primes;
    for (u64 p : primes_below(static_cast<u64>(std::ceil(z))))
        if (static_cast<double>(p) < z && !std::binary_search(S_sorted.begin(), S_sorted.end(), p) &&
            !mpz_divisible_ui_p(alphaN.get_mpz_t(), static_cast<unsigned long>(p)))
            test_primes.push_back(p);

    auto pts = enumerate_ball_raw(BallQuery{q.spec, q.T, congruence_id(q.spec, q.alpha)}, opts);
    SaturationResult res;
    res.X = pts.size();
    res.z = z;
    Integer two_distinct_first;
    bool have_first = false, nonconstant = false;
    for (const auto& c : pts) {
        std::array<Integer, 4> x{Integer(static_cast<long>(c[0])), Integer(static_cast<long>(c[1])),
                                 Integer(static_cast<long>(c[2])), Integer(static_cast<long>(c[3]))};
        Integer v = q.f.eval(x);
        if (!have_first) {
            two_distinct_first = v;
            have_first = true;
        } else if (v != two_distinct_first) {
            nonconstant = true;
        }
        if (v == 0) {
            ++res.f_zero_count;
            continue;
        }
        Integer av = v >= 0 ? v : Integer(-v);
        if (!mpz_divisible_p(av.get_mpz_t(), N.get_mpz_t()))
            throw certification_needed_error("certified gcd does not divide f at a sample point");
        Integer reduced = av / N;
        bool survives = true;
        for (u64 p : test_primes)
            if (mpz_divisible_ui_p(reduced.get_mpz_t(), static_cast<unsigned long>(p))) {
                survives = false;
                break;
            }
        if (!survives) continue;
        ++res.count;
        if (res.sample_hits.size() < max_sample_hits) {
            AlmostPrimeHit hit{make_element_i(q.spec, c[0], c[1], c[2], c[3]), v,
                               factorize(av), 0};
            for (const auto& pf : hit.factorization.factors)
                if (!detail::prime_is_excluded(pf.p, S_sorted, alphaN)) ++hit.outside_count;
            res.sample_hits.push_back(std::move(hit));
        }
    }
    res.nonconstant_certified = nonconstant;
    return res;
}

struct TrendRow {
    i64 T;
    u64 X;
    u64 count;
    double normalized;  // count * (log X)^lambda / X
};

struct TrendTable {
    std::vector<TrendRow> rows;
    double lambda_fit = 0;
    double min_normalized = 0;
};

// Scan across a T-grid and fit count ~ X / (log X)^lambda.
inline TrendTable saturation_trend(SaturationQuery q, const GcdCertificate& cert,
                                   const std::vector<i64>& grid,
                                   const EnumOptions& opts = {}) {
    if (grid.size() < 2) throw insufficient_data_error("trend grid needs >= 2 heights");
    TrendTable table;
    for (i64 T : grid) {
        q.T = T;
        auto res = saturation_scan(q, cert, opts, 0);
        if (res.count == 0 || res.X < 3)
            throw insufficient_data_error("empty sieve count at T=" + std::to_string(T) +
                                          "; trend undefined");
        table.rows.push_back(TrendRow{T, res.X, res.count, 0});
    }
    // least squares: log(X/count) = lambda * log log X + c0
    double su = 0, sy = 0, suu = 0, suy = 0;
    const double n = static_cast<double>(table.rows.size());
    for (const auto& row : table.rows) {
        double u = std::log(std::log(static_cast<double>(row.X)));
        double y = std::log(static_cast<double>(row.X) / static_cast<double>(row.count));
        su += u;
        sy += y;
        suu += u * u;
        suy += u * y;
    }
    double denom = n * suu - su * su;
    table.lambda_fit = std::fabs(denom) > 1e-12 ? (n * suy - su * sy) / denom : 0.0;
    table.min_normalized = 0;
    for (auto& row : table.rows) {
        row.normalized = static_cast<double>(row.count) *
                         std::pow(std::log(static_cast<double>(row.X)), table.lambda_fit) /
                         static_cast<double>(row.X);
        table.min_normalized = table.min_normalized == 0
                                   ? row.normalized
                                   : std::min(table.min_normalized, row.normalized);
    }
    return table;
}

// First (by height, then lexicographic) element of Gamma_alpha matching the
// extra residue constraints whose f-value is nonzero with at most r prime
// factors outside S and alpha*N, all exceeding M. A miss below T_max is a
// retryable budget condition, never a nonexistence claim.
inline AlmostPrimeHit find_almost_prime_point(const SaturationQuery& q,
                                              const std::vector<ResidueElement>& constraints,
                                              const Integer& N, i64 T_max,
                                              const EnumOptions& opts = {}) {
    if (q.r == 0) throw error("declare r >= 1 for the point search");
    if (q.M <= 0) throw error("declare the factor threshold M > 0");
    std::vector<ResidueElement> targets = constraints;
    if (q.alpha > 1) targets.push_back(identity_residue(q.spec, q.alpha));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!residue_satisfies_equation(q.spec, targets[i]))
            throw error("constraint residue is not on the group mod " +
                        std::to_string(targets[i].modulus));
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (gcd_u64(targets[i].modulus, targets[j].modulus) != 1)
                throw error("constraint moduli must be pairwise coprime (and coprime to alpha)");
    }
    std::optional<Congruence> cg;
    if (!targets.empty()) {
        Congruence combined;
        combined.modulus = targets[0].modulus;
        combined.target = targets[0].coords;
        for (std::size_t i = 1; i < targets.size(); ++i) {
            for (int c = 0; c < 4; ++c)
                combined.target[c] = crt_pair_u64(combined.target[c], combined.modulus,
                                                  targets[i].coords[c], targets[i].modulus);
            combined.modulus *= targets[i].modulus;
        }
        cg = combined;
    }
    std::vector<u64> S_sorted = q.S;
    std::sort(S_sorted.begin(), S_sorted.end());
    const Integer alphaN = Integer(static_cast<unsigned long>(q.alpha)) * N;

    auto height_of = [](const Coords4& c) {
        i64 m = 0;
        for (i64 v : c) m = std::max(m, v >= 0 ? v : -v);
        return m;
    };

    i64 scanned_below = 1;
    for (i64 T = 2;; T = std::min(T * 2, T_max)) {
        auto raw = enumerate_ball_raw(BallQuery{q.spec, T, cg}, opts);
        std::sort(raw.begin(), raw.end(), [&](const Coords4& a, const Coords4& b) {
            i64 ha = height_of(a), hb = height_of(b);
            return ha != hb ? ha < hb : a < b;
        });
        for (const auto& c : raw) {
            if (height_of(c) < scanned_below) continue;  // covered in a previous pass
            std::array<Integer, 4> x{Integer(static_cast<long>(c[0])), Integer(static_cast<long>(c[1])),
                                     Integer(static_cast<long>(c[2])),
                                     Integer(static_cast<long>(c[3]))};
            Integer v = q.f.eval(x);
            if (v == 0) continue;
            Integer av = v >= 0 ? v : Integer(-v);
            Factorization fac = factorize(av);
            unsigned outside = 0;
            bool all_large = true;
            for (const auto& pf : fac.factors) {
                if (detail::prime_is_excluded(pf.p, S_sorted, alphaN)) continue;
                ++outside;
                if (pf.p <= q.M) all_large = false;
            }
            if (all_large && outside <= q.r)
                return AlmostPrimeHit{make_element_i(q.spec, c[0], c[1], c[2], c[3]), v,
                                      std::move(fac), outside};
        }
        scanned_below = T;
        if (T >= T_max)
            throw not_found_error(
                "no almost-prime point below the height frontier T_max=" +
                std::to_string(T_max) + " (scanned exhaustively; raise the budget)");
    }
}

}  // namespace groupsieve

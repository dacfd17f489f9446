#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "groupsieve/errors.hpp"
#include "groupsieve/integers.hpp"
#include "groupsieve/parallel.hpp"
#include "groupsieve/primes.hpp"

namespace groupsieve {

// The set of admitted primes: either everything outside a finite excluded
// set, or an explicit finite list.
struct PrimeSet {
    bool complement_mode = true;
    std::vector<u64> primes;  // excluded (complement mode) or admitted

    static PrimeSet all_primes() { return PrimeSet{true, {}}; }
    static PrimeSet all_except(std::vector<u64> excluded) {
        std::sort(excluded.begin(), excluded.end());
        return PrimeSet{true, std::move(excluded)};
    }
    static PrimeSet of(std::vector<u64> admitted) {
        std::sort(admitted.begin(), admitted.end());
        return PrimeSet{false, std::move(admitted)};
    }

    bool contains(u64 p) const {
        bool listed = std::binary_search(primes.begin(), primes.end(), p);
        return complement_mode ? !listed : listed;
    }
};

// Sieve data (A, P, omega, z) of the combinatorial sieve.
struct SieveProblem {
    std::vector<Integer> A;
    PrimeSet P;
    std::map<u64, Rational> omega;
    double z = 2.0;

    u64 X() const { return A.size(); }

    std::vector<u64> admitted_below_z() const {
        std::vector<u64> out;
        if (z <= 2) return out;
        for (u64 p : primes_below(static_cast<u64>(std::ceil(z))))
            if (static_cast<double>(p) < z && P.contains(p)) out.push_back(p);
        return out;
    }

    Rational omega_at(u64 p) const {
        auto it = omega.find(p);
        if (it == omega.end())
            throw insufficient_data_error("omega not recorded at p=" + std::to_string(p));
        return it->second;
    }
};

// Validates the type invariants: positive elements, omega supported on P,
// 0 <= omega(p)/p < 1.
inline SieveProblem make_sieve_problem(std::vector<Integer> A, PrimeSet P,
                                       std::map<u64, Rational> omega, double z) {
    for (const auto& a : A)
        if (a <= 0)
            throw error("sieve elements must be positive (degenerate entries are "
                        "excluded upstream and logged)");
    for (const auto& [p, w] : omega) {
        if (!is_prime_u64(p)) throw error("omega index " + std::to_string(p) + " is not prime");
        if (!P.contains(p) && w != 0)
            throw error("omega(p) must vanish for p outside P (p=" + std::to_string(p) + ")");
        if (w < 0 || w >= Rational(static_cast<unsigned long>(p)))
            throw error("need 0 <= omega(p)/p < 1 at p=" + std::to_string(p));
    }
    return SieveProblem{std::move(A), std::move(P), std::move(omega), z};
}

// ---- sifting --------------------------------------------------------------------

// S(A, P, z) = #{a : gcd(a, P(z)) = 1}, by direct divisibility tests.
inline u64 sift(const SieveProblem& problem, unsigned threads = 1) {
    auto ps = problem.admitted_below_z();
    if (ps.empty()) return problem.X();
    const std::size_t shards = std::max<std::size_t>(
        1, std::min<std::size_t>(threads == 1 ? 1 : 4 * threads, problem.A.size()));
    const std::size_t chunk = (problem.A.size() + shards - 1) / shards;
    std::function<u64(std::size_t)> job = [&](std::size_t s) {
        u64 n = 0;
        const std::size_t lo = s * chunk, hi = std::min(problem.A.size(), lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            bool coprime = true;
            for (u64 p : ps)
                if (mpz_divisible_ui_p(problem.A[i].get_mpz_t(), static_cast<unsigned long>(p))) {
                    coprime = false;
                    break;
                }
            if (coprime) ++n;
        }
        return n;
    };
    auto parts = run_shards<u64>(shards, threads, job);
    u64 total = 0;
    for (u64 n : parts) total += n;
    return total;
}

// Independent oracle: inclusion-exclusion over divisors of P(z). Guarded by
// the size of P(z) so the subset walk stays finite.
inline u64 sift_inclusion_exclusion(const SieveProblem& problem, u64 pz_guard = 1000000) {
    auto ps = problem.admitted_below_z();
    Integer pz = 1;
    for (u64 p : ps) pz *= static_cast<unsigned long>(p);
    if (pz > static_cast<unsigned long>(pz_guard))
        throw budget_error("P(z) exceeds the inclusion-exclusion guard", "P(z)");
    i64 total = 0;
    const u64 subsets = 1ull << ps.size();
    for (u64 mask = 0; mask < subsets; ++mask) {
        u64 d = 1;
        int bits = 0;
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (mask & (1ull << i)) {
                d *= ps[i];
                ++bits;
            }
        i64 count = 0;
        for (const auto& a : problem.A)
            if (mpz_divisible_ui_p(a.get_mpz_t(), static_cast<unsigned long>(d))) ++count;
        total += (bits % 2 == 0) ? count : -count;
    }
    return static_cast<u64>(total);
}

// ---- remainder records ------------------------------------------------------------

struct RemainderRecord {
    u64 d = 1;
    u64 count_Ad = 0;       // #A_d
    Rational main_term;     // omega(d) X / d
    Rational remainder;     // R(d) = #A_d - main term
    unsigned nu = 0;        // number of prime factors of d
    Integer weight;         // 3^nu(d)
};

struct RemainderSummary {
    std::vector<RemainderRecord> records;
    Rational weighted_sum;  // sum of mu^2(d) 3^nu(d) |R(d)|
};

// Records for all squarefree d <= d_max supported on P (d = 1 included).
inline RemainderSummary remainders(const SieveProblem& problem, u64 d_max,
                                   unsigned threads = 1) {
    if (d_max < 2) throw error("remainders: need d_max >= 2");
    auto spf = spf_table(d_max);
    std::vector<u64> ds;
    for (u64 d = 1; d <= d_max; ++d) {
        auto info = squarefree_split(d, spf);
        if (!info.squarefree) continue;
        bool supported = true;
        for (u64 p : info.primes)
            if (!problem.P.contains(p)) {
                supported = false;
                break;
            }
        if (supported) ds.push_back(d);
    }
    const Integer X(static_cast<unsigned long>(problem.X()));
    std::function<RemainderRecord(std::size_t)> job = [&](std::size_t i) {
        const u64 d = ds[i];
        RemainderRecord rec;
        rec.d = d;
        for (const auto& a : problem.A)
            if (mpz_divisible_ui_p(a.get_mpz_t(), static_cast<unsigned long>(d))) ++rec.count_Ad;
        Rational omega_d = 1;
        auto info = squarefree_split(d, spf);
        rec.nu = static_cast<unsigned>(info.primes.size());
        for (u64 p : info.primes) omega_d *= problem.omega_at(p);
        rec.main_term = omega_d * Rational(X, Integer(static_cast<unsigned long>(d)));
        rec.main_term.canonicalize();
        rec.remainder = Rational(static_cast<unsigned long>(rec.count_Ad)) - rec.main_term;
        rec.remainder.canonicalize();
        rec.weight = 1;
        for (unsigned k = 0; k < rec.nu; ++k) rec.weight *= 3;
        return rec;
    };
    RemainderSummary out;
    out.records = run_shards<RemainderRecord>(ds.size(), threads, job);
    out.weighted_sum = 0;
    for (const auto& rec : out.records) {
        Rational absr = rec.remainder >= 0 ? rec.remainder : Rational(-rec.remainder);
        out.weighted_sum += Rational(rec.weight) * absr;
    }
    out.weighted_sum.canonicalize();
    return out;
}

// ---- condition verification ----------------------------------------------------------

struct SieveFitParams {
    Rational c = Rational(1, 2);  // condition (1) bound
    double kappa = 1.0;           // condition (2) dimension
    double A0 = 2.0;              // condition (2) additive constant
    double tau = 1.0;             // condition (3) level exponent
    double A1 = 1.0;              // condition (3) log power
    double A2 = 2.0;              // condition (3) constant
};

struct SieveConditionReport {
    SieveFitParams params;
    bool cond1_pass = false;
    std::vector<u64> cond1_violations;  // witnessing primes
    bool cond2_pass = false;
    std::vector<std::pair<double, double>> cond2_violations;  // (z1, excess sum)
    bool cond3_pass = false;
    double cond3_level = 0;    // X^tau (log X)^{-A1}
    double cond3_sum = 0;      // weighted remainder sum below the level
    double cond3_bound = 0;    // A2 X / (log X)^{kappa+1}
    bool all_pass() const { return cond1_pass && cond2_pass && cond3_pass; }
};

// Verifies the three sieve hypotheses literally on the recorded data.
// Failures are report content, not errors.
inline SieveConditionReport check_conditions(const SieveProblem& problem,
                                             const SieveFitParams& params,
                                             unsigned threads = 1) {
    SieveConditionReport rep;
    rep.params = params;
    auto ps = problem.admitted_below_z();

    rep.cond1_pass = true;
    for (u64 p : ps) {
        Rational ratio = problem.omega_at(p) / Rational(static_cast<unsigned long>(p));
        if (!(ratio >= 0 && ratio < params.c)) {
            rep.cond1_pass = false;
            rep.cond1_violations.push_back(p);
        }
    }

    // condition (2) over every pair 2 <= z1 <= z on the prime grid
    rep.cond2_pass = true;
    std::vector<double> grid{2.0};
    for (u64 p : ps) grid.push_back(static_cast<double>(p));
    for (double z1 : grid) {
        double sum = 0;
        for (u64 p : ps) {
            if (static_cast<double>(p) < z1) continue;
            Rational w = problem.omega_at(p);
            sum += mpq_get_d(w.get_mpq_t()) * std::log(static_cast<double>(p)) /
                   static_cast<double>(p);
        }
        double bound = params.kappa * std::log(problem.z / z1) + params.A0;
        if (sum > bound + 1e-12) {
            rep.cond2_pass = false;
            rep.cond2_violations.push_back({z1, sum - bound});
        }
    }

    const double X = static_cast<double>(problem.X());
    if (X < 3) {
        // degenerate data: the level is below 2, the sum is empty
        rep.cond3_level = 0;
        rep.cond3_sum = 0;
        rep.cond3_bound = 0;
        rep.cond3_pass = true;
        return rep;
    }
    rep.cond3_level = std::pow(X, params.tau) * std::pow(std::log(X), -params.A1);
    rep.cond3_bound = params.A2 * X / std::pow(std::log(X), params.kappa + 1.0);
    u64 d_max = rep.cond3_level <= 2 ? 0 : static_cast<u64>(std::floor(rep.cond3_level));
    if (d_max >= 2) {
        auto rem = remainders(problem, d_max, threads);
        Rational sum = 0;
        for (const auto& rec : rem.records) {
            if (static_cast<double>(rec.d) >= rep.cond3_level) continue;
            Rational absr = rec.remainder >= 0 ? rec.remainder : Rational(-rec.remainder);
            sum += Rational(rec.weight) * absr;
        }
        rep.cond3_sum = mpq_get_d(sum.get_mpq_t());
    }
    rep.cond3_pass = rep.cond3_sum <= rep.cond3_bound + 1e-12;
    return rep;
}

// ---- lower-bound report ----------------------------------------------------------------

struct LowerBoundReport {
    u64 S = 0;
    Rational main_product;     // X * prod (1 - omega(p)/p)
    double ratio = 0;          // S / main product: the empirical implied constant
    std::optional<bool> z_admissible;  // z^2 <= X^tau (log X)^{-A1}, when params given
};

inline LowerBoundReport lower_bound_report(const SieveProblem& problem,
                                           std::optional<SieveFitParams> params = std::nullopt,
                                           unsigned threads = 1) {
    LowerBoundReport rep;
    rep.S = sift(problem, threads);
    rep.main_product = Rational(static_cast<unsigned long>(problem.X()));
    for (u64 p : problem.admitted_below_z()) {
        Rational factor =
            Rational(1) - problem.omega_at(p) / Rational(static_cast<unsigned long>(p));
        rep.main_product *= factor;
    }
    rep.main_product.canonicalize();
    double denom = mpq_get_d(rep.main_product.get_mpq_t());
    rep.ratio = denom > 0 ? static_cast<double>(rep.S) / denom : 0.0;
    if (params) {
        const double X = static_cast<double>(problem.X());
        double level = X >= 3 ? std::pow(X, params->tau) * std::pow(std::log(X), -params->A1)
                              : 0.0;
        rep.z_admissible = problem.z * problem.z <= level;
    }
    return rep;
}

}  // namespace groupsieve

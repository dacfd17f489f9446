#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "groupsieve/enumerate.hpp"
#include "groupsieve/errors.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/integers.hpp"
#include "groupsieve/parallel.hpp"
#include "groupsieve/polynomial.hpp"
#include "groupsieve/primes.hpp"

namespace groupsieve {

namespace detail {

constexpr u64 kStreamModulusGuard = 4096;   // m^3 inner loop
constexpr u64 kConvolutionGuard = 65536;    // m^2 tables

// Streams every solution of the defining equation mod m, coordinates in
// [0, m). Order is unspecified; callers sort if they materialize. The
// callback returns false to stop the stream early.
template <class Emit>
void for_each_group_point_mod(const GroupSpec& spec, u64 m, Emit&& emit) {
    if (m == 0) throw invalid_modulus_error("modulus must be >= 1");
    if (m > kStreamModulusGuard)
        throw budget_error("residue enumeration needs m <= " +
                               std::to_string(kStreamModulusGuard) + ", got " +
                               std::to_string(m),
                           std::to_string(m));
    if (m == 1) {
        emit(std::array<u64, 4>{0, 0, 0, 0});
        return;
    }
    if (spec.model == GroupModel::Sl2) {
        // c1*c4 == 1 + c2*c3: per c1 solve the linear congruence in c4
        std::vector<u64> g(m), inv(m), step(m);
        for (u64 c1 = 0; c1 < m; ++c1) {
            g[c1] = gcd_u64(c1, m);
            step[c1] = m / g[c1];
            inv[c1] = (step[c1] == 1) ? 0 : invmod_u64((c1 / g[c1]) % step[c1], step[c1]);
        }
        for (u64 c2 = 0; c2 < m; ++c2)
            for (u64 c3 = 0; c3 < m; ++c3) {
                u64 rhs = (1 + mulmod_u64(c2, c3, m)) % m;
                for (u64 c1 = 0; c1 < m; ++c1) {
                    if (rhs % g[c1] != 0) continue;
                    u64 base = (step[c1] == 1)
                                   ? 0
                                   : mulmod_u64((rhs / g[c1]) % step[c1], inv[c1], step[c1]);
                    for (u64 t = 0; t < g[c1]; ++t)
                        if (!emit(std::array<u64, 4>{c1, c2, c3, base + t * step[c1]}))
                            return;
                }
            }
    } else {
        // x^2 == 1 + a y^2 + b z^2 - ab w^2: square-root table on x
        std::vector<std::vector<u64>> roots(m);
        for (u64 x = 0; x < m; ++x) roots[mulmod_u64(x, x, m)].push_back(x);
        const i64 a = spec.quat_a, b = spec.quat_b;
        std::vector<u64> ay2(m), bz2(m), cw2(m);
        for (u64 v = 0; v < m; ++v) {
            u64 v2 = mulmod_u64(v, v, m);
            ay2[v] = mod_i128(static_cast<i128>(a) * v2, m);
            bz2[v] = mod_i128(static_cast<i128>(b) * v2, m);
            cw2[v] = mod_i128(-static_cast<i128>(a) * b * v2, m);
        }
        for (u64 y = 0; y < m; ++y)
            for (u64 z = 0; z < m; ++z) {
                u64 base = (1 + ay2[y] + bz2[z]) % m;
                for (u64 w = 0; w < m; ++w) {
                    u64 t = (base + cw2[w]) % m;
                    for (u64 x : roots[t])
                        if (!emit(std::array<u64, 4>{x, y, z, w})) return;
                }
            }
    }
}

}  // namespace detail

// #G(Z/m) without materializing: split the equation into two binary parts
// and convolve their value distributions. O(m^2).
inline Integer count_group_mod(const GroupSpec& spec, u64 m) {
    if (m == 0) throw invalid_modulus_error("modulus must be >= 1");
    if (m == 1) return 1;
    if (m > detail::kConvolutionGuard)
        throw budget_error("group counting needs m <= " +
                               std::to_string(detail::kConvolutionGuard),
                           std::to_string(m));
    std::vector<u64> A(m, 0), B(m, 0);
    if (spec.model == GroupModel::Sl2) {
        for (u64 u = 0; u < m; ++u)
            for (u64 v = 0; v < m; ++v) ++A[mulmod_u64(u, v, m)];
        B = A;  // products c2*c3 have the same distribution
        Integer total = 0;
        for (u64 s = 0; s < m; ++s)
            total += Integer(static_cast<unsigned long>(A[(1 + s) % m])) *
                     static_cast<unsigned long>(B[s]);
        return total;
    }
    const i64 a = spec.quat_a, b = spec.quat_b;
    for (u64 x = 0; x < m; ++x)
        for (u64 y = 0; y < m; ++y) {
            u64 t = mod_i128(static_cast<i128>(x) * x - static_cast<i128>(a) * y * y, m);
            ++A[t];
        }
    for (u64 z = 0; z < m; ++z)
        for (u64 w = 0; w < m; ++w) {
            u64 t = mod_i128(-static_cast<i128>(b) * z * z +
                                 static_cast<i128>(a) * b * w * w,
                             m);
            ++B[t];
        }
    Integer total = 0;
    for (u64 t = 0; t < m; ++t)
        total += Integer(static_cast<unsigned long>(A[t])) *
                 static_cast<unsigned long>(B[(1 + m - t) % m]);
    return total;
}

// ---- materialized reductions ---------------------------------------------------

// Exhaustive quadruple scan; the oracle for the solved/CRT path. d <= 16.
inline std::vector<ResidueElement> reduce_group_scan(const GroupSpec& spec, u64 d) {
    if (d > 16) throw budget_error("scan oracle limited to d <= 16", std::to_string(d));
    std::vector<ResidueElement> out;
    std::array<u64, 4> c;
    for (c[0] = 0; c[0] < d; ++c[0])
        for (c[1] = 0; c[1] < d; ++c[1])
            for (c[2] = 0; c[2] < d; ++c[2])
                for (c[3] = 0; c[3] < d; ++c[3]) {
                    ResidueElement r{d, c};
                    if (residue_satisfies_equation(spec, r)) out.push_back(r);
                }
    return out;
}

// Full solution set of the defining equation mod d, sorted. Direct scan for
// d <= 13; otherwise solved per prime power and assembled by CRT.
inline std::vector<ResidueElement> reduce_group(const GroupSpec& spec, u64 d,
                                                u64 max_elements = 4000000) {
    if (d == 0) throw invalid_modulus_error("modulus must be >= 1");
    if (d == 1) return {ResidueElement{1, {0, 0, 0, 0}}};
    std::vector<ResidueElement> acc;
    if (d <= 13) {
        acc = reduce_group_scan(spec, d);
    } else {
        auto pps = prime_power_split_u64(d);
        bool first = true;
        for (const auto& pp : pps) {
            std::vector<ResidueElement> layer;
            detail::for_each_group_point_mod(spec, pp.q, [&](const std::array<u64, 4>& c) {
                layer.push_back(ResidueElement{pp.q, c});
                if (layer.size() > max_elements)
                    throw budget_error("reduction mod " + std::to_string(d) +
                                           " exceeds the element budget",
                                       std::to_string(d));
                return true;
            });
            if (first) {
                acc = std::move(layer);
                first = false;
                continue;
            }
            if (acc.size() * layer.size() > max_elements)
                throw budget_error("reduction mod " + std::to_string(d) +
                                       " exceeds the element budget",
                                   std::to_string(d));
            std::vector<ResidueElement> combined;
            combined.reserve(acc.size() * layer.size());
            const u64 m1 = acc.empty() ? 1 : acc[0].modulus;
            for (const auto& x : acc)
                for (const auto& y : layer) {
                    ResidueElement r;
                    r.modulus = m1 * pp.q;
                    for (int i = 0; i < 4; ++i)
                        r.coords[i] = crt_pair_u64(x.coords[i], m1, y.coords[i], pp.q);
                    combined.push_back(r);
                }
            acc = std::move(combined);
        }
    }
    std::sort(acc.begin(), acc.end());
    return acc;
}

// The reduction of the principal congruence subgroup of level alpha mod m:
// solutions mod m congruent to the identity mod p^min(v_p(m), v_p(alpha)).
// (Surjectivity of integral reduction backs this; it is itself probed by
// reduction_cover_height below.)
inline u64 congruence_filter_modulus(u64 alpha, u64 m) {
    u64 r = 1;
    for (const auto& pp : prime_power_split_u64(m)) {
        unsigned va = 0;
        u64 rest = alpha;
        while (rest % pp.p == 0) {
            rest /= pp.p;
            ++va;
        }
        unsigned e = std::min(va, pp.e);
        for (unsigned i = 0; i < e; ++i) r *= pp.p;
    }
    return r;
}

inline bool residue_in_congruence_class(const GroupSpec& spec, const ResidueElement& x,
                                        u64 r) {
    if (r == 1) return true;
    auto id = identity_residue(spec, r);
    for (int i = 0; i < 4; ++i)
        if (x.coords[i] % r != id.coords[i]) return false;
    return true;
}

inline std::vector<ResidueElement> reduce_congruence_subgroup(const GroupSpec& spec,
                                                              u64 alpha, u64 m,
                                                              u64 max_elements = 4000000) {
    u64 r = congruence_filter_modulus(alpha, m);
    auto all = reduce_group(spec, m, max_elements);
    if (r == 1) return all;
    std::vector<ResidueElement> out;
    for (const auto& x : all)
        if (residue_in_congruence_class(spec, x, r)) out.push_back(x);
    return out;
}

// ---- streamed counting (production path for densities) -------------------------

struct FiberCounts {
    Integer group;  // # Gamma_alpha[m]
    Integer fiber;  // # Gamma_alpha^f[m]
};

// Direct single-modulus stream; the test oracle for the CRT-assembled path.
inline FiberCounts count_congruence_fiber_direct(const GroupSpec& spec, u64 alpha,
                                                 const std::optional<RegularFunction>& f,
                                                 u64 m) {
    u64 r = congruence_filter_modulus(alpha, m);
    auto id = identity_residue(spec, std::max<u64>(r, 1));
    std::optional<RegularFunction::ModEvaluator> ev;
    if (f) ev = f->evaluator_mod(m);
    FiberCounts counts{0, 0};
    detail::for_each_group_point_mod(spec, m, [&](const std::array<u64, 4>& c) {
        if (r > 1)
            for (int i = 0; i < 4; ++i)
                if (c[i] % r != id.coords[i]) return true;
        counts.group += 1;
        if (ev && (*ev)(c) == 0) counts.fiber += 1;
        return true;
    });
    return counts;
}

// CRT-assembled counts: both the congruence condition and f == 0 mod m split
// over prime powers, so the counts multiply.
inline FiberCounts count_congruence_fiber(const GroupSpec& spec, u64 alpha,
                                          const std::optional<RegularFunction>& f, u64 m,
                                          unsigned threads = 1) {
    if (m == 0) throw invalid_modulus_error("modulus must be >= 1");
    if (m == 1) return {1, 1};  // everything vanishes mod 1
    auto pps = prime_power_split_u64(m);
    std::function<FiberCounts(std::size_t)> job = [&](std::size_t i) {
        return count_congruence_fiber_direct(spec, alpha, f, pps[i].q);
    };
    auto parts = run_shards<FiberCounts>(pps.size(), threads, job);
    FiberCounts total{1, 1};
    for (const auto& part : parts) {
        total.group *= part.group;
        total.fiber *= part.fiber;
    }
    return total;
}

// ---- reduce_group / fiber operations (spec surface) -----------------------------

struct ReductionResult {
    std::vector<ResidueElement> elements;
    Integer cardinality;
};

inline ReductionResult reduce_group_with_count(const GroupSpec& spec, u64 d,
                                               u64 max_elements = 4000000) {
    ReductionResult res;
    res.elements = reduce_group(spec, d, max_elements);
    res.cardinality = static_cast<unsigned long>(res.elements.size());
    return res;
}

// Gamma^f[d]: the subset of the reduction where f vanishes mod d.
inline std::vector<ResidueElement> fiber_zero_locus(const GroupSpec& spec,
                                                    const RegularFunction& f, u64 d,
                                                    u64 max_elements = 4000000) {
    auto ev = f.evaluator_mod(d);
    std::vector<ResidueElement> out;
    for (const auto& x : reduce_group(spec, d, max_elements))
        if (ev(x.coords) == 0) out.push_back(x);
    return out;
}

// ---- Hensel check ----------------------------------------------------------------

struct HenselReport {
    u64 p = 0;
    unsigned m = 1;
    Integer count_p;
    Integer count_pm;
    Integer expected;  // count_p * p^{3(m-1)}
    bool pass = false;
};

// #G(Z/p^m) ?= #G(F_p) * p^{3(m-1)} (relative dimension 3).
inline HenselReport hensel_check(const GroupSpec& spec, u64 p, unsigned m) {
    if (!is_prime_u64(p)) throw error("hensel_check: p must be prime");
    if (m < 1) throw error("hensel_check: need m >= 1");
    if (!spec.good_reduction_at(p))
        throw bad_reduction_error("p=" + std::to_string(p) +
                                  " divides 2ab: declared bad reduction for " +
                                  spec.describe());
    HenselReport rep;
    rep.p = p;
    rep.m = m;
    u64 pm = 1;
    for (unsigned i = 0; i < m; ++i) pm *= p;
    rep.count_p = count_group_mod(spec, p);
    rep.count_pm = count_group_mod(spec, pm);
    rep.expected = rep.count_p;
    for (unsigned i = 0; i < 3 * (m - 1); ++i) rep.expected *= p;
    rep.pass = rep.count_pm == rep.expected;
    return rep;
}

// ---- gcd certification -------------------------------------------------------------

struct GcdWitness {
    u64 q;                        // prime power with q not dividing N
    std::array<u64, 4> point;     // residue point of Gamma_alpha[q]
    u64 value_mod_q;              // f at the point, nonzero mod q
};

struct GcdCertificate {
    Integer N = 0;
    i64 height_bound = 0;
    u64 sample_size = 0;
    u64 prime_bound = 0;  // B: prime powers <= B are certified
    std::vector<GcdWitness> witnesses;
};

// N = gcd of f over the enumerated congruence ball, cross-certified: for
// every prime p <= B the first power p^e with p^e not dividing N gets a
// residue witness with f != 0 mod p^e, so the true gcd and N agree on all
// prime powers <= B.
inline GcdCertificate certify_gcd(const GroupSpec& spec, const RegularFunction& f,
                                  u64 alpha, i64 height_bound, u64 prime_bound,
                                  const EnumOptions& opts = {}) {
    Congruence cg;
    cg.modulus = alpha;
    auto id = identity_residue(spec, alpha);
    cg.target = id.coords;
    auto pts = enumerate_ball_raw(BallQuery{spec, height_bound, alpha > 1 ? std::optional(cg) : std::nullopt},
                                  opts);
    if (pts.empty()) throw error("certify_gcd: empty sample (raise the height bound)");
    if (pts.size() < 100)
        throw error("certify_gcd: need at least 100 sample points, got " +
                    std::to_string(pts.size()));
    GcdCertificate cert;
    cert.height_bound = height_bound;
    cert.sample_size = pts.size();
    cert.prime_bound = prime_bound;
    for (const auto& c : pts) {
        std::array<Integer, 4> coords{Integer(static_cast<long>(c[0])), Integer(static_cast<long>(c[1])),
                                      Integer(static_cast<long>(c[2])), Integer(static_cast<long>(c[3]))};
        Integer v = f.eval(coords);
        if (v < 0) v = -v;
        mpz_gcd(cert.N.get_mpz_t(), cert.N.get_mpz_t(), v.get_mpz_t());
        if (cert.N == 1) break;
    }
    if (cert.N == 0)
        throw error("certify_gcd: f vanishes on the entire sample; gcd undefined");

    for (u64 p : primes_below(prime_bound + 1)) {
        // first power of p beyond the p-part of N
        u64 q = p;
        Integer rem = cert.N;
        while (mpz_divisible_ui_p(rem.get_mpz_t(), static_cast<unsigned long>(p))) {
            rem /= static_cast<unsigned long>(p);
            if (q > prime_bound / p) {
                q = 0;  // q would exceed B; nothing to certify for this p
                break;
            }
            q *= p;
        }
        if (q == 0 || q > prime_bound) continue;
        u64 r = congruence_filter_modulus(alpha, q);
        auto idq = identity_residue(spec, std::max<u64>(r, 1));
        auto ev = f.evaluator_mod(q);
        bool found = false;
        GcdWitness w;
        try {
            detail::for_each_group_point_mod(spec, q, [&](const std::array<u64, 4>& c) {
                if (r > 1)
                    for (int i = 0; i < 4; ++i)
                        if (c[i] % r != idq.coords[i]) return true;
                u64 v = ev(c);
                if (v != 0) {
                    w = GcdWitness{q, c, v};
                    found = true;
                    return false;
                }
                return true;
            });
        } catch (const budget_error&) {
            throw certification_needed_error(
                "gcd certification at q=" + std::to_string(q) + " exceeds the residue budget");
        }
        if (!found)
            throw certification_needed_error(
                "no residue witness at q=" + std::to_string(q) +
                ": sampled gcd is too small or the sample is unrepresentative");
        cert.witnesses.push_back(w);
    }
    return cert;
}

// ---- local densities ----------------------------------------------------------------

struct LocalDensityRow {
    u64 d = 1;
    Integer count_group;  // # Gamma_alpha[dN]
    Integer count_fiber;  // # Gamma_alpha^f[dN]
    Rational rho;         // d * fiber / group, or 0 by convention
};

class LocalDensityTable {
  public:
    LocalDensityTable(GroupSpec spec, RegularFunction f, u64 alpha, GcdCertificate cert,
                      unsigned threads = 1)
        : spec_(std::move(spec)),
          f_(std::move(f)),
          alpha_(alpha),
          cert_(std::move(cert)),
          threads_(threads) {
        if (!cert_.N.fits_ulong_p())
            throw error("certified gcd too large for the density table");
        N_ = cert_.N.get_ui();
    }

    const GcdCertificate& gcd_certificate() const { return cert_; }
    u64 N() const { return N_; }
    u64 alpha() const { return alpha_; }
    const GroupSpec& spec() const { return spec_; }
    const RegularFunction& f() const { return f_; }

    // rho_f(d) = d * #Gamma_alpha^f[dN] / #Gamma_alpha[dN] for d coprime to
    // N*alpha, else 0. Requires certification of N up to d (prime powers of
    // d beyond the certificate bound raise certification_needed_error).
    const LocalDensityRow& row(u64 d) {
        auto it = rows_.find(d);
        if (it != rows_.end()) return it->second;
        LocalDensityRow r;
        r.d = d;
        u64 coprime_to = N_ * alpha_;
        if (d == 0) throw invalid_modulus_error("density index must be >= 1");
        if (gcd_u64(d, coprime_to) != 1) {
            r.count_group = 0;
            r.count_fiber = 0;
            r.rho = 0;
        } else {
            for (const auto& pp : prime_power_split_u64(d))
                if (pp.q > cert_.prime_bound)
                    throw certification_needed_error(
                        "N certified only up to " + std::to_string(cert_.prime_bound) +
                        "; density at d=" + std::to_string(d) + " needs more");
            auto counts = count_congruence_fiber(spec_, alpha_, f_, d * N_, threads_);
            r.count_group = counts.group;
            r.count_fiber = counts.fiber;
            r.rho = Rational(Integer(static_cast<unsigned long>(d)) * counts.fiber,
                             counts.group);
            r.rho.canonicalize();
        }
        return rows_.emplace(d, std::move(r)).first->second;
    }

    Rational rho(u64 d) { return row(d).rho; }

  private:
    GroupSpec spec_;
    RegularFunction f_;
    u64 alpha_;
    GcdCertificate cert_;
    unsigned threads_;
    u64 N_ = 1;
    std::map<u64, LocalDensityRow> rows_;
};

// ---- Lang-Weil empirics ----------------------------------------------------------------

struct LangWeilRow {
    u64 p;
    Integer count_V;      // # (f = 0) on G(F_p)
    Integer count_G;      // # G(F_p)
    Rational c_point;     // count_V / p^2 (dim V = 2)
    Rational rho_scaled;  // p * count_V / count_G
};

struct LangWeilReport {
    std::vector<LangWeilRow> rows;
    Rational max_c_point = 0;
    // admissible constant: max of both columns, so it dominates the point
    // counts and the normalized densities on the observed range
    Rational empirical_C = 0;
};

inline LangWeilReport langweil_report(const GroupSpec& spec, const RegularFunction& f,
                                      const std::vector<u64>& primes, unsigned threads = 1) {
    for (u64 p : primes) {
        if (!is_prime_u64(p)) throw error("langweil_report: " + std::to_string(p) + " is not prime");
        if (!spec.good_reduction_at(p))
            throw bad_reduction_error("langweil_report: p=" + std::to_string(p) +
                                      " is a bad-reduction prime for " + spec.describe());
    }
    std::function<LangWeilRow(std::size_t)> job = [&](std::size_t i) {
        u64 p = primes[i];
        auto counts = count_congruence_fiber_direct(spec, 1, f, p);
        LangWeilRow row{p, counts.fiber, counts.group, Rational(0), Rational(0)};
        row.c_point = Rational(counts.fiber, Integer(static_cast<unsigned long>(p)) *
                                                 static_cast<unsigned long>(p));
        row.c_point.canonicalize();
        row.rho_scaled = Rational(Integer(static_cast<unsigned long>(p)) * counts.fiber,
                                  counts.group);
        row.rho_scaled.canonicalize();
        return row;
    };
    auto rows = run_shards<LangWeilRow>(primes.size(), threads, job);
    LangWeilReport rep;
    rep.rows = std::move(rows);
    for (const auto& r : rep.rows) {
        if (r.c_point > rep.max_c_point) rep.max_c_point = r.c_point;
        if (r.c_point > rep.empirical_C) rep.empirical_C = r.c_point;
        if (r.rho_scaled > rep.empirical_C) rep.empirical_C = r.rho_scaled;
    }
    return rep;
}

// ---- surjectivity probe -----------------------------------------------------------------

// Smallest probed T (doubling) at which the height-< T ball covers every
// residue of reduce_group(d). Strong approximation promises coverage for
// large T; failure up to T_cap is a budget error, never a nonexistence claim.
inline i64 reduction_cover_height(const GroupSpec& spec, u64 d, i64 T_cap,
                                  const EnumOptions& opts = {}) {
    auto all = reduce_group(spec, d);
    std::vector<u64> keys;
    keys.reserve(all.size());
    for (const auto& r : all) keys.push_back(r.pack());
    std::sort(keys.begin(), keys.end());
    for (i64 T = 2;; T = std::min(T * 2, T_cap)) {
        auto pts = enumerate_ball_raw(BallQuery{spec, T, std::nullopt}, opts);
        std::vector<char> hit(keys.size(), 0);
        for (const auto& c : pts) {
            ResidueElement r;
            r.modulus = d;
            for (int i = 0; i < 4; ++i) {
                i64 v = c[i] % static_cast<i64>(d);
                if (v < 0) v += static_cast<i64>(d);
                r.coords[i] = static_cast<u64>(v);
            }
            auto it = std::lower_bound(keys.begin(), keys.end(), r.pack());
            if (it != keys.end() && *it == r.pack()) hit[it - keys.begin()] = 1;
        }
        if (std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; })) return T;
        if (T >= T_cap)
            throw budget_error("ball of height " + std::to_string(T_cap) +
                                   " does not cover the reduction mod " + std::to_string(d),
                               std::to_string(d));
    }
}

}  // namespace groupsieve

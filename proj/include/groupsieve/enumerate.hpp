#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "groupsieve/errors.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/integers.hpp"
#include "groupsieve/parallel.hpp"

namespace groupsieve {

using Coords4 = std::array<i64, 4>;

struct Congruence {
    u64 modulus = 1;
    std::array<u64, 4> target{0, 0, 0, 0};
};

struct BallQuery {
    GroupSpec spec;
    i64 T = 1;  // strict height bound
    std::optional<Congruence> congruence;
};

struct EnumOptions {
    unsigned threads = 1;
    u64 max_points = ~0ull;  // emission budget
    i64 max_T = 1 << 13;     // guard for the coordinate solvers
};

// Budget breach: carries the elements of the completed leading-coordinate
// sub-range [completed_lo, completed_hi).
struct partial_result_error : budget_error {
    std::vector<Coords4> partial;
    i64 completed_lo = 0, completed_hi = 0;
    partial_result_error(const std::string& what, std::vector<Coords4> done, i64 lo, i64 hi)
        : budget_error(what, "max_points"),
          partial(std::move(done)),
          completed_lo(lo),
          completed_hi(hi) {}
};

namespace detail {

inline i64 floor_div(i64 a, i64 b) {
    i64 q = a / b, r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}
inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

// k-range with |base + k*step| <= L (step != 0); false if empty.
inline bool k_interval(i64 base, i64 step, i64 L, i64& klo, i64& khi) {
    if (step < 0) {
        base = -base;
        step = -step;
    }
    klo = ceil_div(-L - base, step);
    khi = floor_div(L - base, step);
    return klo <= khi;
}

inline bool congruence_matches(const Coords4& c, const Congruence& cg) {
    for (int i = 0; i < 4; ++i) {
        i64 r = c[i] % static_cast<i64>(cg.modulus);
        if (r < 0) r += static_cast<i64>(cg.modulus);
        if (static_cast<u64>(r) != cg.target[i] % cg.modulus) return false;
    }
    return true;
}

// Stream SL2 solutions with c1 in [lo, hi), |coords| <= T-1.
template <class Emit>
void scan_sl2_range(i64 T, i64 lo, i64 hi, Emit&& emit) {
    const i64 L = T - 1;
    for (i64 c1 = lo; c1 < hi; ++c1) {
        for (i64 c2 = -L; c2 <= L; ++c2) {
            if (c1 == 0) {
                // -c2*c3 = 1
                if (c2 == 1 || c2 == -1) {
                    i64 c3 = -c2;
                    for (i64 c4 = -L; c4 <= L; ++c4) emit(Coords4{c1, c2, c3, c4});
                }
                continue;
            }
            i64 x, y;
            if (ext_gcd_i64(c1, c2, x, y) != 1) continue;
            // base: c4 = x, c3 = -y; family: c4 += k*c2, c3 += k*c1
            i64 klo = 0, khi = -1, k2lo = 0, k2hi = -1;
            if (!k_interval(-y, c1, L, klo, khi)) continue;
            if (c2 != 0) {
                if (!k_interval(x, c2, L, k2lo, k2hi)) continue;
                klo = std::max(klo, k2lo);
                khi = std::min(khi, k2hi);
            } else if (std::abs(x) > L) {
                continue;
            }
            for (i64 k = klo; k <= khi; ++k)
                emit(Coords4{c1, c2, -y + k * c1, x + k * c2});
        }
    }
}

struct QuatLoopPlan {
    int i1, i2, i3;      // coordinate indices (1..3) of prune/outer/outer vars
    i64 k1, k2, k3;      // their coefficients in 1 + k1 v1^2 + k2 v2^2 + k3 v3^2
};

inline QuatLoopPlan quat_plan(const GroupSpec& spec) {
    const i64 a = spec.quat_a, b = spec.quat_b, c = -static_cast<i64>(spec.quat_a) * spec.quat_b;
    if (a > 0) return {1, 2, 3, a, b, c};
    if (b > 0) return {2, 1, 3, b, a, c};
    return {3, 1, 2, c, a, b};  // a<0, b<0 is rejected by validate_spec
}

// Stream quaternion norm-one solutions with the outer coordinate v3 in
// [lo, hi); solves x^2 = 1 + k1 v1^2 + k2 v2^2 + k3 v3^2 over the pruned v1.
template <class Emit>
void scan_quat_range(const GroupSpec& spec, i64 T, i64 lo, i64 hi, Emit&& emit) {
    const i64 L = T - 1;
    const auto plan = quat_plan(spec);
    const i64 L2 = L * L;
    for (i64 v3 = lo; v3 < hi; ++v3) {
        for (i64 v2 = -L; v2 <= L; ++v2) {
            const i64 C = 1 + plan.k2 * v2 * v2 + plan.k3 * v3 * v3;
            if (L2 - C < 0) continue;
            const i64 sq_hi = (L2 - C) / plan.k1;
            if (sq_hi < 0) continue;
            i64 sq_lo = 0;
            if (C < 0) sq_lo = ceil_div(-C, plan.k1);
            if (sq_lo > sq_hi) continue;
            const i64 v1_hi = isqrt_i64(sq_hi);
            i64 v1_lo = isqrt_i64(sq_lo);
            if (v1_lo * v1_lo < sq_lo) ++v1_lo;
            for (i64 v1a = v1_lo; v1a <= v1_hi; ++v1a) {
                for (int sgn = 0; sgn < (v1a == 0 ? 1 : 2); ++sgn) {
                    const i64 v1 = sgn == 0 ? v1a : -v1a;
                    const i64 t = C + plan.k1 * v1 * v1;
                    i64 x;
                    if (!is_square_i64(t, x)) continue;
                    Coords4 coords{0, 0, 0, 0};
                    coords[plan.i1] = v1;
                    coords[plan.i2] = v2;
                    coords[plan.i3] = v3;
                    coords[0] = x;
                    emit(coords);
                    if (x != 0) {
                        coords[0] = -x;
                        emit(coords);
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Exhaustive scan oracle: plain quadruple loop with the defining-equation
// filter. Guarded to small T; this is the reference the solver is tested
// against, so it stays independent of the solving path.
inline std::vector<Coords4> enumerate_ball_naive(const BallQuery& q) {
    if (q.T > 64) throw budget_error("naive scan limited to T <= 64", "T");
    const i64 L = q.T - 1;
    std::vector<Coords4> out;
    for (i64 c0 = -L; c0 <= L; ++c0)
        for (i64 c1 = -L; c1 <= L; ++c1)
            for (i64 c2 = -L; c2 <= L; ++c2)
                for (i64 c3 = -L; c3 <= L; ++c3) {
                    Coords4 c{c0, c1, c2, c3};
                    if (model_equation<i64>(q.spec, c) != 0) continue;
                    if (q.congruence && !detail::congruence_matches(c, *q.congruence)) continue;
                    out.push_back(c);
                }
    return out;
}

// Canonical (lexicographically sorted, duplicate-free) enumeration of
// {g : H(g) < T} intersected with an optional congruence class.
inline std::vector<Coords4> enumerate_ball_raw(const BallQuery& q,
                                               const EnumOptions& opts = {}) {
    if (q.T < 1) throw error("ball query needs T >= 1");
    if (q.congruence && q.congruence->modulus == 0)
        throw invalid_modulus_error("congruence modulus must be >= 1");
    if (q.T > opts.max_T)
        throw budget_error("enumeration bound T=" + std::to_string(q.T) +
                               " exceeds the configured solver guard",
                           "T");
    const i64 L = q.T - 1;
    if (L <= 0) return {};

    const i64 span = 2 * L + 1;
    const std::size_t shard_count =
        std::max<std::size_t>(1, std::min<std::size_t>(64, static_cast<std::size_t>(span)));
    const i64 step = (span + static_cast<i64>(shard_count) - 1) / static_cast<i64>(shard_count);

    std::function<std::vector<Coords4>(std::size_t)> job = [&](std::size_t s) {
        std::vector<Coords4> part;
        const i64 lo = -L + static_cast<i64>(s) * step;
        const i64 hi = std::min(L + 1, lo + step);
        if (lo >= hi) return part;
        auto emit = [&](const Coords4& c) {
            if (q.congruence && !detail::congruence_matches(c, *q.congruence)) return;
            part.push_back(c);
        };
        if (q.spec.model == GroupModel::Sl2)
            detail::scan_sl2_range(q.T, lo, hi, emit);
        else
            detail::scan_quat_range(q.spec, q.T, lo, hi, emit);
        return part;
    };

    auto parts = run_shards<std::vector<Coords4>>(shard_count, opts.threads, job);

    std::vector<Coords4> all;
    u64 total = 0;
    for (std::size_t s = 0; s < parts.size(); ++s) {
        total += parts[s].size();
        if (total > opts.max_points) {
            std::sort(all.begin(), all.end());
            const i64 lo = -L;
            const i64 hi = -L + static_cast<i64>(s) * step;
            throw partial_result_error("enumeration exceeded max_points=" +
                                           std::to_string(opts.max_points),
                                       std::move(all), lo, hi);
        }
        all.insert(all.end(), parts[s].begin(), parts[s].end());
    }
    std::sort(all.begin(), all.end());
    return all;
}

inline std::vector<GroupElement> enumerate_ball(const BallQuery& q,
                                                const EnumOptions& opts = {}) {
    auto raw = enumerate_ball_raw(q, opts);
    std::vector<GroupElement> out;
    out.reserve(raw.size());
    for (const auto& c : raw) out.push_back(make_element_i(q.spec, c[0], c[1], c[2], c[3]));
    return out;
}

inline u64 count_ball(const BallQuery& q, const EnumOptions& opts = {}) {
    if (q.T < 1) throw error("ball query needs T >= 1");
    if (q.T > opts.max_T)
        throw budget_error("count bound T exceeds the configured solver guard", "T");
    const i64 L = q.T - 1;
    if (L <= 0) return 0;
    const i64 span = 2 * L + 1;
    const std::size_t shard_count =
        std::max<std::size_t>(1, std::min<std::size_t>(64, static_cast<std::size_t>(span)));
    const i64 step = (span + static_cast<i64>(shard_count) - 1) / static_cast<i64>(shard_count);
    std::function<u64(std::size_t)> job = [&](std::size_t s) {
        u64 n = 0;
        const i64 lo = -L + static_cast<i64>(s) * step;
        const i64 hi = std::min(L + 1, lo + step);
        if (lo >= hi) return n;
        auto emit = [&](const Coords4& c) {
            if (q.congruence && !detail::congruence_matches(c, *q.congruence)) return;
            ++n;
        };
        if (q.spec.model == GroupModel::Sl2)
            detail::scan_sl2_range(q.T, lo, hi, emit);
        else
            detail::scan_quat_range(q.spec, q.T, lo, hi, emit);
        return n;
    };
    auto parts = run_shards<u64>(shard_count, opts.threads, job);
    u64 total = 0;
    for (u64 n : parts) total += n;
    return total;
}

// ---- growth fit ---------------------------------------------------------------

struct GrowthReport {
    std::vector<std::pair<i64, u64>> points;  // (T, count)
    double a = 0;                             // exponent of T
    double b = 0;                             // exponent of log T
    double intercept = 0;
    double residual_max = 0;
    double residual_rms = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["points"] = nlohmann::json::array();
        for (auto& [T, n] : points) j["points"].push_back({{"T", T}, {"count", n}});
        j["a"] = a;
        j["b"] = b;
        j["intercept"] = intercept;
        j["residual_max"] = residual_max;
        j["residual_rms"] = residual_rms;
        return j;
    }
};

// Least squares of log(count) against log T and log log T, on given points.
inline GrowthReport fit_growth_points(const std::vector<std::pair<i64, u64>>& points) {
    if (points.size() < 4) throw insufficient_data_error("need at least 4 sample heights");
    for (std::size_t i = 0; i + 1 < points.size(); ++i)
        if (points[i].first >= points[i + 1].first)
            throw insufficient_data_error("sample heights must be strictly increasing");
    if (points.front().first < 2) throw insufficient_data_error("sample heights must be >= 2");
    GrowthReport rep;
    rep.points = points;
    for (auto& [T, n] : rep.points)
        if (n == 0)
            throw insufficient_data_error("zero count at T=" + std::to_string(T) +
                                          "; growth fit undefined");

    // normal equations for [log T, log log T, 1]
    long double M[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    long double rhs[3] = {0, 0, 0};
    for (auto& [T, n] : rep.points) {
        long double x = std::log(static_cast<long double>(T));
        long double u = std::log(x);
        long double y = std::log(static_cast<long double>(n));
        long double row[3] = {x, u, 1.0L};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) M[i][j] += row[i] * row[j];
            rhs[i] += row[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(static_cast<double>(M[idx[r]][col])) >
                std::fabs(static_cast<double>(M[idx[piv]][col])))
                piv = r;
        std::swap(idx[col], idx[piv]);
        for (int r = col + 1; r < 3; ++r) {
            long double f = M[idx[r]][col] / M[idx[col]][col];
            for (int c = col; c < 3; ++c) M[idx[r]][c] -= f * M[idx[col]][c];
            rhs[idx[r]] -= f * rhs[idx[col]];
        }
    }
    long double sol[3];
    for (int r = 2; r >= 0; --r) {
        long double s = rhs[idx[r]];
        for (int c = r + 1; c < 3; ++c) s -= M[idx[r]][c] * sol[c];
        sol[r] = s / M[idx[r]][r];
    }
    rep.a = static_cast<double>(sol[0]);
    rep.b = static_cast<double>(sol[1]);
    rep.intercept = static_cast<double>(sol[2]);

    long double sumsq = 0;
    for (auto& [T, n] : rep.points) {
        long double x = std::log(static_cast<long double>(T));
        long double fit = sol[0] * x + sol[1] * std::log(x) + sol[2];
        long double r = std::log(static_cast<long double>(n)) - fit;
        rep.residual_max = std::max(rep.residual_max, std::fabs(static_cast<double>(r)));
        sumsq += r * r;
    }
    rep.residual_rms =
        static_cast<double>(std::sqrt(sumsq / static_cast<long double>(rep.points.size())));
    return rep;
}

inline GrowthReport fit_growth(const GroupSpec& spec, const std::vector<i64>& T_list,
                               const EnumOptions& opts = {}) {
    std::vector<std::pair<i64, u64>> points;
    for (i64 T : T_list)
        points.push_back({T, count_ball(BallQuery{spec, T, std::nullopt}, opts)});
    return fit_growth_points(points);
}

// ---- congruent point search ----------------------------------------------------

// Least-height group element matching every target residue (pairwise coprime
// moduli); ties broken lexicographically. Never concludes nonexistence: a
// miss below T_max raises not_found_error.
inline GroupElement find_congruent_point(const GroupSpec& spec,
                                         const std::vector<ResidueElement>& targets,
                                         i64 T_max, const EnumOptions& opts = {}) {
    if (targets.empty()) return identity_element(spec);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!residue_satisfies_equation(spec, targets[i]))
            throw error("target residue is not on the group mod " +
                        std::to_string(targets[i].modulus));
        for (std::size_t j = i + 1; j < targets.size(); ++j)
            if (gcd_u64(targets[i].modulus, targets[j].modulus) != 1)
                throw error("target moduli must be pairwise coprime");
    }
    Congruence cg;
    cg.modulus = targets[0].modulus;
    cg.target = targets[0].coords;
    for (std::size_t i = 1; i < targets.size(); ++i) {
        const auto& t = targets[i];
        for (int c = 0; c < 4; ++c)
            cg.target[c] = crt_pair_u64(cg.target[c], cg.modulus, t.coords[c], t.modulus);
        cg.modulus *= t.modulus;
    }

    for (i64 T = 2;; T = std::min(T * 2, T_max)) {
        auto raw = enumerate_ball_raw(BallQuery{spec, T, cg}, opts);
        if (!raw.empty()) {
            auto best = raw[0];
            auto h = [](const Coords4& c) {
                i64 m = 0;
                for (i64 v : c) m = std::max(m, v >= 0 ? v : -v);
                return m;
            };
            for (const auto& c : raw)
                if (h(c) < h(best) || (h(c) == h(best) && c < best)) best = c;
            return make_element_i(spec, best[0], best[1], best[2], best[3]);
        }
        if (T >= T_max)
            throw not_found_error("no element matching all residues below T_max=" +
                                  std::to_string(T_max) + "; raise the bound");
    }
}

}  // namespace groupsieve

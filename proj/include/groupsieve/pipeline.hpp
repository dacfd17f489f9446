#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "groupsieve/almost_prime.hpp"
#include "groupsieve/enumerate.hpp"
#include "groupsieve/errors.hpp"
#include "groupsieve/finite_models.hpp"
#include "groupsieve/group.hpp"
#include "groupsieve/io.hpp"
#include "groupsieve/polynomial.hpp"
#include "groupsieve/primes.hpp"
#include "groupsieve/torus.hpp"

namespace groupsieve {

// ---- configuration ---------------------------------------------------------------

struct WindowPlace {
    u64 modulus = 1;  // a prime power p^e
    u64 p = 1;
    unsigned e = 1;
    std::vector<ResidueElement> allowed;
};

struct AdelicWindow {
    std::vector<WindowPlace> places;
};

struct SolverBudgets {
    i64 T_base = 64;           // base-point height frontier
    i64 T_sieve = 512;         // sieve height frontier
    double beta = 1.0;         // threshold exponent
    i64 gcd_T = 48;            // gcd sample ball
    u64 gcd_B = 600;           // gcd certification bound
    u64 prime_bound = 10000;   // torus threshold scan bound
    u64 verify_bound = 10000;  // exhaustive avoidance recheck bound
    u64 trial_bound = 1000000; // factorization trial-division bound
    unsigned r_search = 0;     // stricter factor-count demand; 0 = use r0
    unsigned iso_translations = 64;  // unipotent search radius (SL2)
    unsigned retries = 2;      // staged budget doublings
};

struct SolverConfig {
    GroupSpec group;
    std::optional<long> torus_d;
    std::optional<std::pair<Integer, Integer>> torus_unit;
    SubsetSpec subset;
    SeparatingCoord F = SeparatingCoord::PiW;
    AdelicWindow window;
    std::vector<u64> S;  // excluded primes
    SolverBudgets budgets;
    nlohmann::json raw;  // canonical source, hashed into certificates
};

inline RegularFunction parse_generator(const GroupSpec& spec, const nlohmann::json& j) {
    if (j.is_string()) return named_function(spec, j.get<std::string>());
    return RegularFunction::from_json(j);
}

inline SolverConfig parse_config(const nlohmann::json& j) {
    SolverConfig cfg;
    cfg.raw = j;
    const auto& g = j.at("group");
    std::string model = g.at("model").get<std::string>();
    if (model == "sl2")
        cfg.group.model = GroupModel::Sl2;
    else if (model == "quat")
        cfg.group.model = GroupModel::QuatNormOne;
    else
        throw config_error("group.model must be 'sl2' or 'quat'");
    cfg.group.quat_a = g.value("a", 0);
    cfg.group.quat_b = g.value("b", 0);
    cfg.group.level = g.value("level", 1);

    if (j.contains("torus")) {
        const auto& t = j.at("torus");
        cfg.torus_d = t.at("d").get<long>();
        if (t.contains("unit")) {
            auto u = t.at("unit");
            cfg.torus_unit = {integer_from_string(u.at(0).get<std::string>()),
                              integer_from_string(u.at(1).get<std::string>())};
        }
    }

    if (j.contains("subset")) {
        const auto& s = j.at("subset");
        for (const auto& gen : s.at("generators"))
            cfg.subset.generators.push_back(parse_generator(cfg.group, gen));
        cfg.subset.declared_codim = s.value("codim", 2u);
        cfg.subset.n_fiber = s.value("n_fiber", 0ull);
    }

    if (j.contains("separating_function"))
        cfg.F = separating_coord_from_name(j.at("separating_function").get<std::string>());

    if (j.contains("window")) {
        for (const auto& w : j.at("window")) {
            WindowPlace place;
            place.modulus = w.at("modulus").get<u64>();
            auto pps = prime_power_split_u64(place.modulus);
            if (pps.size() != 1)
                throw config_error("window modulus must be a prime power, got " +
                                   std::to_string(place.modulus));
            place.p = pps[0].p;
            place.e = pps[0].e;
            for (const auto& r : w.at("residues")) {
                if (!r.is_array() || r.size() != 4)
                    throw config_error("window residue must be a coordinate 4-vector");
                ResidueElement res;
                res.modulus = place.modulus;
                for (int i = 0; i < 4; ++i) res.coords[i] = r[i].get<u64>() % place.modulus;
                place.allowed.push_back(res);
            }
            if (place.allowed.empty())
                throw config_error("window place needs a nonempty residue set");
            cfg.window.places.push_back(std::move(place));
        }
    }

    if (j.contains("excluded_primes"))
        for (const auto& p : j.at("excluded_primes")) cfg.S.push_back(p.get<u64>());
    std::sort(cfg.S.begin(), cfg.S.end());

    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        cfg.budgets.T_base = b.value("T_base", cfg.budgets.T_base);
        cfg.budgets.T_sieve = b.value("T_sieve", cfg.budgets.T_sieve);
        cfg.budgets.beta = b.value("beta", cfg.budgets.beta);
        cfg.budgets.gcd_T = b.value("gcd_T", cfg.budgets.gcd_T);
        cfg.budgets.gcd_B = b.value("gcd_B", cfg.budgets.gcd_B);
        cfg.budgets.prime_bound = b.value("prime_bound", cfg.budgets.prime_bound);
        cfg.budgets.verify_bound = b.value("verify_bound", cfg.budgets.verify_bound);
        cfg.budgets.trial_bound = b.value("trial_bound", cfg.budgets.trial_bound);
        cfg.budgets.r_search = b.value("r_search", cfg.budgets.r_search);
        cfg.budgets.iso_translations = b.value("iso_translations", cfg.budgets.iso_translations);
        cfg.budgets.retries = b.value("retries", cfg.budgets.retries);
    }
    return cfg;
}

inline SolverConfig load_config(const std::string& path) {
    return parse_config(load_json_file(path));
}

inline std::string config_hash(const SolverConfig& cfg) { return fnv1a_hex(cfg.raw.dump()); }

// ---- certificate -----------------------------------------------------------------

struct PigeonholeTranscript {
    bool pass = false;
    u64 orbit_size = 0;
    Integer fiber_product;
    u64 fiber_sum = 0;
    std::vector<PrimeTranscript> per_prime;
};

struct Certificate {
    std::string config_hash;
    std::array<Integer, 4> P, P_prime, P_dprime;
    Integer f_value;
    std::vector<PrimeFactor> factors;
    std::vector<Integer> S0;
    u64 l = 0;
    bool check_a = false, check_b = false, check_c = false;
    PigeonholeTranscript check_d;
};

inline nlohmann::json coords_to_json(const std::array<Integer, 4>& c) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : c) j.push_back(to_string(x));
    return j;
}

inline std::array<Integer, 4> coords_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw config_error("expected a coordinate 4-vector");
    std::array<Integer, 4> c;
    for (int i = 0; i < 4; ++i) c[i] = integer_from_string(j[i].get<std::string>());
    return c;
}

inline nlohmann::json certificate_to_json(const Certificate& cert) {
    nlohmann::json j;
    j["config_hash"] = cert.config_hash;
    j["P"] = coords_to_json(cert.P);
    j["P_prime"] = coords_to_json(cert.P_prime);
    j["P_dprime"] = coords_to_json(cert.P_dprime);
    j["f_value"] = to_string(cert.f_value);
    j["factors"] = nlohmann::json::array();
    for (const auto& pf : cert.factors)
        j["factors"].push_back({{"p", to_string(pf.p)}, {"e", std::to_string(pf.exponent)}});
    j["S0"] = nlohmann::json::array();
    for (const auto& p : cert.S0) j["S0"].push_back(to_string(p));
    j["l"] = std::to_string(cert.l);
    nlohmann::json d;
    d["pass"] = cert.check_d.pass;
    d["orbit_size"] = std::to_string(cert.check_d.orbit_size);
    d["fiber_product"] = to_string(cert.check_d.fiber_product);
    d["fiber_sum"] = std::to_string(cert.check_d.fiber_sum);
    d["per_prime"] = nlohmann::json::array();
    for (const auto& tr : cert.check_d.per_prime)
        d["per_prime"].push_back({{"p", to_string(tr.p)},
                                  {"order", std::to_string(tr.order)},
                                  {"fiber_count", std::to_string(tr.fiber_count)},
                                  {"orbit_distinct", std::to_string(tr.orbit_distinct)}});
    j["checks"] = {{"a", cert.check_a}, {"b", cert.check_b}, {"c", cert.check_c}, {"d", d}};
    return j;
}

inline Certificate certificate_from_json(const nlohmann::json& j) {
    Certificate cert;
    cert.config_hash = j.at("config_hash").get<std::string>();
    cert.P = coords_from_json(j.at("P"));
    cert.P_prime = coords_from_json(j.at("P_prime"));
    cert.P_dprime = coords_from_json(j.at("P_dprime"));
    cert.f_value = integer_from_string(j.at("f_value").get<std::string>());
    for (const auto& pf : j.at("factors"))
        cert.factors.push_back(
            PrimeFactor{integer_from_string(pf.at("p").get<std::string>()),
                        static_cast<unsigned>(std::stoul(pf.at("e").get<std::string>()))});
    for (const auto& p : j.at("S0")) cert.S0.push_back(integer_from_string(p.get<std::string>()));
    cert.l = std::stoull(j.at("l").get<std::string>());
    const auto& checks = j.at("checks");
    cert.check_a = checks.at("a").get<bool>();
    cert.check_b = checks.at("b").get<bool>();
    cert.check_c = checks.at("c").get<bool>();
    const auto& d = checks.at("d");
    cert.check_d.pass = d.at("pass").get<bool>();
    cert.check_d.orbit_size = std::stoull(d.at("orbit_size").get<std::string>());
    cert.check_d.fiber_product = integer_from_string(d.at("fiber_product").get<std::string>());
    cert.check_d.fiber_sum = std::stoull(d.at("fiber_sum").get<std::string>());
    for (const auto& tr : d.at("per_prime")) {
        PrimeTranscript t;
        t.p = integer_from_string(tr.at("p").get<std::string>());
        t.order = std::stoull(tr.at("order").get<std::string>());
        t.fiber_count = std::stoull(tr.at("fiber_count").get<std::string>());
        t.orbit_distinct = std::stoull(tr.at("orbit_distinct").get<std::string>());
        cert.check_d.per_prime.push_back(std::move(t));
    }
    return cert;
}

// ---- derived context shared by solve and verify -------------------------------------

struct DerivedContext {
    u64 alpha = 1;
    Integer alphaN;                     // alpha * N (after gcd certification)
    std::vector<u64> S;                 // sorted
    u64 n_fiber = 1;
    std::vector<std::vector<ResidueElement>> usable;  // per window place
    std::vector<u64> good_check_primes;  // for check (c)
    TorusSpec torus;                    // window-stabilized unit (quat only)
    u64 stabilizer_power = 1;           // Q = fundamental^k
    bool separability_assumed = true;   // coordinate separating functions only
};

namespace detail {

inline bool residue_in_subset_mod_p(const SubsetSpec& D, const ResidueElement& r, u64 p) {
    ResidueElement rp;
    rp.modulus = p;
    for (int i = 0; i < 4; ++i) rp.coords[i] = r.coords[i] % p;
    return residue_in_subset(D, rp);
}

}  // namespace detail

// Validates the config and computes everything both solve and verify need.
// throws config_error when the window, subset, or torus data are rejected.
inline DerivedContext derive_context(const SolverConfig& cfg, unsigned threads = 1) {
    DerivedContext ctx;
    validate_spec(cfg.group);
    ctx.S = cfg.S;

    if (cfg.subset.generators.empty())
        throw config_error("the removed subset needs at least one generator");
    for (const auto& g : cfg.subset.generators)
        if (g.is_zero() || g.is_constant())
            throw config_error("subset generators must be nonconstant");
    if (cfg.subset.declared_codim != 2)
        throw config_error("this solver removes codimension-2 subsets only");
    ctx.n_fiber = cfg.subset.n_fiber ? cfg.subset.n_fiber : default_fiber_bound(cfg.subset);

    // alpha = lcm(level, window moduli)
    ctx.alpha = cfg.group.level;
    for (const auto& place : cfg.window.places) {
        for (const auto& other : cfg.window.places)
            if (&place != &other && gcd_u64(place.modulus, other.modulus) != 1)
                throw config_error("window moduli must be pairwise coprime");
        u64 g = gcd_u64(ctx.alpha, place.modulus);
        ctx.alpha = ctx.alpha / g * place.modulus;
    }

    // bad-reduction primes must be excluded or congruence-pinned
    if (cfg.group.is_quat()) {
        u64 n = static_cast<u64>(std::abs(2 * cfg.group.quat_a * cfg.group.quat_b));
        for (const auto& pp : prime_power_split_u64(n))
            if (!std::binary_search(ctx.S.begin(), ctx.S.end(), pp.p) && ctx.alpha % pp.p != 0)
                throw config_error("bad-reduction prime " + std::to_string(pp.p) +
                                   " must lie in the excluded set or divide the window level");
    }

    // window residues: on the group, and usable (outside D mod p when p is
    // subject to avoidance checks)
    for (const auto& place : cfg.window.places) {
        std::vector<ResidueElement> usable;
        const bool in_S = std::binary_search(ctx.S.begin(), ctx.S.end(), place.p);
        for (const auto& r : place.allowed) {
            if (!residue_satisfies_equation(cfg.group, r))
                throw config_error("window residue is not on the group mod " +
                                   std::to_string(place.modulus));
            if (in_S || !detail::residue_in_subset_mod_p(cfg.subset, r, place.p))
                usable.push_back(r);
        }
        if (usable.empty())
            throw config_error("all allowed residues mod " + std::to_string(place.modulus) +
                               " land inside the removed subset: no integral point of U can "
                               "satisfy this window");
        ctx.usable.push_back(std::move(usable));
    }

    // check-(c) prime list
    for (u64 p : primes_below(cfg.budgets.verify_bound + 1)) {
        if (std::binary_search(ctx.S.begin(), ctx.S.end(), p)) continue;
        if (!cfg.group.good_reduction_at(p)) continue;
        ctx.good_check_primes.push_back(p);
    }

    if (cfg.group.is_quat()) {
        if (!cfg.torus_d) throw config_error("the quaternion pipeline needs a torus");
        if (*cfg.torus_d != cfg.group.quat_a)
            throw config_error("the torus lives in the i-subfield: need d = a");
        TorusSpec fund = make_torus(*cfg.torus_d, cfg.torus_unit);
        // smallest power of the unit congruent to the identity mod alpha:
        // realizes the stabilizer Phi_T explicitly
        u64 k = 1;
        std::pair<Integer, Integer> q = fund.unit();
        const u64 bound = ctx.alpha * ctx.alpha * 4 + 4;
        while (!(mod_u64(q.first, ctx.alpha) == 1 % ctx.alpha &&
                 mod_u64(q.second, ctx.alpha) == 0)) {
            q = torus_multiply(fund.d, q, fund.unit());
            ++k;
            if (k > bound)
                throw config_error("no power of the torus unit stabilizes the window level");
        }
        ctx.stabilizer_power = k;
        ctx.torus = make_torus(fund.d, std::optional{q});

        // Step-I containment: every D-point mod p maps into {F = 0}, and F
        // does not vanish identically on the quotient data
        for (u64 p : primes_below(51)) {
            if (!cfg.group.good_reduction_at(p)) continue;
            auto chk = check_pi_vanishing(cfg.group, cfg.subset, cfg.F, p);
            if (!chk.d_maps_into_VF)
                throw config_error("pi(D) escapes the zero locus of F mod " + std::to_string(p) +
                                   ": the separating function does not cut out pi(D)");
            if (!chk.F_nonvanishing)
                throw config_error("F vanishes on all quotient data mod " + std::to_string(p) +
                                   ": D would contain full fibres");
            // empirical fibre-degree certification
            u64 maxfib = max_fiber_count_mod(cfg.group, cfg.subset, p);
            if (maxfib > ctx.n_fiber)
                throw config_error("observed fibre count " + std::to_string(maxfib) + " mod " +
                                   std::to_string(p) + " exceeds the declared bound N=" +
                                   std::to_string(ctx.n_fiber));
        }
    }
    return ctx;
}

// ---- stage: base point ----------------------------------------------------------------

inline GroupElement find_base_point(const SolverConfig& cfg, const DerivedContext& ctx,
                                    const EnumOptions& opts) {
    if (cfg.window.places.empty()) return identity_element(cfg.group);
    auto height_of = [](const Coords4& c) {
        i64 m = 0;
        for (i64 v : c) m = std::max(m, v >= 0 ? v : -v);
        return m;
    };
    for (i64 T = 2;; T = std::min(T * 2, cfg.budgets.T_base)) {
        auto raw = enumerate_ball_raw(BallQuery{cfg.group, T, std::nullopt}, opts);
        std::optional<Coords4> best;
        for (const auto& c : raw) {
            bool ok = true;
            for (std::size_t i = 0; i < cfg.window.places.size() && ok; ++i) {
                const auto& place = cfg.window.places[i];
                ResidueElement r;
                r.modulus = place.modulus;
                for (int k = 0; k < 4; ++k) {
                    i64 v = c[k] % static_cast<i64>(place.modulus);
                    if (v < 0) v += static_cast<i64>(place.modulus);
                    r.coords[k] = static_cast<u64>(v);
                }
                ok = std::find(ctx.usable[i].begin(), ctx.usable[i].end(), r) !=
                     ctx.usable[i].end();
            }
            if (!ok) continue;
            if (!best || height_of(c) < height_of(*best) ||
                (height_of(c) == height_of(*best) && c < *best))
                best = c;
        }
        if (best) return make_element_i(cfg.group, (*best)[0], (*best)[1], (*best)[2], (*best)[3]);
        if (T >= cfg.budgets.T_base)
            throw not_found_error("no base point in the window below T_base=" +
                                  std::to_string(cfg.budgets.T_base));
    }
}

// ---- solve (anisotropic quaternion pipeline) --------------------------------------------

struct SolveReport {
    GcdCertificate gcd_cert;
    double theta_fit = 0;
    unsigned r0 = 0;
    unsigned r_search = 0;
    ThresholdReport threshold;
    u64 stabilizer_power = 1;
    std::pair<Integer, Integer> torus_unit;
    u64 alpha = 1;
    u64 n_fiber = 1;
    bool separability_assumed = true;
    std::vector<std::string> notes;
};

struct SolveResult {
    Certificate certificate;
    SolveReport report;
};

namespace detail {

inline bool window_member(const SolverConfig& cfg, const std::array<Integer, 4>& coords) {
    for (const auto& place : cfg.window.places) {
        ResidueElement r;
        r.modulus = place.modulus;
        for (int i = 0; i < 4; ++i) r.coords[i] = mod_u64(coords[i], place.modulus);
        if (std::find(place.allowed.begin(), place.allowed.end(), r) == place.allowed.end())
            return false;
    }
    return true;
}

inline bool avoidance_check_c(const SolverConfig& cfg, const DerivedContext& ctx,
                              const GroupElement& P_dprime) {
    for (u64 p : ctx.good_check_primes)
        if (element_in_subset_mod(cfg.subset, P_dprime, p)) return false;
    return true;
}

}  // namespace detail

inline SolveResult solve(const SolverConfig& cfg, unsigned threads = 1) {
    if (!cfg.group.is_quat())
        throw config_error("solve runs the anisotropic quaternion pipeline; use solve_isotropic "
                           "for sl2");
    DerivedContext ctx = derive_context(cfg, threads);
    EnumOptions opts;
    opts.threads = threads;

    SolveResult out;
    SolveReport& rep = out.report;
    rep.alpha = ctx.alpha;
    rep.n_fiber = ctx.n_fiber;
    rep.stabilizer_power = ctx.stabilizer_power;
    rep.torus_unit = ctx.torus.unit();
    rep.separability_assumed = ctx.separability_assumed;
    rep.notes.push_back("separating function is a coordinate of pi: separability immediate");

    // Step IV base point: strong approximation realized by search
    GroupElement P = find_base_point(cfg, ctx, opts);

    RegularFunction f = compose_separating_function(cfg.group, cfg.F, P);

    // gcd certification, with a staged height ladder for thin levels
    i64 gcd_T = cfg.budgets.gcd_T;
    const u64 B = std::max<u64>(cfg.budgets.gcd_B,
                                static_cast<u64>(std::ceil(std::pow(
                                    static_cast<double>(cfg.budgets.T_sieve), cfg.budgets.beta))) +
                                    1);
    std::optional<GcdCertificate> cert;
    for (unsigned attempt = 0; attempt <= cfg.budgets.retries; ++attempt) {
        try {
            cert = certify_gcd(cfg.group, f, ctx.alpha, gcd_T, B, opts);
            break;
        } catch (const error& e) {
            if (attempt == cfg.budgets.retries)
                throw config_error(std::string("stage gcd-certification failed: ") + e.what());
            gcd_T *= 2;
        }
    }
    rep.gcd_cert = *cert;
    const Integer N = cert->N;
    ctx.alphaN = Integer(static_cast<unsigned long>(ctx.alpha)) * N;

    rep.theta_fit = measure_theta(cfg.group, f, ctx.alpha, gcd_T, opts);
    rep.r0 = report_r_formula(rep.theta_fit, cfg.budgets.beta);
    rep.r_search = cfg.budgets.r_search == 0 ? rep.r0
                                             : std::min(cfg.budgets.r_search, rep.r0);

    rep.threshold = threshold_M(ctx.torus, rep.r0, ctx.n_fiber, cfg.budgets.prime_bound,
                                cfg.budgets.trial_bound);

    // Step IV sieve point
    SaturationQuery query;
    query.spec = cfg.group;
    query.f = f;
    query.alpha = ctx.alpha;
    query.S = ctx.S;
    query.beta = cfg.budgets.beta;
    query.T = cfg.budgets.T_sieve;
    query.M = rep.threshold.M;
    query.r = rep.r_search;
    std::optional<AlmostPrimeHit> hit;
    i64 T_sieve = cfg.budgets.T_sieve;
    for (unsigned attempt = 0; attempt <= cfg.budgets.retries; ++attempt) {
        try {
            hit = find_almost_prime_point(query, {}, N, T_sieve, opts);
            break;
        } catch (const not_found_error& e) {
            if (attempt == cfg.budgets.retries)
                throw config_error(std::string("stage sieve-point failed: ") + e.what());
            T_sieve *= 2;
        }
    }

    GroupElement P_prime = multiply(hit->g, P);
    Integer f_value = hit->value;
    {
        // cross-check the fibration identity f(g) = F(pi(g P))
        auto piv = pi_of(P_prime);
        if (piv[static_cast<int>(cfg.F)] != f_value)
            throw error("internal: composed f disagrees with F(pi(P'))");
    }

    auto S0 = bad_places(hit->factorization, ctx.S, ctx.alphaN, rep.threshold.M);

    // Step V avoidance
    AvoidanceState state{cfg.group, ctx.torus, P_prime, S0, rep.r0, ctx.n_fiber};
    AvoidanceOutcome avoid = select_avoiding(state, cfg.subset);

    Certificate& c = out.certificate;
    c.config_hash = config_hash(cfg);
    c.P = P.coords;
    c.P_prime = P_prime.coords;
    c.P_dprime = avoid.P_dprime.coords;
    c.f_value = f_value;
    c.factors = hit->factorization.factors;
    c.S0 = S0;
    c.l = avoid.l;
    c.check_a = detail::window_member(cfg, avoid.P_dprime.coords);
    c.check_b = true;
    for (const auto& tr : avoid.per_prime)
        if (std::binary_search(tr.bad_ls.begin(), tr.bad_ls.end(), avoid.l)) c.check_b = false;
    c.check_c = detail::avoidance_check_c(cfg, ctx, avoid.P_dprime);
    c.check_d.pass = avoid.product_inequality;
    c.check_d.orbit_size = avoid.orbit_size;
    c.check_d.fiber_product = avoid.fiber_product;
    c.check_d.fiber_sum = avoid.fiber_sum;
    c.check_d.per_prime = avoid.per_prime;
    for (auto& tr : c.check_d.per_prime) tr.bad_ls.clear();  // indices are derivable; keep slim

    if (!(c.check_a && c.check_b && c.check_c && c.check_d.pass))
        throw error("solve completed but a certificate check failed: a=" +
                    std::to_string(c.check_a) + " b=" + std::to_string(c.check_b) +
                    " c=" + std::to_string(c.check_c) + " d=" + std::to_string(c.check_d.pass));
    return out;
}

// ---- solve_isotropic (SL2 demonstrator) ---------------------------------------------------

// Escapes D by paired upper/lower unipotent translations congruent to the
// identity mod alpha; avoidance is certified exhaustively by check (c).
inline SolveResult solve_isotropic(const SolverConfig& cfg, unsigned threads = 1) {
    if (cfg.group.model != GroupModel::Sl2)
        throw config_error("solve_isotropic runs on the sl2 model");
    DerivedContext ctx = derive_context(cfg, threads);
    EnumOptions opts;
    opts.threads = threads;

    SolveResult out;
    out.report.alpha = ctx.alpha;
    out.report.n_fiber = ctx.n_fiber;
    out.report.notes.push_back("isotropic demonstrator: unipotent translations, no sieve stage");

    GroupElement P = find_base_point(cfg, ctx, opts);
    const i64 step = static_cast<i64>(ctx.alpha);

    auto unipotent_up = [&](i64 t) { return make_element_i(cfg.group, 1, t, 0, 1); };
    auto unipotent_low = [&](i64 s) { return make_element_i(cfg.group, 1, 0, s, 1); };

    std::optional<GroupElement> found;
    i64 found_t = 0, found_s = 0;
    const i64 radius = static_cast<i64>(cfg.budgets.iso_translations);
    for (i64 n = 0; n <= radius && !found; ++n) {
        for (i64 m = 0; m <= n && !found; ++m) {
            // deterministic diagonal sweep over (t, s) multiples of alpha
            for (auto [ti, si] : {std::pair<i64, i64>{n, m}, std::pair<i64, i64>{m, n}}) {
                GroupElement cand =
                    multiply(multiply(unipotent_up(ti * step), unipotent_low(si * step)), P);
                if (!detail::window_member(cfg, cand.coords)) continue;
                if (detail::avoidance_check_c(cfg, ctx, cand)) {
                    found = cand;
                    found_t = ti * step;
                    found_s = si * step;
                    break;
                }
            }
        }
    }
    if (!found)
        throw not_found_error("no unipotent translate below the budget avoids D at every "
                              "checked prime; raise iso_translations");
    out.report.notes.push_back("translation (t,s)=(" + std::to_string(found_t) + "," +
                               std::to_string(found_s) + ")");

    Certificate& c = out.certificate;
    c.config_hash = config_hash(cfg);
    c.P = P.coords;
    c.P_prime = found->coords;
    c.P_dprime = found->coords;
    c.f_value = 1;
    c.l = 0;
    c.check_a = detail::window_member(cfg, found->coords);
    c.check_b = true;  // S0 empty
    c.check_c = true;  // established by the search
    c.check_d.pass = true;
    c.check_d.orbit_size = 1;
    c.check_d.fiber_product = 1;
    c.check_d.fiber_sum = 0;
    return out;
}

inline SolveResult solve_config(const SolverConfig& cfg, unsigned threads = 1) {
    return cfg.group.is_quat() ? solve(cfg, threads) : solve_isotropic(cfg, threads);
}

// ---- verification ----------------------------------------------------------------------------

struct VerifyReport {
    bool pass = false;
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    void fail(const std::string& why) {
        pass = false;
        failures.push_back(why);
    }
};

// Recomputes every certificate claim from the raw config: group membership,
// window membership, the f-value and its factorization, S0, the orbit
// relation, and checks (a)-(d).
inline VerifyReport verify_certificate(const SolverConfig& cfg, const Certificate& cert,
                                       unsigned threads = 1) {
    VerifyReport rep;
    rep.pass = true;

    if (cert.config_hash != config_hash(cfg))
        rep.notes.push_back("certificate was produced from a different config (hash mismatch)");

    DerivedContext ctx;
    try {
        ctx = derive_context(cfg, threads);
    } catch (const error& e) {
        rep.fail(std::string("config rejected: ") + e.what());
        return rep;
    }
    EnumOptions opts;
    opts.threads = threads;

    auto check_on_group = [&](const char* name, const std::array<Integer, 4>& coords) {
        if (model_equation<Integer>(cfg.group, coords) != 0)
            rep.fail(std::string(name) + " violates the defining equation " +
                     (cfg.group.is_quat() ? "nrd(g) = 1" : "det(g) = 1"));
    };
    check_on_group("P", cert.P);
    check_on_group("P_prime", cert.P_prime);
    check_on_group("P_dprime", cert.P_dprime);
    if (!rep.pass) return rep;

    GroupElement P{cfg.group, cert.P};
    GroupElement P_prime{cfg.group, cert.P_prime};
    GroupElement P_dprime{cfg.group, cert.P_dprime};

    // (a) window membership
    if (!detail::window_member(cfg, cert.P_dprime)) rep.fail("check (a): P'' leaves the window");
    if (!detail::window_member(cfg, cert.P)) rep.fail("base point P leaves the window");

    if (!cfg.group.is_quat()) {
        if (cert.l != 0 || !(cert.P_prime == cert.P_dprime))
            rep.fail("isotropic certificate must have l = 0 and P'' = P'");
        GroupElement g = multiply(P_prime, conj_inverse(P));
        if (!in_congruence_subgroup(g, ctx.alpha))
            rep.fail("P' is not a Gamma_alpha translate of P");
        if (!cert.S0.empty()) rep.fail("isotropic certificate must have empty S0");
        if (!detail::avoidance_check_c(cfg, ctx, P_dprime))
            rep.fail("check (c): P'' meets D at a good prime below the verify bound");
        return rep;
    }

    // translate relation: g = P' * P^{-1} in Gamma_alpha
    GroupElement g = multiply(P_prime, conj_inverse(P));
    if (!in_congruence_subgroup(g, ctx.alpha))
        rep.fail("P' is not a Gamma_alpha translate of P (mod alpha = " +
                 std::to_string(ctx.alpha) + ")");

    RegularFunction f = compose_separating_function(cfg.group, cfg.F, P);
    if (f.eval(g.coords) != cert.f_value)
        rep.fail("f_value does not match F(pi(P'))");
    {
        auto piv = pi_of(P_prime);
        if (piv[static_cast<int>(cfg.F)] != cert.f_value)
            rep.fail("fibration identity F(pi(P')) != f_value");
        auto piv2 = pi_of(P_dprime);
        if (piv2 != piv) rep.fail("f-invariance violated: pi(P'') != pi(P')");
    }

    // factorization recheck
    {
        Factorization fac;
        fac.value = cert.f_value >= 0 ? cert.f_value : Integer(-cert.f_value);
        fac.factors = cert.factors;
        if (!fac.verify()) rep.fail("recorded factorization fails certification");
    }

    // re-derive N, theta, r0, M from config budgets
    GcdCertificate gcd_cert;
    double theta = 0;
    try {
        i64 gcd_T = cfg.budgets.gcd_T;
        const u64 B = std::max<u64>(
            cfg.budgets.gcd_B,
            static_cast<u64>(std::ceil(
                std::pow(static_cast<double>(cfg.budgets.T_sieve), cfg.budgets.beta))) +
                1);
        for (unsigned attempt = 0;; ++attempt) {
            try {
                gcd_cert = certify_gcd(cfg.group, f, ctx.alpha, gcd_T, B, opts);
                break;
            } catch (const error&) {
                if (attempt >= cfg.budgets.retries) throw;
                gcd_T *= 2;
            }
        }
        theta = measure_theta(cfg.group, f, ctx.alpha, gcd_T, opts);
    } catch (const error& e) {
        rep.fail(std::string("re-derivation failed: ") + e.what());
        return rep;
    }
    const Integer N = gcd_cert.N;
    const Integer alphaN = Integer(static_cast<unsigned long>(ctx.alpha)) * N;
    unsigned r0 = report_r_formula(theta, cfg.budgets.beta);
    ThresholdReport threshold;
    try {
        threshold = threshold_M(ctx.torus, r0, ctx.n_fiber, cfg.budgets.prime_bound,
                                cfg.budgets.trial_bound);
    } catch (const error& e) {
        rep.fail(std::string("threshold re-derivation failed: ") + e.what());
        return rep;
    }

    // S0 must equal the bad places of the factorization
    try {
        Factorization fac;
        fac.value = cert.f_value >= 0 ? cert.f_value : Integer(-cert.f_value);
        fac.factors = cert.factors;
        auto S0 = bad_places(fac, ctx.S, alphaN, threshold.M);
        if (S0 != cert.S0) rep.fail("recorded S0 differs from the factorization's bad places");
    } catch (const error& e) {
        rep.fail(std::string("bad-place recomputation: ") + e.what());
    }

    // orbit relation P'' = Q^l P'
    const u64 orbit_size = static_cast<u64>(r0) * ctx.n_fiber + 1;
    if (cert.l >= orbit_size)
        rep.fail("orbit index l exceeds r0*N: " + std::to_string(cert.l));
    GroupElement Q = torus_unit_element(cfg.group, ctx.torus);
    GroupElement expected = multiply(power(Q, cert.l), P_prime);
    if (!(expected.coords == cert.P_dprime))
        rep.fail("P'' is not Q^l * P' for the recorded l");

    // (b) avoidance at the bad places + (d) transcript
    PigeonholeTranscript d;
    d.orbit_size = orbit_size;
    d.fiber_product = 1;
    d.fiber_sum = 0;
    bool b_ok = true;
    try {
        for (const auto& pz : cert.S0) {
            if (!pz.fits_ulong_p()) {
                rep.fail("bad place too large to verify: " + to_string(pz));
                continue;
            }
            u64 p = pz.get_ui();
            PrimeTranscript tr;
            tr.p = pz;
            tr.order = torus_order_mod(ctx.torus, p);
            if (tr.order <= orbit_size)
                rep.fail("orbit injectivity fails at p=" + std::to_string(p));
            auto base = reduce_mod(P_prime, p);
            tr.fiber_count =
                count_subset_in_fiber_mod(cfg.group, cfg.subset, base.coords, ctx.torus.d, p)
                    .count;
            if (tr.fiber_count > ctx.n_fiber)
                rep.fail("fibre bound violated at p=" + std::to_string(p));
            GroupElement cur = P_prime;
            std::vector<std::array<u64, 4>> reductions;
            for (u64 l = 0; l < orbit_size; ++l) {
                reductions.push_back(reduce_mod(cur, p).coords);
                cur = multiply(Q, cur);
            }
            std::sort(reductions.begin(), reductions.end());
            tr.orbit_distinct = static_cast<u64>(
                std::unique(reductions.begin(), reductions.end()) - reductions.begin());
            if (element_in_subset_mod(cfg.subset, P_dprime, p)) b_ok = false;
            d.fiber_product *= static_cast<unsigned long>(tr.fiber_count);
            d.fiber_sum += tr.fiber_count;
            d.per_prime.push_back(std::move(tr));
        }
    } catch (const error& e) {
        rep.fail(std::string("bad-place verification: ") + e.what());
    }
    d.pass = Integer(static_cast<unsigned long>(orbit_size)) > d.fiber_product;
    if (!b_ok) rep.fail("check (b): P'' meets D at a recorded bad place");
    if (!d.pass) rep.fail("check (d): pigeonhole inequality fails on recomputation");

    // (c) exhaustive recheck below the verify bound
    if (!detail::avoidance_check_c(cfg, ctx, P_dprime))
        rep.fail("check (c): P'' meets D at a good prime below the verify bound");

    return rep;
}

inline VerifyReport verify_certificate_json(const SolverConfig& cfg, const nlohmann::json& j,
                                            unsigned threads = 1) {
    Certificate cert;
    try {
        cert = certificate_from_json(j);
    } catch (const std::exception& e) {
        VerifyReport rep;
        rep.fail(std::string("malformed certificate: ") + e.what());
        return rep;
    }
    return verify_certificate(cfg, cert, threads);
}

}  // namespace groupsieve

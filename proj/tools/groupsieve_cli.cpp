// Command-line workbench: lattice enumeration, local densities, the
// combinatorial sieve, almost-prime scans, and the avoidance pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groupsieve/almost_prime.hpp"
#include "groupsieve/enumerate.hpp"
#include "groupsieve/finite_models.hpp"
#include "groupsieve/io.hpp"
#include "groupsieve/pipeline.hpp"
#include "groupsieve/sieve.hpp"
#include "groupsieve/torus.hpp"

using namespace groupsieve;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_path;
    unsigned threads = 1;
    std::optional<u64> verify_bound;
};

void emit(const GlobalArgs& g, const std::string& content) {
    if (g.out_path.empty())
        std::cout << content;
    else
        write_file(g.out_path, content);
}

SolverConfig require_config(const std::string& path) {
    if (path.empty()) throw config_error("this subcommand needs --config PATH");
    return load_config(path);
}

RegularFunction resolve_function(const GroupSpec& spec, const std::string& f_arg) {
    if (f_arg.empty()) throw config_error("need --f (a named function or a JSON file)");
    if (f_arg.find(".json") != std::string::npos)
        return RegularFunction::from_json(load_json_file(f_arg));
    return named_function(spec, f_arg);
}

std::vector<i64> parse_i64_list(const std::string& s) {
    std::vector<i64> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stoll(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"groupsieve: congruence lattice points, local densities, and "
                 "certified avoidance solving"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON config path")->envname("GROUPSIEVE_CONFIG");
    app.add_option("--out", g.out_path, "output path (stdout when omitted)");
    app.add_option("--threads", g.threads, "worker threads (1 reproduces any N bit-exactly)");
    u64 vb = 0;
    auto* vb_opt = app.add_option("--verify-bound", vb, "override the exhaustive recheck bound");

    // enumerate
    auto* cmd_enum = app.add_subcommand("enumerate", "group elements of bounded height");
    std::string enum_group_config;
    i64 enum_T = 8;
    u64 enum_mod = 0;
    std::string enum_target;
    cmd_enum->add_option("--group-config", enum_group_config, "config with the group block");
    cmd_enum->add_option("--T", enum_T, "strict height bound")->required();
    cmd_enum->add_option("--mod", enum_mod, "congruence modulus");
    cmd_enum->add_option("--target", enum_target, "target residue c1,c2,c3,c4");

    // growth
    auto* cmd_growth = app.add_subcommand("growth", "fit the ball-count growth law");
    std::string growth_T_list = "32,64,128,256,512";
    cmd_growth->add_option("--T-list", growth_T_list, "comma-separated heights");

    // local-densities
    auto* cmd_dens = app.add_subcommand("local-densities", "rho_f table as exact rationals");
    std::string dens_f;
    u64 dens_alpha = 0, dens_dmax = 30;
    i64 dens_gcd_T = 48;
    u64 dens_gcd_B = 300;
    cmd_dens->add_option("--f", dens_f, "regular function (name or JSON file)");
    cmd_dens->add_option("--alpha", dens_alpha, "congruence level (default: config level)");
    cmd_dens->add_option("--d-max", dens_dmax, "largest index d");
    cmd_dens->add_option("--gcd-T", dens_gcd_T, "gcd sample height");
    cmd_dens->add_option("--gcd-B", dens_gcd_B, "gcd certification bound");

    // langweil
    auto* cmd_lw = app.add_subcommand("langweil", "point-count constants over F_p");
    std::string lw_f;
    u64 lw_pmax = 100;
    cmd_lw->add_option("--f", lw_f, "regular function (name or JSON file)");
    cmd_lw->add_option("--p-max", lw_pmax, "largest prime");

    // sieve
    auto* cmd_sieve = app.add_subcommand("sieve", "sift a multiset against admitted primes");
    std::string sieve_input, sieve_omega;
    double sieve_z = 2;
    double fp_kappa = 1.0, fp_A0 = 2.0, fp_tau = 1.0, fp_A1 = 1.0, fp_A2 = 2.0;
    std::string fp_c = "1/2";
    cmd_sieve->add_option("--input", sieve_input, "CSV of A (column a)")->required();
    cmd_sieve->add_option("--omega", sieve_omega, "CSV p,num,den of densities")->required();
    cmd_sieve->add_option("--z", sieve_z, "sifting level")->required();
    cmd_sieve->add_option("--c", fp_c, "condition (1) bound, as a fraction");
    cmd_sieve->add_option("--kappa", fp_kappa, "condition (2) dimension");
    cmd_sieve->add_option("--A0", fp_A0, "condition (2) constant");
    cmd_sieve->add_option("--tau", fp_tau, "condition (3) exponent");
    cmd_sieve->add_option("--A1", fp_A1, "condition (3) log power");
    cmd_sieve->add_option("--A2", fp_A2, "condition (3) constant");

    // saturate
    auto* cmd_sat = app.add_subcommand("saturate", "almost-prime scan over Gamma_alpha");
    std::string sat_f;
    double sat_beta = 1.0;
    i64 sat_T = 64;
    std::string sat_M = "1";
    unsigned sat_r = 3;
    u64 sat_alpha = 0;
    cmd_sat->add_option("--f", sat_f, "regular function (name or JSON file)");
    cmd_sat->add_option("--beta", sat_beta, "threshold exponent in (0,1]");
    cmd_sat->add_option("--T", sat_T, "height bound");
    cmd_sat->add_option("--M", sat_M, "factor-size threshold");
    cmd_sat->add_option("--r", sat_r, "factor-count bound");
    cmd_sat->add_option("--alpha", sat_alpha, "congruence level (default: config level)");

    // avoid
    auto* cmd_avoid = app.add_subcommand("avoid", "torus-orbit selection from a state dump");
    std::string avoid_state;
    cmd_avoid->add_option("--state", avoid_state, "AvoidanceState JSON")->required();

    // solve / verify
    auto* cmd_solve = app.add_subcommand("solve", "run the full pipeline, emit a certificate");
    auto* cmd_verify = app.add_subcommand("verify", "recheck a certificate from scratch");
    std::string verify_cert;
    cmd_verify->add_option("--cert", verify_cert, "certificate JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        EnumOptions opts;
        opts.threads = g.threads;

        if (cmd_enum->parsed()) {
            auto cfg = require_config(enum_group_config.empty() ? g.config_path
                                                                : enum_group_config);
            BallQuery q{cfg.group, enum_T, std::nullopt};
            if (enum_mod > 0) {
                Congruence cg;
                cg.modulus = enum_mod;
                if (!enum_target.empty()) {
                    auto vals = parse_i64_list(enum_target);
                    if (vals.size() != 4) throw config_error("--target needs 4 entries");
                    for (int i = 0; i < 4; ++i) {
                        i64 v = vals[i] % static_cast<i64>(enum_mod);
                        if (v < 0) v += static_cast<i64>(enum_mod);
                        cg.target[i] = static_cast<u64>(v);
                    }
                } else {
                    cg.target = identity_residue(cfg.group, enum_mod).coords;
                }
                q.congruence = cg;
            }
            auto pts = enumerate_ball_raw(q, opts);
            CsvWriter csv({"c1", "c2", "c3", "c4"});
            for (const auto& c : pts)
                csv.append_row({std::to_string(c[0]), std::to_string(c[1]),
                                std::to_string(c[2]), std::to_string(c[3])});
            emit(g, csv.str());
        } else if (cmd_growth->parsed()) {
            auto cfg = require_config(g.config_path);
            auto rep = fit_growth(cfg.group, parse_i64_list(growth_T_list), opts);
            nlohmann::json j = rep.to_json();
            j["model"] = cfg.group.is_quat() ? "quat" : "sl2";
            emit(g, j.dump(2) + "\n");
        } else if (cmd_dens->parsed()) {
            auto cfg = require_config(g.config_path);
            auto f = resolve_function(cfg.group, dens_f);
            u64 alpha = dens_alpha ? dens_alpha : cfg.group.level;
            auto cert = certify_gcd(cfg.group, f, alpha, dens_gcd_T,
                                    std::max<u64>(dens_gcd_B, dens_dmax + 1), opts);
            LocalDensityTable table(cfg.group, f, alpha, cert, g.threads);
            CsvWriter csv({"d", "count_group", "count_fiber", "rho_numerator",
                           "rho_denominator"});
            for (u64 d = 1; d <= dens_dmax; ++d) {
                const auto& row = table.row(d);
                csv.append_row({std::to_string(d), to_string(row.count_group),
                                to_string(row.count_fiber),
                                to_string(Integer(row.rho.get_num())),
                                to_string(Integer(row.rho.get_den()))});
            }
            emit(g, csv.str());
        } else if (cmd_lw->parsed()) {
            auto cfg = require_config(g.config_path);
            auto f = resolve_function(cfg.group, lw_f);
            std::vector<u64> ps;
            for (u64 p : primes_below(lw_pmax + 1))
                if (cfg.group.good_reduction_at(p)) ps.push_back(p);
            auto rep = langweil_report(cfg.group, f, ps, g.threads);
            CsvWriter csv({"p", "count_V", "count_G", "observed_C"});
            for (const auto& row : rep.rows) {
                double c = mpq_get_d(row.c_point.get_mpq_t());
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.9g", c);
                csv.append_row({std::to_string(row.p), to_string(row.count_V),
                                to_string(row.count_G), buf});
            }
            emit(g, csv.str());
        } else if (cmd_sieve->parsed()) {
            // A from CSV (header 'a' or headerless single column)
            std::vector<Integer> A;
            {
                std::istringstream in(read_file(sieve_input));
                std::string line;
                bool first = true;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    if (first && (line == "a" || line[0] == 'a')) {
                        first = false;
                        continue;
                    }
                    first = false;
                    A.push_back(integer_from_string(line));
                }
            }
            std::map<u64, Rational> omega;
            std::vector<u64> admitted;
            {
                std::istringstream in(read_file(sieve_omega));
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty() || line[0] == 'p') continue;
                    auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
                    if (c1 == std::string::npos || c2 == std::string::npos)
                        throw config_error("omega CSV rows are p,num,den");
                    u64 p = std::stoull(line.substr(0, c1));
                    Integer num = integer_from_string(line.substr(c1 + 1, c2 - c1 - 1));
                    Integer den = integer_from_string(line.substr(c2 + 1));
                    Rational w(num, den);
                    w.canonicalize();
                    omega[p] = w;
                    admitted.push_back(p);
                }
            }
            auto problem = make_sieve_problem(std::move(A), PrimeSet::of(admitted),
                                              std::move(omega), sieve_z);
            SieveFitParams params;
            {
                auto slash = fp_c.find('/');
                params.c = slash == std::string::npos
                               ? Rational(integer_from_string(fp_c))
                               : Rational(integer_from_string(fp_c.substr(0, slash)),
                                          integer_from_string(fp_c.substr(slash + 1)));
                params.c.canonicalize();
            }
            params.kappa = fp_kappa;
            params.A0 = fp_A0;
            params.tau = fp_tau;
            params.A1 = fp_A1;
            params.A2 = fp_A2;
            auto lower = lower_bound_report(problem, params, g.threads);
            auto cond = check_conditions(problem, params, g.threads);
            nlohmann::json j;
            j["S"] = lower.S;
            j["product"] = {{"num", to_string(Integer(lower.main_product.get_num()))},
                            {"den", to_string(Integer(lower.main_product.get_den()))}};
            j["ratio"] = lower.ratio;
            j["z_admissible"] = lower.z_admissible.value_or(false);
            j["conditions"] = {{"cond1", cond.cond1_pass},
                               {"cond2", cond.cond2_pass},
                               {"cond3", cond.cond3_pass},
                               {"cond3_sum", cond.cond3_sum},
                               {"cond3_bound", cond.cond3_bound}};
            emit(g, j.dump(2) + "\n");
        } else if (cmd_sat->parsed()) {
            auto cfg = require_config(g.config_path);
            SaturationQuery q;
            q.spec = cfg.group;
            q.f = resolve_function(cfg.group, sat_f);
            q.alpha = sat_alpha ? sat_alpha : cfg.group.level;
            q.S = cfg.S;
            q.beta = sat_beta;
            q.T = sat_T;
            q.M = integer_from_string(sat_M);
            q.r = sat_r;
            const u64 B = static_cast<u64>(
                              std::ceil(std::pow(static_cast<double>(q.T), q.beta))) +
                          1;
            auto cert = certify_gcd(cfg.group, q.f, q.alpha, std::max<i64>(q.T, 32),
                                    std::max<u64>(B, 64), opts);
            auto res = saturation_scan(q, cert, opts, 64);
            nlohmann::json hits = nlohmann::json::array();
            for (const auto& h : res.sample_hits) {
                nlohmann::json jh;
                jh["g"] = coords_to_json(h.g.coords);
                jh["value"] = to_string(h.value);
                jh["factors"] = nlohmann::json::array();
                for (const auto& pf : h.factorization.factors)
                    jh["factors"].push_back(
                        {{"p", to_string(pf.p)}, {"e", std::to_string(pf.exponent)}});
                jh["outside_count"] = h.outside_count;
                hits.push_back(jh);
            }
            emit(g, hits.dump(2) + "\n");
        } else if (cmd_avoid->parsed()) {
            auto cfg = require_config(g.config_path);
            auto ctx = derive_context(cfg, g.threads);
            auto state_json = load_json_file(avoid_state);
            AvoidanceState state;
            state.spec = cfg.group;
            state.torus = ctx.torus;
            state.P_prime = make_element(cfg.group, coords_from_json(state_json.at("p_prime")));
            for (const auto& p : state_json.at("s0"))
                state.S0.push_back(integer_from_string(p.get<std::string>()));
            state.r0 = std::stoull(state_json.at("r0").get<std::string>());
            state.n_fiber = state_json.contains("n_fiber")
                                ? std::stoull(state_json.at("n_fiber").get<std::string>())
                                : ctx.n_fiber;
            auto outcome = select_avoiding(state, cfg.subset);
            nlohmann::json j;
            j["l"] = std::to_string(outcome.l);
            j["P_dprime"] = coords_to_json(outcome.P_dprime.coords);
            j["orbit_size"] = std::to_string(outcome.orbit_size);
            j["fiber_product"] = to_string(outcome.fiber_product);
            j["fiber_sum"] = std::to_string(outcome.fiber_sum);
            j["per_prime"] = nlohmann::json::array();
            GroupElement Q = torus_unit_element(cfg.group, ctx.torus);
            for (const auto& tr : outcome.per_prime) {
                nlohmann::json jp;
                jp["p"] = to_string(tr.p);
                jp["order"] = std::to_string(tr.order);
                jp["fiber_count"] = std::to_string(tr.fiber_count);
                jp["orbit_distinct"] = std::to_string(tr.orbit_distinct);
                // full reduction table of the orbit mod p
                nlohmann::json reds = nlohmann::json::array();
                GroupElement cur = state.P_prime;
                for (u64 l = 0; l < outcome.orbit_size; ++l) {
                    auto r = reduce_mod(cur, tr.p.get_ui());
                    reds.push_back({std::to_string(r.coords[0]), std::to_string(r.coords[1]),
                                    std::to_string(r.coords[2]), std::to_string(r.coords[3])});
                    cur = multiply(Q, cur);
                }
                jp["reductions"] = reds;
                j["per_prime"].push_back(jp);
            }
            emit(g, j.dump(2) + "\n");
        } else if (cmd_solve->parsed()) {
            auto cfg = require_config(g.config_path);
            if (vb_opt->count() > 0) cfg.budgets.verify_bound = vb;
            auto result = solve_config(cfg, g.threads);
            emit(g, certificate_to_json(result.certificate).dump(2) + "\n");
        } else if (cmd_verify->parsed()) {
            auto cfg = require_config(g.config_path);
            if (vb_opt->count() > 0) cfg.budgets.verify_bound = vb;
            auto rep = verify_certificate_json(cfg, load_json_file(verify_cert), g.threads);
            nlohmann::json j;
            j["pass"] = rep.pass;
            j["failures"] = rep.failures;
            j["notes"] = rep.notes;
            emit(g, j.dump(2) + "\n");
            if (!rep.pass) {
                std::cerr << "certificate INVALID\n";
                for (const auto& f : rep.failures) std::cerr << "  - " << f << "\n";
                return 1;
            }
            std::cerr << "certificate valid\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

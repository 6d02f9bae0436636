// gfrag: command line front end for the growth-fragmentation library.
//
// Exit codes: 0 success, 1 solver or convergence failure, 2 usage or config error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gfrag/errors.hpp"
#include "gfrag/harness.hpp"
#include "gfrag/io.hpp"
#include "gfrag/kernel_analysis.hpp"
#include "json.hpp"

#ifndef GFRAG_DEFAULT_GOLDEN
#define GFRAG_DEFAULT_GOLDEN "tests/golden/golden.json"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gfrag;

namespace {

struct Run {
    std::string subcommand;
    std::string out_dir;
    json config = json::object();
    json inputs = json::object();
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& name, const std::string& content) {
        std::string p = (fs::path(out_dir) / name).string();
        write_file_atomic(p, content);
        outputs.push_back(p);
    }

    void manifest(int status) {
        if (out_dir.empty()) return;
        json m;
        m["subcommand"] = subcommand;
        m["version"] = kVersion;
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m["exit_status"] = status;
        write_file_atomic((fs::path(out_dir) / "manifest.json").string(), m.dump(2) + "\n");
    }
};

std::string run_dir(const std::string& requested, const std::string& sub, const std::string& key) {
    if (!requested.empty()) return requested;
    return (fs::path("runs") / (sub + "-" + fnv1a_hex(key))).string();
}

json kv_json(const KeyValues& kv) {
    json j = json::object();
    for (auto& [k, v] : kv) j[k] = v;
    return j;
}

json defects_json(const IdentityDefects& d) {
    json j;
    j["lambda_vs_int_BN"] = d.lambda_defect;
    j["first_moment"] = d.moment_defect;
    j["first_moment_outflow_term"] = d.outflow_term;
    j["first_moment_with_outflow"] = d.moment_defect_with_outflow;
    return j;
}

// Grid from a node-valued csv: x_0 = 0, uniform spacing.
Grid grid_from_csv(const CsvTable& t) {
    const auto& x = t.columns.at(0);
    if (x.size() < 3) throw ConfigError("csv needs at least three rows");
    Grid g = build_grid(x.back(), static_cast<int>(x.size()) - 1);
    for (int i = 0; i <= g.ka; ++i)
        if (std::abs(x[i] - g.x(i)) > 1e-9 * std::max(1.0, g.L)) throw ConfigError("csv nodes are not uniform from 0");
    return g;
}

double lambda_from_json(const std::string& path, const char* key) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.contains(key)) throw ConfigError(path + " lacks " + key);
    return j[key].get<double>();
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw InvalidArgument("bad alpha range");
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"growth-fragmentation direct and inverse solver"};
    app.require_subcommand(1);
    std::string out;

    // direct
    auto* direct = app.add_subcommand("direct", "solve for the steady profile and Malthus parameter");
    std::string d_config, d_init;
    double d_tol = NAN, d_safety = NAN;
    long d_max = 0, d_snap = 0;
    direct->add_option("--config", d_config, "problem config file")->required()->check(CLI::ExistingFile);
    direct->add_option("--init", d_init, "override initial.kind")->check(CLI::IsMember({"step", "maxwellian"}));
    direct->add_option("--tol", d_tol, "stopping rate (L1 change per unit time)");
    direct->add_option("--max-steps", d_max, "iteration cap");
    direct->add_option("--safety", d_safety, "CFL safety factor in (0,1]");
    direct->add_option("--snapshot-every", d_snap, "write n every S steps");
    direct->add_option("--out", out, "run directory");

    // measure
    auto* measure = app.add_subcommand("measure", "add multiplicative noise to a steady profile");
    std::string m_profile, m_summary;
    double m_lambda = NAN, m_eps = 0.0;
    std::uint64_t m_seed = 0;
    bool m_lnoise = false;
    measure->add_option("--profile", m_profile, "steady csv (x, N)")->required()->check(CLI::ExistingFile);
    auto* m_sum_opt = measure->add_option("--summary", m_summary, "summary.json from direct")->check(CLI::ExistingFile);
    measure->add_option("--lambda", m_lambda, "Malthus parameter")->excludes(m_sum_opt);
    measure->add_option("--epsilon", m_eps, "noise level in [0,1]")->required();
    measure->add_option("--seed", m_seed, "RNG seed");
    measure->add_flag("--lambda-noise", m_lnoise, "also perturb lambda");
    measure->add_option("--out", out, "run directory");

    // invert
    auto* invert = app.add_subcommand("invert", "reconstruct H = BN from a measurement");
    std::string i_config, i_meas, i_sidecar, i_method = "filter", i_gcsv, i_truth, i_crule = "moment";
    double i_lambda = NAN, i_alpha = 0.01, i_k = 2.34, i_p = 4.0, i_floor = NAN, i_truec = NAN;
    invert->add_option("--config", i_config, "problem config (grid, g, kernel, B for scoring)")
        ->required()
        ->check(CLI::ExistingFile);
    invert->add_option("--measurement", i_meas, "noisy csv (x, N_eps)")->required()->check(CLI::ExistingFile);
    auto* i_side = invert->add_option("--sidecar", i_sidecar, "measurement.json")->check(CLI::ExistingFile);
    invert->add_option("--lambda", i_lambda, "measured Malthus parameter")->excludes(i_side);
    invert->add_option("--method", i_method, "brute | qr | filter")->check(CLI::IsMember({"brute", "qr", "filter"}));
    invert->add_option("--alpha", i_alpha, "regularization parameter");
    invert->add_option("--k", i_k, "quasi-reversibility exponent");
    invert->add_option("--p", i_p, "weight exponent for diagnostics");
    invert->add_option("--n-floor", i_floor, "division threshold for B = H/N");
    invert->add_option("--true-c", i_truec, "use this c instead of the estimator");
    invert->add_option("--c-rule", i_crule, "filtering c: moment | closed")->check(CLI::IsMember({"moment", "closed"}));
    invert->add_option("--g-csv", i_gcsv, "g on the grid (x, g); default from config")->check(CLI::ExistingFile);
    invert->add_option("--truth", i_truth, "steady csv for scoring against B N")->check(CLI::ExistingFile);
    invert->add_option("--out", out, "run directory");

    // coercivity
    auto* coer = app.add_subcommand("coercivity", "certify C_r D_{p-r} < 1/4 for a kernel");
    std::string c_config, c_kernel = "uniform";
    double c_L = 25.0, c_p = 4.0, c_r = 2.0, c_xmax = -1.0, c_xmin = 0.0;
    int c_ka = 300;
    auto* c_cfg_opt = coer->add_option("--config", c_config, "problem config")->check(CLI::ExistingFile);
    coer->add_option("--kernel", c_kernel, "uniform | gaussian | mitosis")
        ->check(CLI::IsMember({"uniform", "gaussian", "mitosis"}))
        ->excludes(c_cfg_opt);
    coer->add_option("--L", c_L, "domain length")->excludes(c_cfg_opt);
    coer->add_option("--ka", c_ka, "cells")->excludes(c_cfg_opt);
    coer->add_option("--p", c_p, "weight exponent");
    coer->add_option("--r", c_r, "split exponent");
    coer->add_option("--row-xmax", c_xmax, "largest row used for C_r (default L/2)");
    coer->add_option("--x-min", c_xmin, "skip rows and columns below this size");
    coer->add_option("--out", out, "run directory");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "error versus alpha over noise levels and seeds");
    std::string s_config, s_id, s_method = "filter", s_crule = "moment";
    std::vector<double> s_eps{0.0}, s_alphas;
    int s_seeds = 10, s_count = 12;
    double s_amin = 1e-3, s_amax = 0.5, s_k = 2.34, s_p = 4.0;
    unsigned s_threads = 0;
    auto* s_cfg_opt = sweep->add_option("--config", s_config, "problem config")->check(CLI::ExistingFile);
    sweep->add_option("--golden-id", s_id, "built-in reference config id")->excludes(s_cfg_opt);
    sweep->add_option("--method", s_method, "brute | qr | filter")->check(CLI::IsMember({"brute", "qr", "filter"}));
    sweep->add_option("--eps", s_eps, "noise levels")->delimiter(',');
    sweep->add_option("--seeds", s_seeds, "seeds 0..n-1")->check(CLI::PositiveNumber);
    auto* s_al = sweep->add_option("--alphas", s_alphas, "explicit ascending alpha grid")->delimiter(',');
    sweep->add_option("--alpha-min", s_amin, "log grid start")->excludes(s_al);
    sweep->add_option("--alpha-max", s_amax, "log grid end")->excludes(s_al);
    sweep->add_option("--alpha-count", s_count, "log grid size")->excludes(s_al);
    sweep->add_option("--k", s_k, "quasi-reversibility exponent");
    sweep->add_option("--p", s_p, "weight exponent");
    sweep->add_option("--c-rule", s_crule, "filtering c: moment | closed")->check(CLI::IsMember({"moment", "closed"}));
    sweep->add_option("--threads", s_threads, "worker threads (0 = all cores)");
    sweep->add_option("--out", out, "run directory");

    // golden
    auto* golden = app.add_subcommand("golden", "regression suite over the reference configs");
    std::string g_file = GFRAG_DEFAULT_GOLDEN;
    double g_scale = 1.0;
    bool g_regen = false;
    golden->add_option("--golden-file", g_file, "golden values");
    golden->add_option("--tol-scale", g_scale, "multiply every tolerance");
    golden->add_flag("--regenerate", g_regen, "recompute and overwrite the golden file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Run run;
    int status = 0;
    try {
        if (direct->parsed()) {
            run.subcommand = "direct";
            KeyValues kv = read_key_values(d_config);
            if (!d_init.empty()) kv["initial.kind"] = d_init;
            LoadedConfig lc = load_config(kv, fs::path(d_config).parent_path().string().empty()
                                                  ? "."
                                                  : fs::path(d_config).parent_path().string());
            SolveOptions so;
            so.tol = std::isnan(d_tol) ? lc.solver.tol : d_tol;
            so.max_steps = d_max > 0 ? d_max : lc.solver.max_steps;
            so.safety = std::isnan(d_safety) ? lc.solver.safety : d_safety;
            run.config = kv_json(lc.resolved);
            run.config["solver.tol"] = so.tol;
            run.config["solver.max_steps"] = so.max_steps;
            run.config["solver.safety"] = so.safety;
            run.inputs["config"] = d_config;
            run.out_dir = run_dir(out, "direct", run.config.dump());
            fs::create_directories(run.out_dir);
            const Grid& gr = lc.problem.grid;
            if (d_snap > 0) {
                so.snapshot_every = d_snap;
                so.on_snapshot = [&](long step, const GridFunction& n) {
                    char name[64];
                    std::snprintf(name, sizeof name, "snapshot_%09ld.csv", step);
                    run.write(name, to_csv({"x", "n"}, {gr.nodes(), n.values}));
                };
            }
            std::cerr << "solving " << describe_problem(lc.problem) << "\n";
            EigenPair ep;
            try {
                ep = solve_steady(lc.problem, so);
            } catch (const ConvergenceFailure& e) {
                json s;
                s["error"] = e.what();
                s["residual"] = e.residual;
                s["iterations"] = e.iterations;
                run.write("summary.json", s.dump(2) + "\n");
                throw;
            }
            IdentityDefects d = check_eigen_identities(ep, lc.problem);
            run.write("steady.csv", to_csv({"x", "N"}, {gr.nodes(), ep.N.values}));
            json s;
            s["lambda0"] = ep.lambda0;
            s["iterations"] = ep.iterations;
            s["residual"] = ep.final_residual;
            s["dt"] = ep.dt;
            s["identity_defects"] = defects_json(d);
            const KernelReport& kr = lc.problem.kernel->report();
            s["kernel"] = {{"kind", lc.problem.kernel->kind()},
                           {"raw_first_moment_defect", kr.raw_moment_defect},
                           {"first_moment_defect", kr.moment_defect},
                           {"normalization_defect", kr.normalization_defect}};
            run.write("summary.json", s.dump(2) + "\n");
            std::cerr << "lambda0 = " << format_double(ep.lambda0) << " after " << ep.iterations << " steps\n";
        } else if (measure->parsed()) {
            run.subcommand = "measure";
            CsvTable t = read_csv(m_profile);
            Grid gr = grid_from_csv(t);
            GridFunction N = grid_function_from_csv(t, gr);
            double lam = !m_summary.empty() ? lambda_from_json(m_summary, "lambda0") : m_lambda;
            if (std::isnan(lam)) throw ConfigError("give --summary or --lambda");
            run.inputs["profile"] = m_profile;
            if (!m_summary.empty()) run.inputs["summary"] = m_summary;
            run.config = {{"epsilon", m_eps}, {"seed", m_seed}, {"lambda0", lam}, {"lambda_noise", m_lnoise}};
            run.out_dir = run_dir(out, "measure", run.config.dump() + m_profile);
            Measurement m = add_noise(N, lam, m_eps, m_seed, m_lnoise);
            run.write("noisy.csv", to_csv({"x", "N_eps"}, {gr.nodes(), m.N_eps.values}));
            json s = {{"epsilon", m.epsilon}, {"seed", m.seed}, {"lambda_eps", m.lambda_eps}};
            run.write("measurement.json", s.dump(2) + "\n");
        } else if (invert->parsed()) {
            run.subcommand = "invert";
            LoadedConfig lc = load_config_file(i_config);
            const Grid& gr = lc.problem.grid;
            CsvTable t = read_csv(i_meas);
            Measurement m;
            m.N_eps = grid_function_from_csv(t, gr);
            if (!i_sidecar.empty()) {
                m.lambda_eps = lambda_from_json(i_sidecar, "lambda_eps");
                m.epsilon = lambda_from_json(i_sidecar, "epsilon");
            } else if (!std::isnan(i_lambda)) {
                m.lambda_eps = i_lambda;
            } else {
                throw ConfigError("give --sidecar or --lambda");
            }
            GridFunction g = i_gcsv.empty() ? lc.problem.g.sample(gr) : grid_function_from_csv(read_csv(i_gcsv), gr);
            ReconstructionConfig rc;
            rc.method = parse_method(i_method);
            rc.alpha = i_alpha;
            rc.k = i_k;
            rc.p = i_p;
            if (!std::isnan(i_floor)) rc.N_floor = i_floor;
            if (!std::isnan(i_truec)) rc.true_c = i_truec;
            rc.reference_c = lc.problem.c;
            rc.c_rule = i_crule == "closed" ? CRule::closed_form : CRule::moment_matched;
            run.config = kv_json(lc.resolved);
            run.config["method"] = method_name(rc.method);
            run.config["alpha"] = rc.alpha;
            run.config["k"] = rc.k;
            run.config["p"] = rc.p;
            run.config["n_floor"] = rc.N_floor ? json(*rc.N_floor) : json("1e-12*max(N_eps)");
            run.config["true_c"] = rc.true_c ? json(*rc.true_c) : json(nullptr);
            run.config["c_rule"] = i_crule;
            run.inputs = {{"config", i_config}, {"measurement", i_meas}};
            run.out_dir = run_dir(out, "invert", run.config.dump() + i_meas);
            ReconstructionResult r = reconstruct(m, g, *lc.problem.kernel, rc);
            run.write("reconstruction.csv", to_csv({"x", "H", "B_rec"}, {gr.nodes(), r.H.values, r.B_rec.values}));
            json d;
            d["method"] = method_name(rc.method);
            d["c_est"] = r.c_est;
            d["c_relative_error"] = r.diagnostics.c_error ? json(*r.diagnostics.c_error) : json(nullptr);
            d["triangular_residual"] = r.diagnostics.residual;
            d["weighted_residual"] = r.diagnostics.weighted_residual;
            d["diagonal_min"] = r.diagnostics.diagonal_min;
            if (!i_truth.empty()) {
                GridFunction Nt = grid_function_from_csv(read_csv(i_truth), gr);
                GridFunction H = pointwise_product(lc.problem.B.sample(gr), Nt);
                d["relative_l2_error"] = relative_l2_error(H, r.H);
                d["weighted_l2_error"] = weighted_l2_error(H, r.H, rc.p);
                run.inputs["truth"] = i_truth;
            }
            run.write("diagnostics.json", d.dump(2) + "\n");
        } else if (coer->parsed()) {
            run.subcommand = "coercivity";
            KernelMatrix K;
            if (!c_config.empty()) {
                LoadedConfig lc = load_config_file(c_config);
                K = *lc.problem.kernel;
                run.config = kv_json(lc.resolved);
            } else {
                KernelSpec ks = c_kernel == "uniform"    ? KernelSpec::uniform()
                                : c_kernel == "gaussian" ? KernelSpec::gaussian()
                                                         : KernelSpec::mitosis();
                K = build_kernel(ks, build_grid(c_L, c_ka));
                run.config = {{"kernel.kind", c_kernel}, {"L", c_L}, {"ka", c_ka}};
            }
            run.config["p"] = c_p;
            run.config["r"] = c_r;
            run.config["row_xmax"] = c_xmax < 0 ? K.grid().L / 2 : c_xmax;
            run.config["x_min"] = c_xmin;
            CoercivityReport rep = certify_coercivity(K, c_p, c_r, c_xmax, c_xmin);
            json j = {{"r", rep.r},         {"p", rep.p},       {"C_r", rep.C_r},
                      {"D_p_minus_r", rep.D_pr}, {"product", rep.product}, {"beta", rep.beta},
                      {"satisfied", rep.satisfied}};
            std::cout << j.dump() << "\n" << (rep.satisfied ? "PASS" : "FAIL") << "\n";
            if (!out.empty()) {
                run.out_dir = out;
                run.write("coercivity.json", j.dump(2) + "\n");
            }
        } else if (sweep->parsed()) {
            run.subcommand = "sweep";
            Truth truth;
            std::string id;
            if (!s_id.empty()) {
                truth = make_truth(to_problem(golden_config(s_id), 300));
                id = s_id;
                run.config["golden_id"] = s_id;
            } else if (!s_config.empty()) {
                LoadedConfig lc = load_config_file(s_config);
                SolveOptions so;
                so.tol = lc.solver.tol;
                so.max_steps = lc.solver.max_steps;
                so.safety = lc.solver.safety;
                truth = make_truth(lc.problem, so);
                id = fs::path(s_config).stem().string();
                run.config = kv_json(lc.resolved);
                run.inputs["config"] = s_config;
            } else {
                throw ConfigError("give --config or --golden-id");
            }
            SweepSpec sp;
            sp.method = parse_method(s_method);
            sp.epsilons = s_eps;
            for (int i = 0; i < s_seeds; ++i) sp.seeds.push_back(static_cast<std::uint64_t>(i));
            sp.alphas = s_alphas.empty() ? log_grid(s_amin, s_amax, s_count) : s_alphas;
            sp.base.k = s_k;
            sp.base.p = s_p;
            sp.base.c_rule = s_crule == "closed" ? CRule::closed_form : CRule::moment_matched;
            sp.threads = s_threads;
            SweepReport rep = sweep_alpha(truth, id, sp);
            run.config["method"] = method_name(sp.method);
            run.config["epsilons"] = sp.epsilons;
            run.config["seeds"] = s_seeds;
            run.config["alphas"] = sp.alphas;
            run.config["k"] = sp.base.k;
            run.config["p"] = sp.base.p;
            run.config["c_rule"] = s_crule;
            run.out_dir = run_dir(out, "sweep", rep.provenance + run.config.dump());
            run.write("sweep.csv", sweep_csv(rep));
            json j;
            j["config_id"] = rep.config_id;
            j["method"] = method_name(rep.method);
            j["provenance"] = rep.provenance;
            j["lambda0"] = truth.pair.lambda0;
            for (const auto& s : rep.summary) {
                json e;
                e["epsilon"] = s.epsilon;
                e["best_alpha"] = s.best_alpha;
                e["best_error"] = s.best_error;
                e["interior_minimum"] = s.interior_minimum;
                e["alphas"] = s.alphas;
                json me = json::array();
                for (double v : s.mean_error) me.push_back(std::isfinite(v) ? json(v) : json(nullptr));
                e["mean_error"] = me;
                j["summary"].push_back(e);
            }
            run.write("sweep.json", j.dump(2) + "\n");
            for (const auto& s : rep.summary)
                std::cerr << "eps " << s.epsilon << ": best alpha " << s.best_alpha << " error " << s.best_error
                          << "\n";
        } else if (golden->parsed()) {
            if (g_regen) {
                write_golden_file(g_file);
                std::cerr << "wrote " << g_file << "\n";
                return 0;
            }
            GoldenOptions go;
            go.path = g_file;
            go.tol_scale = g_scale;
            GoldenSummary s = run_golden_suite(go);
            std::cout << s.tap();
            return s.all_pass() ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        status = 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        status = 2;
    } catch (const ConvergenceFailure& e) {
        std::cerr << "convergence failure: " << e.what() << " (residual " << e.residual << ")\n";
        status = 1;
    } catch (const Error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        status = 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        status = 1;
    }
    try {
        run.manifest(status);
    } catch (const std::exception& e) {
        std::cerr << "cannot write manifest: " << e.what() << "\n";
        if (status == 0) status = 1;
    }
    return status;
}

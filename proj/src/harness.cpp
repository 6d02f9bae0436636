#include "gfrag/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "gfrag/errors.hpp"
#include "gfrag/io.hpp"
#include "json.hpp"

namespace gfrag {

const std::vector<NamedConfig>& golden_configs() {
    static const std::vector<NamedConfig> cfgs = [] {
        auto mk = [](std::string id, double c, double ge, RateSpec B, KernelSpec K, double qa, double fa,
                     double nqa = 0.0, double nfa = 0.0) {
            NamedConfig n;
            n.id = std::move(id);
            n.c = c;
            n.g = RateSpec::power(ge);
            n.B = std::move(B);
            n.kernel = std::move(K);
            n.qr_alpha = qa;
            n.filter_alpha = fa;
            n.noisy_qr_alpha = nqa;
            n.noisy_filter_alpha = nfa;
            return n;
        };
        const auto U = KernelSpec::uniform();
        const auto G = KernelSpec::gaussian(0.5, 0.5);
        return std::vector<NamedConfig>{
            mk("uni-x-bump", 0.015, 1.0, RateSpec::gaussian_bump(), U, 0.01, 0.00355, 0.01, 0.043),
            mk("uni-cbrt-tray", 0.5, 1.0 / 3.0, RateSpec::tray(), U, 0.00648, 0.013),
            mk("uni-sqrt-quad", 1.0, 0.5, RateSpec::capped_quadratic(), U, 0.0195, 0.037),
            mk("gau-x-tray", 0.1, 1.0, RateSpec::tray(), G, 0.03541, 0.001),
            mk("gau-cbrt-bump", 0.5, 1.0 / 3.0, RateSpec::gaussian_bump(), G, 0.03743, 0.003),
            mk("gau-sqrt-quad", 1.0, 0.5, RateSpec::capped_quadratic(), G, 0.03766, 0.03, 0.03766, 0.03),
        };
    }();
    return cfgs;
}

const NamedConfig& golden_config(const std::string& id) {
    for (auto& c : golden_configs())
        if (c.id == id) return c;
    throw InvalidArgument("unknown reference config '" + id + "'");
}

ProblemConfig to_problem(const NamedConfig& nc, int ka, InitialSpec init) {
    return make_config(nc.L, ka, nc.c, nc.g, nc.B, nc.kernel, std::move(init));
}

double relative_l2_error(const GridFunction& truth, const GridFunction& estimate) {
    if (truth.size() != estimate.size()) throw InvalidArgument("error needs functions on one grid");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double d = truth[i] - estimate[i];
        num += d * d;
        den += truth[i] * truth[i];
    }
    if (!(den > 0.0)) throw InvalidArgument("truth has zero norm");
    return std::sqrt(num / den);
}

double weighted_l2_error(const GridFunction& truth, const GridFunction& estimate, double p) {
    if (truth.size() != estimate.size()) throw InvalidArgument("error needs functions on one grid");
    double num = 0.0, den = 0.0;
    for (int i = 1; i <= truth.grid.ka; ++i) {
        double w = std::pow(truth.grid.x(i), p);
        double d = truth[i] - estimate[i];
        num += w * d * d;
        den += w * truth[i] * truth[i];
    }
    if (!(den > 0.0)) throw InvalidArgument("truth has zero norm");
    return std::sqrt(num / den);
}

Truth make_truth(const ProblemConfig& cfg, const SolveOptions& opt) {
    Truth t;
    t.problem = cfg;
    t.pair = solve_steady(cfg, opt);
    t.g = cfg.g.sample(cfg.grid);
    t.H = pointwise_product(cfg.B.sample(cfg.grid), t.pair.N);
    return t;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string describe_problem(const ProblemConfig& cfg) {
    std::ostringstream os;
    os << "L=" << format_double(cfg.grid.L) << ";ka=" << cfg.grid.ka << ";c=" << format_double(cfg.c)
       << ";g=" << cfg.g.describe() << ";B=" << cfg.B.describe() << ";kernel=" << cfg.kernel_spec.describe()
       << ";initial=" << cfg.initial.describe();
    return os.str();
}

SweepReport sweep_alpha(const Truth& truth, const std::string& config_id, const SweepSpec& spec) {
    if (spec.alphas.empty()) throw InvalidArgument("alpha grid is empty");
    if (!std::is_sorted(spec.alphas.begin(), spec.alphas.end())) throw InvalidArgument("alpha grid must ascend");
    if (spec.seeds.empty()) throw InvalidArgument("no seeds");
    std::vector<double> eps = spec.epsilons;
    std::sort(eps.begin(), eps.end());

    SweepReport rep;
    rep.config_id = config_id;
    rep.method = spec.method;
    for (double e : eps)
        for (double a : spec.alphas)
            for (auto s : spec.seeds) {
                SweepRow row;
                row.alpha = a;
                row.epsilon = e;
                row.seed = s;
                rep.rows.push_back(row);
            }

    const KernelMatrix& K = *truth.problem.kernel;
    const double c_true = truth.problem.c;
    auto run_row = [&](SweepRow& row) {
        try {
            Measurement m = add_noise(truth.pair, row.epsilon, row.seed);
            ReconstructionConfig rc = spec.base;
            rc.method = spec.method;
            rc.alpha = row.alpha;
            rc.reference_c = c_true;
            ReconstructionResult r = reconstruct(m, truth.g, K, rc);
            row.error = relative_l2_error(truth.H, r.H);
            row.weighted_error = weighted_l2_error(truth.H, r.H, rc.p);
            row.c_error = std::abs(r.c_est - c_true) / c_true;
            if (!std::isfinite(row.error)) throw Error("non-finite reconstruction");
        } catch (const std::exception& e) {
            row.failed = true;
            row.failure = e.what();
            row.error = row.weighted_error = row.c_error = std::numeric_limits<double>::quiet_NaN();
        }
    };

    unsigned nt = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, static_cast<unsigned>(rep.rows.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < rep.rows.size();) run_row(rep.rows[i]);
    };
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const std::size_t ns = spec.seeds.size(), na = spec.alphas.size();
    for (std::size_t ei = 0; ei < eps.size(); ++ei) {
        SweepSummary s;
        s.epsilon = eps[ei];
        s.alphas = spec.alphas;
        std::size_t best = na;
        for (std::size_t ai = 0; ai < na; ++ai) {
            double sum = 0.0;
            std::size_t ok = 0;
            for (std::size_t si = 0; si < ns; ++si) {
                const SweepRow& r = rep.rows[(ei * na + ai) * ns + si];
                if (!r.failed) {
                    sum += r.error;
                    ++ok;
                }
            }
            double mean = ok == ns ? sum / ok : std::numeric_limits<double>::quiet_NaN();
            s.mean_error.push_back(mean);
            if (std::isfinite(mean) && (best == na || mean < s.mean_error[best])) best = ai;
        }
        if (best < na) {
            s.best_alpha = spec.alphas[best];
            s.best_error = s.mean_error[best];
            s.interior_minimum = best > 0 && best + 1 < na;
        } else {
            s.best_alpha = s.best_error = std::numeric_limits<double>::quiet_NaN();
        }
        rep.summary.push_back(s);
    }

    std::ostringstream prov;
    prov << describe_problem(truth.problem) << "|method=" << method_name(spec.method)
         << "|k=" << format_double(spec.base.k) << "|p=" << format_double(spec.base.p)
         << "|c_rule=" << (spec.base.c_rule == CRule::moment_matched ? "moment" : "closed") << "|version=" << kVersion;
    rep.provenance = fnv1a_hex(prov.str());
    return rep;
}

std::string sweep_csv(const SweepReport& r) {
    std::string s = "alpha,epsilon,seed,error,c_error,weighted_error,failed\n";
    for (const auto& row : r.rows) {
        s += format_double(row.alpha) + "," + format_double(row.epsilon) + "," + std::to_string(row.seed) + "," +
             format_double(row.error) + "," + format_double(row.c_error) + "," + format_double(row.weighted_error) +
             "," + (row.failed ? "1" : "0") + "\n";
    }
    return s;
}

// ---- golden suite ---------------------------------------------------------

namespace {

constexpr int kGoldenKa = 300;
constexpr double kNoisyEps = 0.05;
constexpr std::uint64_t kNoisySeed = 0;

// Relative tolerances for the committed values (stored with 9 digits).
constexpr double kTolLambda = 1e-7;
constexpr double kTolProfileL1 = 1e-7;
constexpr double kTolError = 1e-6;

double round9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::stod(buf);
}

struct GoldenValues {
    double lambda0 = 0.0;
    std::vector<double> profile;
    double qr_error = 0.0;
    double filter_error = 0.0;
    double noisy_qr_error = std::numeric_limits<double>::quiet_NaN();
    double noisy_filter_error = std::numeric_limits<double>::quiet_NaN();
    IdentityDefects defects;
};

double recon_error(const Truth& t, Method m, double alpha, double eps) {
    Measurement meas = add_noise(t.pair, eps, kNoisySeed);
    ReconstructionConfig rc;
    rc.method = m;
    rc.alpha = alpha;
    return relative_l2_error(t.H, reconstruct(meas, t.g, *t.problem.kernel, rc).H);
}

GoldenValues compute_values(const NamedConfig& nc, const ProblemConfig& cfg) {
    Truth t = make_truth(cfg);
    GoldenValues v;
    v.lambda0 = t.pair.lambda0;
    v.profile = t.pair.N.values;
    v.defects = check_eigen_identities(t.pair, cfg);
    v.qr_error = recon_error(t, Method::qr, nc.qr_alpha, 0.0);
    v.filter_error = recon_error(t, Method::filtering, nc.filter_alpha, 0.0);
    if (nc.noisy_qr_alpha > 0.0) v.noisy_qr_error = recon_error(t, Method::qr, nc.noisy_qr_alpha, kNoisyEps);
    if (nc.noisy_filter_alpha > 0.0)
        v.noisy_filter_error = recon_error(t, Method::filtering, nc.noisy_filter_alpha, kNoisyEps);
    return v;
}

std::string fmt_rel(double got, double want) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "got %.10g want %.10g rel %.3g", got, want,
                  std::abs(got - want) / std::max(std::abs(want), 1e-300));
    return buf;
}

}  // namespace

bool GoldenSummary::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const GoldenCheck& c) { return c.pass; });
}

std::string GoldenSummary::tap() const {
    std::string s = "1.." + std::to_string(checks.size()) + "\n";
    for (std::size_t i = 0; i < checks.size(); ++i)
        s += (checks[i].pass ? "ok " : "not ok ") + std::to_string(i + 1) + " - " + checks[i].name + " # " +
             checks[i].detail + "\n";
    return s;
}

void write_golden_file(const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["ka"] = kGoldenKa;
    j["digits"] = 9;
    for (const auto& nc : golden_configs()) {
        GoldenValues v = compute_values(nc, to_problem(nc, kGoldenKa));
        nlohmann::ordered_json e;
        e["lambda0"] = round9(v.lambda0);
        e["qr_alpha"] = nc.qr_alpha;
        e["qr_error"] = round9(v.qr_error);
        e["filter_alpha"] = nc.filter_alpha;
        e["filter_error"] = round9(v.filter_error);
        if (nc.noisy_qr_alpha > 0.0) e["noisy_qr_error"] = round9(v.noisy_qr_error);
        if (nc.noisy_filter_alpha > 0.0) e["noisy_filter_error"] = round9(v.noisy_filter_error);
        std::vector<double> prof;
        for (double x : v.profile) prof.push_back(round9(x));
        e["profile"] = prof;
        j["configs"][nc.id] = e;
    }
    write_file_atomic(path, j.dump(1) + "\n");
}

GoldenSummary run_golden_suite(const GoldenOptions& opt) {
    std::ifstream f(opt.path);
    if (!f) throw ConfigError("golden file missing: " + opt.path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("golden file unreadable: " + std::string(e.what()));
    }
    GoldenSummary out;
    auto add = [&](std::string name, bool pass, std::string detail) {
        out.checks.push_back({std::move(name), pass, std::move(detail)});
    };
    const double s = opt.tol_scale;

    for (const auto& nc : golden_configs()) {
        if (!j["configs"].contains(nc.id)) throw ConfigError("golden file lacks " + nc.id);
        const auto& e = j["configs"][nc.id];
        ProblemConfig cfg = to_problem(nc, kGoldenKa);
        if (opt.kernel_hook) {
            KernelMatrix K = *cfg.kernel;
            opt.kernel_hook(K);
            cfg.kernel = std::make_shared<const KernelMatrix>(std::move(K));
        }
        const std::string& id = nc.id;

        // Sentinel: one fragmentation step creates exactly dt * int B n. A flat
        // n weighs every column the division rate touches; size 0 has no
        // daughters and is left empty.
        {
            GridFunction n(cfg.grid, 1.0 / cfg.grid.L);
            n[0] = 0.0;
            GridFunction B = cfg.B.sample(cfg.grid);
            double dt = cfl_dt(cfg, 0.9);
            GridFunction o = fragmentation_step(n, B, *cfg.kernel, dt);
            double gain = 0.0, expect = dt * quadrature(pointwise_product(B, n), 0.0);
            for (std::size_t i = 0; i < n.size(); ++i) gain += (o[i] - n[i]) * cfg.grid.dx;
            double d = std::abs(gain - expect);
            add(id + " number-balance", d <= 1e-12 * std::max(1.0, expect), "defect " + format_double(d));
        }
        double nd = 0.0;
        for (int jj = 1; jj <= cfg.grid.ka; ++jj) nd = std::max(nd, std::abs(cfg.kernel->column_mass(jj) - 1.0));
        add(id + " kernel-normalization", nd <= 1e-12, "defect " + format_double(nd));

        GoldenValues v;
        try {
            v = compute_values(nc, cfg);
        } catch (const std::exception& ex) {
            add(id + " solve", false, ex.what());
            continue;
        }
        double want = e["lambda0"].get<double>();
        add(id + " lambda0", std::abs(v.lambda0 - want) <= s * kTolLambda * std::abs(want), fmt_rel(v.lambda0, want));

        auto prof = e["profile"].get<std::vector<double>>();
        double l1 = 0.0;
        if (prof.size() != v.profile.size()) {
            add(id + " profile", false, "length mismatch");
        } else {
            for (std::size_t i = 0; i < prof.size(); ++i) l1 += std::abs(prof[i] - v.profile[i]);
            l1 *= cfg.grid.dx;
            add(id + " profile", l1 <= s * kTolProfileL1, "L1 distance " + format_double(l1));
        }
        add(id + " identities", v.defects.lambda_defect <= 0.02 * s && v.defects.moment_defect <= 0.02 * s,
            "lambda " + format_double(v.defects.lambda_defect) + " moment " + format_double(v.defects.moment_defect));

        auto err_check = [&](const char* key, double got) {
            if (!e.contains(key)) return;
            double w = e[key].get<double>();
            add(id + " " + key, std::abs(got - w) <= s * kTolError * std::abs(w), fmt_rel(got, w));
        };
        err_check("qr_error", v.qr_error);
        err_check("filter_error", v.filter_error);
        err_check("noisy_qr_error", v.noisy_qr_error);
        err_check("noisy_filter_error", v.noisy_filter_error);
    }
    return out;
}

}  // namespace gfrag

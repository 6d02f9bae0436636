#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfrag/core.hpp"
#include "gfrag/direct.hpp"
#include "gfrag/inverse.hpp"

namespace gfrag {

inline constexpr const char* kVersion = "1.0.0";

// One of the six reference setups (three B profiles per kernel) with the
// regularization parameters used for its reference reconstructions.
struct NamedConfig {
    std::string id;
    double L = 25.0;
    double c = 1.0;
    RateSpec g;
    RateSpec B;
    KernelSpec kernel;
    double qr_alpha = 0.01;
    double filter_alpha = 0.01;
    // ε = 0.05 reference parameters; zero when the setup has none
    double noisy_qr_alpha = 0.0;
    double noisy_filter_alpha = 0.0;
};

const std::vector<NamedConfig>& golden_configs();
const NamedConfig& golden_config(const std::string& id);
ProblemConfig to_problem(const NamedConfig& nc, int ka, InitialSpec init = {});

double relative_l2_error(const GridFunction& truth, const GridFunction& estimate);
// same ratio in L2(x^p dx)
double weighted_l2_error(const GridFunction& truth, const GridFunction& estimate, double p);

// Direct-problem output used as ground truth for inversions.
struct Truth {
    ProblemConfig problem;
    EigenPair pair;
    GridFunction g;
    GridFunction H;  // B N
};

Truth make_truth(const ProblemConfig& cfg, const SolveOptions& opt = {});

struct SweepRow {
    double alpha = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double error = 0.0;
    double c_error = 0.0;
    double weighted_error = 0.0;
    bool failed = false;
    std::string failure;
};

struct SweepSummary {
    double epsilon = 0.0;
    std::vector<double> alphas;
    std::vector<double> mean_error;  // NaN where every seed failed
    double best_alpha = 0.0;
    double best_error = 0.0;
    bool interior_minimum = false;
};

struct SweepReport {
    std::string config_id;
    Method method = Method::filtering;
    std::vector<SweepRow> rows;  // sorted by (epsilon, alpha, seed)
    std::vector<SweepSummary> summary;
    std::string provenance;
};

struct SweepSpec {
    Method method = Method::filtering;
    std::vector<double> epsilons{0.0};
    std::vector<std::uint64_t> seeds{0};
    std::vector<double> alphas;  // ascending
    ReconstructionConfig base;   // k, p, floors, c rule
    unsigned threads = 0;        // 0 = hardware concurrency
};

SweepReport sweep_alpha(const Truth& truth, const std::string& config_id, const SweepSpec& spec);
std::string sweep_csv(const SweepReport& r);

std::string fnv1a_hex(const std::string& s);
std::string describe_problem(const ProblemConfig& cfg);

struct GoldenOptions {
    std::string path;
    double tol_scale = 1.0;
    // Test hook applied to each kernel after construction.
    std::function<void(KernelMatrix&)> kernel_hook;
};

struct GoldenCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct GoldenSummary {
    std::vector<GoldenCheck> checks;
    bool all_pass() const;
    std::string tap() const;
};

GoldenSummary run_golden_suite(const GoldenOptions& opt);
// Recomputes every golden value and writes the file.
void write_golden_file(const std::string& path);

}  // namespace gfrag

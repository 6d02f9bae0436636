#pragma once

#include <optional>
#include <string>

#include "gfrag/core.hpp"
#include "gfrag/measurement.hpp"

namespace gfrag {

enum class Method { brute, qr, filtering };

std::string method_name(Method m);
Method parse_method(const std::string& s);

// How reconstruct_filtering picks c.
//   moment_matched: c = -lambda sum x_i N_a,i / sum x_i d(gN)_a,i, the value for
//     which the right-hand side has the first moment the kernel operator
//     annihilates, so the triangular system is solvable with decaying H.
//   closed_form: estimate_c_filtering.
enum class CRule { moment_matched, closed_form };

struct ReconstructionConfig {
    Method method = Method::filtering;
    double alpha = 0.01;
    double k = 2.34;
    double p = 4.0;
    std::optional<double> N_floor;  // default 1e-12 max(N_eps)
    std::optional<double> true_c;   // overrides the estimator
    std::optional<double> reference_c;  // only scored, never used
    CRule c_rule = CRule::moment_matched;

    void validate() const;
};

struct ReconstructionDiagnostics {
    double residual = 0.0;       // |A H - L|_inf / |L|_inf
    double diagonal_min = 0.0;
    double weighted_residual = 0.0;  // same residual in the x^p weighted rows
    std::optional<double> c_error;   // |c_est - c| / c when c is known
};

struct ReconstructionResult {
    GridFunction H;
    GridFunction B_rec;
    double c_est = 0.0;
    ReconstructionConfig config;
    ReconstructionDiagnostics diagnostics;
};

double estimate_c_qr(const Measurement& m, const GridFunction& g);
double estimate_c_filtering(const Measurement& m, const GridFunction& g, double alpha);
double estimate_c_moment_matched(const Measurement& m, const GridFunction& g, double alpha);

ReconstructionResult reconstruct_brute(const Measurement& m, double c, const GridFunction& g,
                                       const KernelMatrix& K, const ReconstructionConfig& cfg = {Method::brute});
ReconstructionResult reconstruct_qr(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                    const ReconstructionConfig& cfg);
ReconstructionResult reconstruct_filtering(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                           const ReconstructionConfig& cfg);

// Dispatch on cfg.method; brute uses estimate_c_qr unless true_c is set.
ReconstructionResult reconstruct(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                 const ReconstructionConfig& cfg);

GridFunction recover_B(const GridFunction& H, const GridFunction& N_ref, double N_floor);

}  // namespace gfrag

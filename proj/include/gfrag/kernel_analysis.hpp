#pragma once

#include <cstdint>
#include <vector>

#include "gfrag/core.hpp"

namespace gfrag {

// max over columns j >= 1 of sum_i (x_i/x_j)^q k_ij dx.
// Columns and rows with x < x_min are left out of the sup; the first few
// columns hold only a couple of nodes each and can dominate it.
double moment_D(const KernelMatrix& K, double q, double x_min = 0.0);

// max over rows i >= 1 with x_i <= row_xmax of sum_{j>=i} (x_i/x_j)^r k_ij dx.
// row_xmax < 0 means L/2: rows near L lose part of their tail to the cut.
double moment_C(const KernelMatrix& K, double r, double row_xmax = -1.0, double x_min = 0.0);

struct CoercivityReport {
    double r = 0.0;
    double p = 0.0;
    double C_r = 0.0;
    double D_pr = 0.0;
    double product = 0.0;
    double beta = 0.0;
    bool satisfied = false;
};

CoercivityReport certify_coercivity(const KernelMatrix& K, double p, double r, double row_xmax = -1.0,
                                    double x_min = 0.0);

// A(u,u) = sum u_i^2 x_i^p dx - 2 sum_ij x_i^p u_i k_ij u_j dx^2
double quadratic_form(const KernelMatrix& K, const std::vector<double>& u, double p);
double weighted_norm2(const Grid& g, const std::vector<double>& u, double p);

// Smallest A(u,u)/|u|^2 over `samples` random vectors (u_0 = 0).
double sampled_coercivity(const KernelMatrix& K, double p, int samples, std::uint64_t seed);

}  // namespace gfrag

#pragma once

#include <functional>

#include "gfrag/core.hpp"

namespace gfrag {

struct EigenPair {
    GridFunction N;
    double lambda0 = 0.0;
    long iterations = 0;
    double final_residual = 0.0;  // L1 change per unit time
    double dt = 0.0;
};

double cfl_dt(const ProblemConfig& cfg, double safety = 0.9);

// Upwind transport, flux into node i is g_{i-1} n_{i-1}; nothing enters at 0.
GridFunction advection_step(const GridFunction& n, const ProblemConfig& cfg, double dt);

// (1 - dt B) n + 2 dt F, F_i = sum_{j>=i} k_ij B_j n_j dx
GridFunction fragmentation_step(const GridFunction& n, const GridFunction& B, const KernelMatrix& K, double dt);

struct SolveOptions {
    double tol = 1e-10;
    long max_steps = 5'000'000;
    double safety = 0.9;
    int lambda_window = 100;
    // Called every snapshot_every steps with (step, n) when set.
    long snapshot_every = 0;
    std::function<void(long, const GridFunction&)> on_snapshot;
};

EigenPair solve_steady(const ProblemConfig& cfg, const SolveOptions& opt = {});

struct IdentityDefects {
    double lambda_defect = 0.0;   // |l0 - int B N| / l0
    double moment_defect = 0.0;   // |int xN - (c/l0) int gN| / int xN
    // share of moment_defect explained by outflow c L g(L) N(L) / l0 at the cut
    double outflow_term = 0.0;
    double moment_defect_with_outflow = 0.0;
};

IdentityDefects check_eigen_identities(const EigenPair& pair, const ProblemConfig& cfg);

}  // namespace gfrag

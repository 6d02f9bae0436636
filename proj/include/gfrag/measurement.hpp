#pragma once

#include <cstdint>
#include <vector>

#include "gfrag/core.hpp"
#include "gfrag/direct.hpp"

namespace gfrag {

struct Measurement {
    GridFunction N_eps;
    double lambda_eps = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
};

// N_eps,i = max(N_i (1 + l_i eps), 0), l_i ~ U[-1/2, 1/2]. With perturb_lambda,
// one more draw l gives lambda_eps = lambda0 (1 + l eps).
Measurement add_noise(const EigenPair& pair, double epsilon, std::uint64_t seed, bool perturb_lambda = false);
Measurement add_noise(const GridFunction& N, double lambda0, double epsilon, std::uint64_t seed,
                      bool perturb_lambda = false);

struct MollifiedPair {
    GridFunction smoothed;
    GridFunction smoothed_derivative;
    double alpha = 0.0;
};

double mollifier_symbol(double xi, double alpha);

// Applies the symbol (and i xi times it) to v as one period of a periodic
// signal with spacing dx.
void periodic_filter(const std::vector<double>& v, double dx, double alpha, std::vector<double>& smoothed,
                     std::vector<double>& derivative);

// Spectral filter 1/sqrt(1 + a^2 xi^2) on a zero-padded copy of length 2(ka+1).
MollifiedPair mollify(const GridFunction& f, double alpha);

}  // namespace gfrag

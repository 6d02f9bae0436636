#include "gfrag/measurement.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "gfrag/errors.hpp"

namespace gfrag {

Measurement add_noise(const GridFunction& N, double lambda0, double epsilon, std::uint64_t seed,
                      bool perturb_lambda) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must lie in [0, 1]");
    Measurement m;
    m.N_eps = N;
    m.lambda_eps = lambda0;
    m.epsilon = epsilon;
    m.seed = seed;
    if (epsilon == 0.0) return m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (double& v : m.N_eps.values) v = std::max(v * (1.0 + U(rng) * epsilon), 0.0);
    if (perturb_lambda) m.lambda_eps = lambda0 * (1.0 + U(rng) * epsilon);
    return m;
}

Measurement add_noise(const EigenPair& pair, double epsilon, std::uint64_t seed, bool perturb_lambda) {
    return add_noise(pair.N, pair.lambda0, epsilon, seed, perturb_lambda);
}

namespace {

struct Plans {
    fftw_plan fwd;
    fftw_plan bwd;
};

// fftw planning is not thread safe; execution with fresh buffers is.
const Plans& plans_for(int m) {
    static std::mutex mu;
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    double* r = fftw_alloc_real(m);
    fftw_complex* c = fftw_alloc_complex(m / 2 + 1);
    Plans p{fftw_plan_dft_r2c_1d(m, r, c, FFTW_ESTIMATE), fftw_plan_dft_c2r_1d(m, c, r, FFTW_ESTIMATE)};
    fftw_free(r);
    fftw_free(c);
    return cache.emplace(m, p).first->second;
}

}  // namespace

double mollifier_symbol(double xi, double alpha) { return 1.0 / std::sqrt(1.0 + alpha * alpha * xi * xi); }

void periodic_filter(const std::vector<double>& v, double dx, double alpha, std::vector<double>& smoothed,
                     std::vector<double>& derivative) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be positive");
    const int m = static_cast<int>(v.size());
    if (m < 2) throw InvalidArgument("periodic filter needs two samples");
    const int h = m / 2 + 1;
    const Plans& p = plans_for(m);

    double* r = fftw_alloc_real(m);
    fftw_complex* F = fftw_alloc_complex(h);
    fftw_complex* G = fftw_alloc_complex(h);
    std::copy(v.begin(), v.end(), r);
    fftw_execute_dft_r2c(p.fwd, r, F);

    for (int k = 0; k < h; ++k) {
        double xi = 2.0 * std::numbers::pi * k / (m * dx);
        double rho = mollifier_symbol(xi, alpha);
        std::complex<double> s(F[k][0] * rho, F[k][1] * rho);
        std::complex<double> d = std::complex<double>(0.0, xi) * s;
        F[k][0] = s.real();
        F[k][1] = s.imag();
        G[k][0] = d.real();
        G[k][1] = d.imag();
    }

    smoothed.resize(m);
    derivative.resize(m);
    fftw_execute_dft_c2r(p.bwd, F, r);
    for (int i = 0; i < m; ++i) smoothed[i] = r[i] / m;
    fftw_execute_dft_c2r(p.bwd, G, r);
    for (int i = 0; i < m; ++i) derivative[i] = r[i] / m;

    fftw_free(r);
    fftw_free(F);
    fftw_free(G);
}

MollifiedPair mollify(const GridFunction& f, double alpha) {
    const std::size_t n = f.size();
    std::vector<double> padded(2 * n, 0.0), s, d;
    std::copy(f.values.begin(), f.values.end(), padded.begin());
    periodic_filter(padded, f.grid.dx, alpha, s, d);
    MollifiedPair out;
    out.alpha = alpha;
    out.smoothed = GridFunction(f.grid, std::vector<double>(s.begin(), s.begin() + n));
    out.smoothed_derivative = GridFunction(f.grid, std::vector<double>(d.begin(), d.begin() + n));
    return out;
}

}  // namespace gfrag

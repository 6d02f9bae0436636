#include "gfrag/kernel_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gfrag/errors.hpp"

namespace gfrag {

double moment_D(const KernelMatrix& K, double q, double x_min) {
    if (q < 0.0) throw InvalidArgument("moment_D needs q >= 0");
    const Grid& g = K.grid();
    double best = 0.0;
    for (int j = 1; j <= g.ka; ++j) {
        if (g.x(j) < x_min - 1e-12 * g.L) continue;
        double s = 0.0;
        for (int i = 0; i <= j; ++i) {
            double k = K(i, j);
            if (k != 0.0) s += std::pow(static_cast<double>(i) / j, q) * k;
        }
        best = std::max(best, s * g.dx);
    }
    return best;
}

double moment_C(const KernelMatrix& K, double r, double row_xmax, double x_min) {
    if (r < 0.0) throw InvalidArgument("moment_C needs r >= 0");
    const Grid& g = K.grid();
    if (row_xmax < 0.0) row_xmax = g.L / 2;
    double best = 0.0;
    for (int i = 1; i <= g.ka && g.x(i) <= row_xmax + 1e-12 * g.L; ++i) {
        if (g.x(i) < x_min - 1e-12 * g.L) continue;
        const double* row = K.row(i);
        double s = 0.0;
        for (int j = i; j <= g.ka; ++j)
            if (row[j] != 0.0) s += std::pow(static_cast<double>(i) / j, r) * row[j];
        best = std::max(best, s * g.dx);
    }
    return best;
}

CoercivityReport certify_coercivity(const KernelMatrix& K, double p, double r, double row_xmax, double x_min) {
    if (r < 0.0 || p < 0.0 || r > p) throw InvalidArgument("coercivity needs 0 <= r <= p");
    CoercivityReport rep;
    rep.r = r;
    rep.p = p;
    rep.C_r = moment_C(K, r, row_xmax, x_min);
    rep.D_pr = moment_D(K, p - r, x_min);
    rep.product = rep.C_r * rep.D_pr;
    rep.beta = 1.0 - 2.0 * std::sqrt(rep.product);
    rep.satisfied = rep.product < 0.25;
    return rep;
}

double weighted_norm2(const Grid& g, const std::vector<double>& u, double p) {
    double s = 0.0;
    for (int i = 1; i <= g.ka; ++i) s += u[i] * u[i] * std::pow(g.x(i), p);
    return s * g.dx;
}

double quadratic_form(const KernelMatrix& K, const std::vector<double>& u, double p) {
    const Grid& g = K.grid();
    double diag = 0.0, cross = 0.0;
    for (int i = 1; i <= g.ka; ++i) {
        double w = std::pow(g.x(i), p);
        diag += w * u[i] * u[i];
        const double* row = K.row(i);
        double s = 0.0;
        for (int j = i; j <= g.ka; ++j) s += row[j] * u[j];
        cross += w * u[i] * s;
    }
    return diag * g.dx - 2.0 * cross * g.dx * g.dx;
}

double sampled_coercivity(const KernelMatrix& K, double p, int samples, std::uint64_t seed) {
    const Grid& g = K.grid();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> u(g.size());
    double worst = INFINITY;
    for (int s = 0; s < samples; ++s) {
        // odd samples are nonnegative, where the gain term is largest
        u[0] = 0.0;
        for (int i = 1; i <= g.ka; ++i) u[i] = s % 2 ? std::abs(nd(rng)) : nd(rng);
        worst = std::min(worst, quadratic_form(K, u, p) / weighted_norm2(g, u, p));
    }
    return worst;
}

}  // namespace gfrag

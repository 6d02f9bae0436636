#include "gfrag/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfrag/errors.hpp"

namespace gfrag {

double cfl_dt(const ProblemConfig& cfg, double safety) {
    if (!(safety > 0.0) || safety > 1.0) throw InvalidArgument("safety must be in (0, 1]");
    const Grid& gr = cfg.grid;
    double m = 0.0;
    for (int i = 0; i <= gr.ka; ++i) {
        double x = gr.x(i);
        m = std::max(m, cfg.B(x) + cfg.c / gr.dx * cfg.g(x));
    }
    if (!(m > 0.0)) throw InvalidArgument("CFL bound undefined: B and c g vanish everywhere");
    return safety / m;
}

namespace {

void advect(const std::vector<double>& n, const std::vector<double>& g, double nu, std::vector<double>& out) {
    double prev = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        double f = g[i] * n[i];
        out[i] = n[i] - nu * (f - prev);
        prev = f;
    }
}

void fragment(const std::vector<double>& n, const std::vector<double>& B, const KernelMatrix& K, double dt,
              std::vector<double>& bn, std::vector<double>& out) {
    const Grid& gr = K.grid();
    const int ka = gr.ka;
    for (int j = 0; j <= ka; ++j) bn[j] = B[j] * n[j];
    for (int i = 0; i <= ka; ++i) {
        const double* row = K.row(i);
        double F = 0.0;
        for (int j = i; j <= ka; ++j) F += row[j] * bn[j];
        out[i] = (1.0 - dt * B[i]) * n[i] + 2.0 * dt * F * gr.dx;
    }
}

}  // namespace

GridFunction advection_step(const GridFunction& n, const ProblemConfig& cfg, double dt) {
    if (!(dt >= 0.0) || dt > cfl_dt(cfg, 1.0) * (1.0 + 1e-12))
        throw PreconditionError("time step violates the CFL bound");
    GridFunction out(n.grid);
    advect(n.values, cfg.g.sample(n.grid).values, cfg.c * dt / n.grid.dx, out.values);
    return out;
}

GridFunction fragmentation_step(const GridFunction& n, const GridFunction& B, const KernelMatrix& K, double dt) {
    double bmax = *std::max_element(B.values.begin(), B.values.end());
    if (dt * bmax > 1.0 + 1e-12) throw PreconditionError("dt * max B exceeds 1");
    GridFunction out(n.grid);
    std::vector<double> bn(n.size());
    fragment(n.values, B.values, K, dt, bn, out.values);
    return out;
}

EigenPair solve_steady(const ProblemConfig& cfg, const SolveOptions& opt) {
    cfg.validate();
    if (!(opt.tol > 0.0)) throw InvalidArgument("tol must be positive");
    const Grid& gr = cfg.grid;
    const double dx = gr.dx;
    const std::vector<double> g = cfg.g.sample(gr).values;
    const std::vector<double> B = cfg.B.sample(gr).values;
    if (*std::max_element(B.begin(), B.end()) <= 0.0)
        throw ConvergenceFailure("B vanishes on the grid: no division, no steady profile",
                                 std::numeric_limits<double>::infinity(), 0);
    const double dt = cfl_dt(cfg, opt.safety);
    const double nu = cfg.c * dt / dx;

    std::vector<double> n = cfg.initial.sample(gr).values;
    double m0 = 0.0;
    for (double v : n) m0 += v;
    for (double& v : n) v /= m0 * dx;

    std::vector<double> half(n.size()), next(n.size()), bn(n.size());
    const int W = std::max(1, opt.lambda_window);
    std::vector<double> rates(W, 0.0);
    long filled = 0;
    double residual = std::numeric_limits<double>::infinity();

    for (long step = 1; step <= opt.max_steps; ++step) {
        advect(n, g, nu, half);
        fragment(half, B, *cfg.kernel, dt, bn, next);
        double mass = 0.0;
        for (double v : next) mass += v;
        mass *= dx;
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw ConvergenceFailure("population mass vanished", residual, step);
        rates[step % W] = std::log(mass) / dt;
        ++filled;
        double diff = 0.0;
        for (std::size_t i = 0; i < n.size(); ++i) {
            double v = next[i] / mass;
            diff += std::abs(v - n[i]);
            n[i] = v;
        }
        residual = diff * dx / dt;
        if (opt.on_snapshot && opt.snapshot_every > 0 && step % opt.snapshot_every == 0)
            opt.on_snapshot(step, GridFunction(gr, n));
        if (residual <= opt.tol) {
            long k = std::min<long>(filled, W);
            double s = 0.0;
            for (long t = 0; t < k; ++t) s += rates[(step - t) % W];
            EigenPair ep;
            ep.N = GridFunction(gr, n);
            ep.lambda0 = s / k;
            ep.iterations = step;
            ep.final_residual = residual;
            ep.dt = dt;
            return ep;
        }
    }
    throw ConvergenceFailure("no steady state within max_steps", residual, opt.max_steps);
}

IdentityDefects check_eigen_identities(const EigenPair& pair, const ProblemConfig& cfg) {
    const GridFunction& N = pair.N;
    const Grid& gr = N.grid;
    GridFunction gN = pointwise_product(cfg.g.sample(gr), N);
    double BN = quadrature(pointwise_product(cfg.B.sample(gr), N), 0.0);
    double xN = quadrature(N, 1.0);
    double GN = quadrature(gN, 0.0);
    double lam = pair.lambda0;
    IdentityDefects d;
    d.lambda_defect = std::abs(lam - BN) / std::abs(lam);
    d.moment_defect = std::abs(xN - cfg.c / lam * GN) / std::abs(xN);
    d.outflow_term = cfg.c / lam * gr.L * gN[gr.ka] / std::abs(xN);
    d.moment_defect_with_outflow = std::abs(xN - cfg.c / lam * (GN - gr.L * gN[gr.ka])) / std::abs(xN);
    return d;
}

}  // namespace gfrag

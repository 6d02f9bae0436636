#include "gfrag/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gfrag/errors.hpp"

namespace gfrag {

std::string method_name(Method m) {
    switch (m) {
        case Method::brute: return "brute";
        case Method::qr: return "qr";
        case Method::filtering: return "filter";
    }
    return "";
}

Method parse_method(const std::string& s) {
    if (s == "brute") return Method::brute;
    if (s == "qr" || s == "quasi-reversibility") return Method::qr;
    if (s == "filter" || s == "filtering") return Method::filtering;
    throw InvalidArgument("unknown method '" + s + "'");
}

void ReconstructionConfig::validate() const {
    if (method != Method::brute && !(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("alpha must lie in (0, 1)");
    if (method == Method::qr && (k == -2.0 || !std::isfinite(k))) throw InvalidArgument("k must differ from -2");
    if (!(p >= 0.0)) throw InvalidArgument("p must be nonnegative");
    if (N_floor && !(*N_floor >= 0.0)) throw InvalidArgument("N_floor must be nonnegative");
    if (true_c && !(*true_c > 0.0)) throw InvalidArgument("true c must be positive");
}

namespace {

void same_grid(const Measurement& m, const GridFunction& g, const KernelMatrix& K) {
    if (!(m.N_eps.grid == g.grid) || !(K.grid() == g.grid)) throw InvalidArgument("inputs live on different grids");
}

double positive_ratio(double num, double den) {
    if (!(std::abs(den) > 0.0) || !std::isfinite(den)) throw DegenerateMeasurement("c estimator denominator vanishes");
    return num / den;
}

// Upper-triangular system: A_ii = diag_i, A_ij = -2 k_ij dx (j > i), plus
// sup_i added on A_{i,i+1}. Row 0 is H_0 = 0.
struct Triangular {
    const KernelMatrix& K;
    std::vector<double> diag;
    std::vector<double> sup;

    double offdiag_dot(int i, const std::vector<double>& H) const {
        const Grid& gr = K.grid();
        const double* row = K.row(i);
        double s = 0.0;
        for (int j = i + 1; j <= gr.ka; ++j) s += row[j] * H[j];
        s *= -2.0 * gr.dx;
        if (i < gr.ka) s += sup[i] * H[i + 1];
        return s;
    }

    std::vector<double> solve(const std::vector<double>& L) const {
        const int ka = K.grid().ka;
        std::vector<double> H(ka + 1, 0.0);
        for (int i = ka; i >= 1; --i) H[i] = (L[i] - offdiag_dot(i, H)) / diag[i];
        return H;
    }

    // relative inf-norm residual, rows optionally weighted by x_i^p
    double residual(const std::vector<double>& H, const std::vector<double>& L, double p) const {
        const Grid& gr = K.grid();
        double rmax = 0.0, lmax = 0.0;
        for (int i = 1; i <= gr.ka; ++i) {
            double w = p == 0.0 ? 1.0 : std::pow(gr.x(i), p);
            double r = diag[i] * H[i] + offdiag_dot(i, H) - L[i];
            rmax = std::max(rmax, std::abs(w * r));
            lmax = std::max(lmax, std::abs(w * L[i]));
        }
        return lmax > 0.0 ? rmax / lmax : rmax;
    }
};

Triangular kernel_system(const KernelMatrix& K) {
    const Grid& gr = K.grid();
    Triangular T{K, std::vector<double>(gr.size(), 1.0), std::vector<double>(gr.size(), 0.0)};
    for (int i = 1; i <= gr.ka; ++i) T.diag[i] = 1.0 - 2.0 * K(i, i) * gr.dx;
    return T;
}

double default_floor(const Measurement& m, const ReconstructionConfig& cfg) {
    if (cfg.N_floor) return *cfg.N_floor;
    return 1e-12 * *std::max_element(m.N_eps.values.begin(), m.N_eps.values.end());
}

// -lambda N_i - c (gN_{i+1} - gN_i)/dx, with gN beyond ka taken as 0
std::vector<double> forward_rhs(const Measurement& m, const GridFunction& g, double c) {
    const Grid& gr = g.grid;
    std::vector<double> L(gr.size(), 0.0);
    for (int i = 1; i <= gr.ka; ++i) {
        double next = i < gr.ka ? g[i + 1] * m.N_eps[i + 1] : 0.0;
        L[i] = -m.lambda_eps * m.N_eps[i] - c * (next - g[i] * m.N_eps[i]) / gr.dx;
    }
    return L;
}

ReconstructionResult finish(const Triangular& T, const std::vector<double>& L, const GridFunction& N_ref,
                            double c, const Measurement& m, const ReconstructionConfig& cfg) {
    const Grid& gr = N_ref.grid;
    ReconstructionResult res;
    res.config = cfg;
    res.c_est = c;
    res.H = GridFunction(gr, T.solve(L));
    res.B_rec = recover_B(res.H, N_ref, default_floor(m, cfg));
    res.diagnostics.residual = T.residual(res.H.values, L, 0.0);
    res.diagnostics.weighted_residual = T.residual(res.H.values, L, cfg.p);
    res.diagnostics.diagonal_min = *std::min_element(T.diag.begin() + 1, T.diag.end());
    std::optional<double> ref = cfg.reference_c ? cfg.reference_c : cfg.true_c;
    if (ref) res.diagnostics.c_error = std::abs(c - *ref) / *ref;
    return res;
}

void require_positive_diagonal(const Triangular& T, bool qr) {
    for (std::size_t i = 1; i < T.diag.size(); ++i)
        if (!(T.diag[i] > 0.0)) {
            std::string msg = "diagonal entry " + std::to_string(i) + " is not positive";
            if (qr) throw IllConditioned(msg + "; use a smaller dx or alpha");
            throw SingularSystem(msg);
        }
}

}  // namespace

double estimate_c_qr(const Measurement& m, const GridFunction& g) {
    double den = quadrature(pointwise_product(g, m.N_eps), 0.0);
    if (!(den > 0.0)) throw DegenerateMeasurement("integral of g N_eps is not positive");
    return m.lambda_eps * quadrature(m.N_eps, 1.0) / den;
}

double estimate_c_filtering(const Measurement& m, const GridFunction& g, double alpha) {
    MollifiedPair gN = mollify(pointwise_product(g, m.N_eps), alpha);
    double den = quadrature(gN.smoothed, 0.0);
    if (!(den > 0.0)) throw DegenerateMeasurement("integral of the mollified g N_eps is not positive");
    return m.lambda_eps * quadrature(m.N_eps, 1.0) / den;
}

double estimate_c_moment_matched(const Measurement& m, const GridFunction& g, double alpha) {
    MollifiedPair N = mollify(m.N_eps, alpha);
    MollifiedPair gN = mollify(pointwise_product(g, m.N_eps), alpha);
    double num = quadrature(N.smoothed, 1.0);
    double den = -quadrature(gN.smoothed_derivative, 1.0);
    double c = positive_ratio(m.lambda_eps * num, den);
    if (!(c > 0.0)) throw DegenerateMeasurement("moment-matched c is not positive");
    return c;
}

ReconstructionResult reconstruct_brute(const Measurement& m, double c, const GridFunction& g,
                                       const KernelMatrix& K, const ReconstructionConfig& cfg_in) {
    same_grid(m, g, K);
    ReconstructionConfig cfg = cfg_in;
    cfg.method = Method::brute;
    cfg.validate();
    Triangular T = kernel_system(K);
    require_positive_diagonal(T, false);
    return finish(T, forward_rhs(m, g, c), m.N_eps, c, m, cfg);
}

ReconstructionResult reconstruct_qr(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                    const ReconstructionConfig& cfg_in) {
    same_grid(m, g, K);
    ReconstructionConfig cfg = cfg_in;
    cfg.method = Method::qr;
    cfg.validate();
    const int ka = g.grid.ka;
    double c = cfg.true_c ? *cfg.true_c : estimate_c_qr(m, g);
    Triangular T = kernel_system(K);
    for (int i = 1; i <= ka; ++i) {
        T.diag[i] += cfg.alpha * i;
        if (i < ka) T.sup[i] = -cfg.alpha * std::pow(i + 1.0, cfg.k + 1.0) / std::pow(static_cast<double>(i), cfg.k);
    }
    require_positive_diagonal(T, true);
    return finish(T, forward_rhs(m, g, c), m.N_eps, c, m, cfg);
}

ReconstructionResult reconstruct_filtering(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                           const ReconstructionConfig& cfg_in) {
    same_grid(m, g, K);
    ReconstructionConfig cfg = cfg_in;
    cfg.method = Method::filtering;
    cfg.validate();
    const Grid& gr = g.grid;
    double c;
    if (cfg.true_c) c = *cfg.true_c;
    else if (cfg.c_rule == CRule::closed_form) c = estimate_c_filtering(m, g, cfg.alpha);
    else c = estimate_c_moment_matched(m, g, cfg.alpha);

    MollifiedPair N = mollify(m.N_eps, cfg.alpha);
    MollifiedPair gN = mollify(pointwise_product(g, m.N_eps), cfg.alpha);
    std::vector<double> L(gr.size(), 0.0);
    for (int i = 1; i <= gr.ka; ++i) L[i] = -c * gN.smoothed_derivative[i] - m.lambda_eps * N.smoothed[i];
    // The x_i^p row weight divides out of every row, so it only enters the
    // weighted residual reported in the diagnostics.
    Triangular T = kernel_system(K);
    require_positive_diagonal(T, false);
    return finish(T, L, N.smoothed, c, m, cfg);
}

ReconstructionResult reconstruct(const Measurement& m, const GridFunction& g, const KernelMatrix& K,
                                 const ReconstructionConfig& cfg) {
    switch (cfg.method) {
        case Method::brute: return reconstruct_brute(m, cfg.true_c ? *cfg.true_c : estimate_c_qr(m, g), g, K, cfg);
        case Method::qr: return reconstruct_qr(m, g, K, cfg);
        case Method::filtering: return reconstruct_filtering(m, g, K, cfg);
    }
    throw InvalidArgument("unknown method");
}

GridFunction recover_B(const GridFunction& H, const GridFunction& N_ref, double N_floor) {
    if (!(N_floor >= 0.0)) throw InvalidArgument("N_floor must be nonnegative");
    if (!(H.grid == N_ref.grid)) throw InvalidArgument("H and N live on different grids");
    GridFunction B(H.grid);
    for (std::size_t i = 0; i < H.size(); ++i) B[i] = N_ref[i] > N_floor ? H[i] / N_ref[i] : 0.0;
    return B;
}

}  // namespace gfrag

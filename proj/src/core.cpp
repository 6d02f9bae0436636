#include "gfrag/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gfrag/errors.hpp"

namespace gfrag {

std::vector<double> Grid::nodes() const {
    std::vector<double> v(size());
    for (int i = 0; i <= ka; ++i) v[i] = x(i);
    return v;
}

Grid build_grid(double L, int ka) {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("grid length must be positive");
    if (ka < 2) throw InvalidArgument("grid needs ka >= 2");
    return Grid{L, ka, L / ka};
}

GridFunction::GridFunction(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.size()) throw InvalidArgument("grid function length must be ka+1");
}

bool GridFunction::finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double quadrature(const GridFunction& f, double p) {
    const Grid& g = f.grid;
    double s = 0.0;
    for (int i = (p < 0.0 ? 1 : 0); i <= g.ka; ++i) {
        double w = p == 0.0 ? 1.0 : std::pow(g.x(i), p);
        s += f[i] * w;
    }
    return s * g.dx;
}

double l1_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += std::abs(v);
    return s * f.grid.dx;
}

double l2_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += v * v;
    return std::sqrt(s * f.grid.dx);
}

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size()) throw InvalidArgument("grid functions live on different grids");
    GridFunction r(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}

double interpolate(const Table& t, double x) {
    if (t.empty()) throw InvalidArgument("empty table");
    if (x <= t.front().first) return t.front().second;
    if (x >= t.back().first) return t.back().second;
    auto it = std::upper_bound(t.begin(), t.end(), x,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    auto lo = it - 1;
    double w = (x - lo->first) / (it->first - lo->first);
    return lo->second + w * (it->second - lo->second);
}

static void check_table(const Table& t, const char* what) {
    if (t.size() < 2) throw InvalidArgument(std::string(what) + " table needs at least two rows");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (!(t[i].first > t[i - 1].first))
            throw InvalidArgument(std::string(what) + " table abscissae must increase");
    for (auto& [x, y] : t)
        if (!std::isfinite(x) || !std::isfinite(y) || y < 0.0)
            throw InvalidArgument(std::string(what) + " table values must be finite and nonnegative");
}

RateSpec RateSpec::from_table(Table t) {
    check_table(t, "rate");
    return {Kind::table, 0.0, std::move(t)};
}

double RateSpec::operator()(double x) const {
    switch (kind) {
        case Kind::power:
            return x <= 0.0 ? (exponent == 0.0 ? 1.0 : 0.0) : std::pow(x, exponent);
        case Kind::capped_quadratic:
            return std::min(1.0, x * x / 10.0);
        case Kind::gaussian_bump:
            return std::exp(-0.08 * (x - 12.0) * (x - 12.0));
        case Kind::tray:
            if (x < 2.0) return 0.0;
            if (x <= 15.0) return ((x - 2.0) / 13.0) * ((x - 2.0) / 13.0);
            return 1.0;
        case Kind::table:
            return interpolate(table, x);
    }
    return 0.0;
}

GridFunction RateSpec::sample(const Grid& g) const {
    GridFunction f(g);
    for (int i = 0; i <= g.ka; ++i) f[i] = (*this)(g.x(i));
    return f;
}

std::string RateSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::power: os << "power(" << exponent << ")"; break;
        case Kind::capped_quadratic: os << "capped-quadratic"; break;
        case Kind::gaussian_bump: os << "gaussian-bump"; break;
        case Kind::tray: os << "tray"; break;
        case Kind::table: os << "table(" << table.size() << ")"; break;
    }
    return os.str();
}

KernelSpec KernelSpec::user(Table profile) {
    check_table(profile, "kernel profile");
    KernelSpec s;
    s.kind = Kind::user;
    s.profile = std::move(profile);
    return s;
}

double KernelSpec::profile_value(double z) const {
    switch (kind) {
        case Kind::uniform: return 1.0;
        case Kind::gaussian: {
            double u = (z - mu) / sigma;
            return std::exp(-0.5 * u * u);
        }
        case Kind::user: return interpolate(profile, z);
        case Kind::mitosis: break;
    }
    return 0.0;
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::uniform: os << "uniform"; break;
        case Kind::gaussian: os << "gaussian(mu=" << mu << ",sigma=" << sigma << ")"; break;
        case Kind::mitosis: os << "mitosis"; break;
        case Kind::user: os << "user(" << profile.size() << ")"; break;
    }
    if (!moment_correction && kind != Kind::mitosis) os << ",raw";
    return os.str();
}

KernelMatrix::KernelMatrix(const Grid& g, std::string kind)
    : grid_(g), kind_(std::move(kind)), k_(g.size() * g.size(), 0.0) {}

double KernelMatrix::column_mass(int j) const {
    double s = 0.0;
    for (int i = 0; i <= j; ++i) s += (*this)(i, j);
    return s * grid_.dx;
}

double KernelMatrix::column_mean(int j) const {
    double s = 0.0;
    for (int i = 0; i <= j; ++i) s += grid_.x(i) * (*this)(i, j);
    return s * grid_.dx;
}

void KernelMatrix::normalize_columns() {
    for (int j = 1; j <= grid_.ka; ++j) {
        double m = column_mass(j);
        if (!(m > 0.0)) throw InvalidArgument("kernel column " + std::to_string(j) + " has no mass");
        for (int i = 0; i <= j; ++i) at(i, j) /= m;
    }
}

double KernelMatrix::moment_defect(int j_min) const {
    double worst = 0.0;
    for (int j = std::max(j_min, 1); j <= grid_.ka; ++j)
        worst = std::max(worst, std::abs(column_mean(j) - grid_.x(j) / 2) / grid_.x(j));
    return worst;
}

KernelMatrix KernelMatrix::from_entries(const Grid& g, const std::vector<double>& entries, std::string kind) {
    if (entries.size() != g.size() * g.size()) throw InvalidArgument("kernel table has the wrong size");
    KernelMatrix K(g, std::move(kind));
    for (int i = 0; i <= g.ka; ++i)
        for (int j = 0; j <= g.ka; ++j) {
            double v = entries[static_cast<std::size_t>(i) * g.size() + j];
            if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("kernel table has negative entries");
            if (i > j && v != 0.0) throw InvalidArgument("kernel table has mass above the mother size");
            if (j == 0) continue;
            K.at(i, j) = v;
        }
    K.normalize_columns();
    K.report_.raw_moment_defect = K.report_.moment_defect = K.moment_defect(K.report_.j_min);
    return K;
}

namespace {

// Move mass between end nodes of w[0..j-1] until sum i*w_i = j/2.
void correct_mean(std::vector<double>& w, int j) {
    const double target = 0.5 * j;
    for (int pass = 0; pass < 2 * j + 2; ++pass) {
        double m = 0.0;
        for (int i = 0; i < j; ++i) m += i * w[i];
        double d = target - m;
        if (std::abs(d) <= 1e-15 * j) return;
        if (d > 0.0) {
            int lo = 0;
            while (lo < j - 1 && w[lo] == 0.0) ++lo;
            if (lo >= j - 1) return;
            double delta = std::min(d / ((j - 1) - lo), w[lo]);
            w[lo] -= delta;
            w[j - 1] += delta;
        } else {
            int hi = j - 1;
            while (hi > 0 && w[hi] == 0.0) --hi;
            if (hi <= 0) return;
            double delta = std::min(-d / hi, w[hi]);
            w[hi] -= delta;
            w[0] += delta;
        }
    }
}

}  // namespace

KernelMatrix build_kernel(const KernelSpec& spec, const Grid& grid) {
    KernelMatrix K(grid, spec.describe());
    const double dx = grid.dx;
    const int ka = grid.ka;
    KernelReport& rep = K.report();

    if (spec.kind == KernelSpec::Kind::mitosis) {
        for (int j = 1; j <= ka; ++j) {
            if (j % 2 == 0) {
                K.at(j / 2, j) = 1.0 / dx;
            } else {
                K.at(j / 2, j) = 0.5 / dx;
                K.at(j / 2 + 1, j) = 0.5 / dx;
            }
        }
        rep.j_min = 1;
        rep.raw_moment_defect = rep.moment_defect = K.moment_defect(rep.j_min);
        rep.normalization_defect = 0.0;
        return K;
    }

    if (spec.kind == KernelSpec::Kind::gaussian && !(spec.sigma > 0.0))
        throw InvalidArgument("gaussian kernel needs sigma > 0");

    // Daughters strictly smaller than the mother: nodes 0..j-1 of column j.
    double raw = 0.0;
    std::vector<double> w;
    for (int j = 1; j <= ka; ++j) {
        w.assign(j, 0.0);
        double s = 0.0;
        for (int i = 0; i < j; ++i) {
            w[i] = spec.profile_value(static_cast<double>(i) / j);
            s += w[i];
        }
        if (!(s > 0.0)) throw InvalidArgument("kernel profile vanishes on column " + std::to_string(j));
        double m = 0.0;
        for (int i = 0; i < j; ++i) {
            w[i] /= s;
            m += i * w[i];
        }
        if (j >= rep.j_min) raw = std::max(raw, std::abs(m - 0.5 * j) / j);
        if (spec.moment_correction && j >= 2) correct_mean(w, j);
        for (int i = 0; i < j; ++i) K.at(i, j) = w[i] / dx;
    }
    K.normalize_columns();
    double nd = 0.0;
    for (int j = 1; j <= ka; ++j) nd = std::max(nd, std::abs(K.column_mass(j) - 1.0));
    rep.raw_moment_defect = raw;
    rep.moment_defect = K.moment_defect(rep.j_min);
    rep.normalization_defect = nd;
    return K;
}

GridFunction InitialSpec::sample(const Grid& g) const {
    GridFunction f(g);
    for (int i = 0; i <= g.ka; ++i) {
        double x = g.x(i);
        switch (kind) {
            case Kind::step: f[i] = (x >= 5.0 && x <= 10.0) ? 0.2 : 0.0; break;
            case Kind::maxwellian:
                f[i] = std::exp(-(x - 10.0) * (x - 10.0) / 0.4) / std::sqrt(0.4 * std::numbers::pi);
                break;
            case Kind::table: f[i] = interpolate(table, x); break;
        }
    }
    return f;
}

std::string InitialSpec::describe() const {
    switch (kind) {
        case Kind::step: return "step";
        case Kind::maxwellian: return "maxwellian";
        case Kind::table: return "table";
    }
    return "";
}

void ProblemConfig::validate() const {
    if (grid.ka < 2 || !(grid.dx > 0.0)) throw InvalidArgument("invalid grid");
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("c must be positive");
    if (!kernel || !(kernel->grid() == grid)) throw InvalidArgument("kernel missing or on another grid");
    for (int i = 1; i <= grid.ka; ++i) {
        if (!(g(grid.x(i)) > 0.0)) throw InvalidArgument("g must be positive for x > 0");
        if (B(grid.x(i)) < 0.0) throw InvalidArgument("B must be nonnegative");
    }
    GridFunction n0 = initial.sample(grid);
    double mass = 0.0;
    for (double v : n0.values) {
        if (v < 0.0) throw InvalidArgument("initial datum must be nonnegative");
        mass += v;
    }
    if (!(mass > 0.0)) throw InvalidArgument("initial datum has no mass");
}

ProblemConfig make_config(double L, int ka, double c, RateSpec g, RateSpec B, KernelSpec k, InitialSpec init) {
    ProblemConfig cfg;
    cfg.grid = build_grid(L, ka);
    cfg.c = c;
    cfg.g = std::move(g);
    cfg.B = std::move(B);
    cfg.kernel_spec = std::move(k);
    cfg.kernel = std::make_shared<const KernelMatrix>(build_kernel(cfg.kernel_spec, cfg.grid));
    cfg.initial = std::move(init);
    cfg.validate();
    return cfg;
}

}  // namespace gfrag

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace gfrag {

using Table = std::vector<std::pair<double, double>>;

// Uniform mesh x_i = i*dx, i = 0..ka, on [0, L].
struct Grid {
    double L = 0.0;
    int ka = 0;
    double dx = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(ka) + 1; }
    double x(int i) const { return i * dx; }
    std::vector<double> nodes() const;
    bool operator==(const Grid& o) const { return L == o.L && ka == o.ka; }
};

Grid build_grid(double L, int ka);

// Node values of a density or rate on a grid.
struct GridFunction {
    Grid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
    GridFunction(const Grid& g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    bool finite() const;
};

// sum_i f_i x_i^p dx, dropping i = 0 when p < 0.
double quadrature(const GridFunction& f, double p);

double l1_norm(const GridFunction& f);
double l2_norm(const GridFunction& f);

GridFunction pointwise_product(const GridFunction& a, const GridFunction& b);

// Linear interpolation in a sorted (x, y) table, constant beyond the ends.
double interpolate(const Table& t, double x);

struct RateSpec {
    enum class Kind { power, capped_quadratic, gaussian_bump, tray, table };
    Kind kind = Kind::power;
    double exponent = 1.0;  // power law x^exponent
    Table table;

    static RateSpec power(double e) { return {Kind::power, e, {}}; }
    static RateSpec capped_quadratic() { return {Kind::capped_quadratic, 0.0, {}}; }
    static RateSpec gaussian_bump() { return {Kind::gaussian_bump, 0.0, {}}; }
    static RateSpec tray() { return {Kind::tray, 0.0, {}}; }
    static RateSpec from_table(Table t);

    double operator()(double x) const;
    GridFunction sample(const Grid& g) const;
    std::string describe() const;
};

struct KernelSpec {
    enum class Kind { uniform, gaussian, mitosis, user };
    Kind kind = Kind::uniform;
    double mu = 0.5;     // gaussian kernel profile on [0,1]
    double sigma = 0.5;
    Table profile;       // user profile k0(z) on [0,1]
    // Shift mass from the smallest daughter nodes to node j-1 so each column
    // has mean x_j/2 exactly. Off reproduces plain sampling.
    bool moment_correction = true;

    static KernelSpec uniform() { return {}; }
    static KernelSpec gaussian(double mu = 0.5, double sigma = 0.5) {
        KernelSpec s;
        s.kind = Kind::gaussian;
        s.mu = mu;
        s.sigma = sigma;
        return s;
    }
    static KernelSpec mitosis() {
        KernelSpec s;
        s.kind = Kind::mitosis;
        return s;
    }
    static KernelSpec user(Table profile);

    double profile_value(double z) const;
    std::string describe() const;
};

struct KernelReport {
    int j_min = 2;                   // first column held to the mean condition
    double raw_moment_defect = 0.0;  // worst |mean - x_j/2|/x_j before correction, j >= j_min
    double moment_defect = 0.0;      // same after correction
    double normalization_defect = 0.0;
};

// Dense (ka+1)^2 kernel, row-major, k(i,j) = 0 for i > j.
class KernelMatrix {
public:
    KernelMatrix() = default;
    KernelMatrix(const Grid& g, std::string kind);

    // Entries given directly; columns j >= 1 are renormalized.
    static KernelMatrix from_entries(const Grid& g, const std::vector<double>& entries,
                                     std::string kind = "user-matrix");

    const Grid& grid() const { return grid_; }
    const std::string& kind() const { return kind_; }
    double operator()(int i, int j) const { return k_[idx(i, j)]; }
    double& at(int i, int j) { return k_[idx(i, j)]; }
    const double* row(int i) const { return k_.data() + idx(i, 0); }
    const KernelReport& report() const { return report_; }
    KernelReport& report() { return report_; }

    double column_mass(int j) const;
    double column_mean(int j) const;  // sum_i x_i k_ij dx
    void normalize_columns();
    // Worst relative first-moment defect over columns j >= j_min.
    double moment_defect(int j_min) const;

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * grid_.size() + j; }
    Grid grid_;
    std::string kind_;
    std::vector<double> k_;
    KernelReport report_;
};

KernelMatrix build_kernel(const KernelSpec& spec, const Grid& grid);

struct InitialSpec {
    enum class Kind { step, maxwellian, table };
    Kind kind = Kind::step;
    Table table;
    GridFunction sample(const Grid& g) const;
    std::string describe() const;
};

struct ProblemConfig {
    Grid grid;
    double c = 1.0;
    RateSpec g;
    RateSpec B;
    KernelSpec kernel_spec;
    std::shared_ptr<const KernelMatrix> kernel;
    InitialSpec initial;

    void validate() const;
};

ProblemConfig make_config(double L, int ka, double c, RateSpec g, RateSpec B, KernelSpec k,
                          InitialSpec init = {});

}  // namespace gfrag

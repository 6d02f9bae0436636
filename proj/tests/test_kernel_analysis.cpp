#include <cmath>
#include <random>

#include "doctest.h"
#include "gfrag/errors.hpp"
#include "gfrag/kernel_analysis.hpp"

using namespace gfrag;

namespace {

const Grid& grid300() {
    static Grid g = build_grid(25.0, 300);
    return g;
}

const KernelMatrix& uniform300() {
    static KernelMatrix K = build_kernel(KernelSpec::uniform(), grid300());
    return K;
}

}  // namespace

TEST_CASE("D_q of the uniform kernel is 1/(q+1)") {
    const KernelMatrix& K = uniform300();
    const Grid& g = grid300();
    CHECK(std::abs(moment_D(K, 1.0) - 0.5) <= 2 * g.dx / g.L);
    CHECK(std::abs(moment_D(K, 0.0) - 1.0) <= 1e-12);
    CHECK(std::abs(moment_D(K, 2.0) - 1.0 / 3) <= 0.01);
    for (int q : {1, 2, 3}) CHECK(std::abs(moment_D(K, q) * (q + 1) - 1.0) <= 0.01);
}

TEST_CASE("C_r of the uniform kernel") {
    const KernelMatrix& K = uniform300();
    CHECK(std::abs(moment_C(K, 2.0) - 0.5) <= 0.02);
    CHECK(std::abs(moment_C(K, 1.0) - 1.0) <= 0.05);
}

TEST_CASE("mitosis moments are powers of two") {
    // hand computation: column mass sits at x_j/2, so D_q = 2^-q and C_r = 2^(1-r).
    // Column 1 splits between nodes 0 and 1 and row 1 picks up k_11, so the
    // sups skip x < 1 (twelve cells) where the delta is not resolved.
    KernelMatrix K = build_kernel(KernelSpec::mitosis(), build_grid(25.0, 300));
    const double xm = 1.0;
    CHECK(std::abs(moment_C(K, 3.0, -1.0, xm) - 0.25) <= 0.02);
    CHECK(std::abs(moment_D(K, 2.0, xm) - 0.25) <= 0.02);
    CoercivityReport r = certify_coercivity(K, 4.0, 2.0, -1.0, xm);
    CHECK(r.product == doctest::Approx(0.125).epsilon(0.05));
    CHECK(r.satisfied);
    for (double rr : {0.5, 1.0, 3.0})
        CHECK(certify_coercivity(K, 4.0, rr, -1.0, xm).product == doctest::Approx(0.125).epsilon(0.05));
    // without the floor column 1 alone gives D_q = 1/2 for every q > 0
    CHECK(moment_D(K, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("certificates for the uniform kernel") {
    const KernelMatrix& K = uniform300();
    CoercivityReport a = certify_coercivity(K, 4.0, 2.0);
    CHECK(a.satisfied);
    CHECK(a.product == doctest::Approx(1.0 / 6).epsilon(0.05));
    CHECK(a.beta == doctest::Approx(1.0 - 2.0 * std::sqrt(a.product)));
    CoercivityReport b = certify_coercivity(K, 3.0, 2.0);
    CHECK(b.product == doctest::Approx(0.25).epsilon(0.05));
    CHECK(b.satisfied == (b.product < 0.25));
    CHECK((b.beta > 0) == b.satisfied);
    CHECK_THROWS_AS(certify_coercivity(K, 2.0, 3.0), InvalidArgument);
    CHECK_THROWS_AS(certify_coercivity(K, 2.0, -1.0), InvalidArgument);
}

TEST_CASE("C_r tracks D_{r-1} for self-similar kernels") {
    // column 2 is a point mass at x_1, which gives D_q = 2^-q for q < 1;
    // half a unit of size is enough to drop it
    const double xm = 0.5;
    Grid fine = build_grid(25.0, 600);
    for (auto spec : {KernelSpec::uniform(), KernelSpec::gaussian()}) {
        KernelMatrix K = build_kernel(spec, grid300());
        KernelMatrix F = build_kernel(spec, fine);
        for (double r : {1.0, 1.25, 1.5, 2.0, 3.0, 4.0}) {
            CAPTURE(spec.describe());
            CAPTURE(r);
            double gap = std::abs(moment_C(K, r, -1.0, xm) - moment_D(K, r - 1, xm));
            double gap_fine = std::abs(moment_C(F, r, -1.0, xm) - moment_D(F, r - 1, xm));
            CHECK(gap <= 0.03);
            CHECK(gap_fine <= gap + 1e-12);
        }
    }
}

TEST_CASE("D_q is nonincreasing in q") {
    for (auto spec : {KernelSpec::uniform(), KernelSpec::gaussian(), KernelSpec::mitosis()}) {
        KernelMatrix K = build_kernel(spec, grid300());
        double prev = moment_D(K, 0.0);
        for (double q = 0.25; q <= 6.0; q += 0.25) {
            double d = moment_D(K, q);
            CHECK(d <= prev + 1e-15);
            prev = d;
        }
    }
}

TEST_CASE("C_r row restriction is a parameter") {
    const KernelMatrix& K = uniform300();
    // rows near L lose tail mass, so widening the range cannot raise C_r there
    CHECK(moment_C(K, 2.0, 25.0) >= moment_C(K, 2.0));
    CHECK(moment_C(K, 2.0, 1.0) <= moment_C(K, 2.0) + 1e-15);
}

TEST_CASE("quadratic form respects the certificate") {
    for (auto spec : {KernelSpec::uniform(), KernelSpec::gaussian()}) {
        KernelMatrix K = build_kernel(spec, grid300());
        CoercivityReport rep = certify_coercivity(K, 4.0, 2.0);
        REQUIRE(rep.beta > 0.0);
        double measured = sampled_coercivity(K, 4.0, 100, 7);
        CAPTURE(spec.describe());
        CHECK(measured >= rep.beta - 0.05);
    }
}

TEST_CASE("quadratic form by hand on a tiny grid") {
    Grid g = build_grid(1.0, 2);
    KernelMatrix K = build_kernel(KernelSpec::uniform(), g);
    std::vector<double> u{0.0, 1.0, 2.0};
    double want = 0.0;
    for (int i = 1; i <= 2; ++i) {
        double w = std::pow(g.x(i), 2.0);
        want += w * u[i] * u[i] * g.dx;
        for (int j = i; j <= 2; ++j) want -= 2 * w * u[i] * K(i, j) * u[j] * g.dx * g.dx;
    }
    CHECK(quadratic_form(K, u, 2.0) == doctest::Approx(want));
}

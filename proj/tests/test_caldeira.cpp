#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chh/caldeira.hpp"

using namespace chh;

namespace {

BathModel reference_model(int sign = -1) { return BathModel::expression(1.0, sign, "0.4*x*exp(-0.25*x^2)"); }

// Roots of D for the reference model, frozen from the argument-principle
// search and confirmed by the direct half-line form.
constexpr double kRootRe = 1.1557385716;
constexpr double kRootIm = 0.1871732871;

}  // namespace

TEST(BathModel, Validation) {
    EXPECT_THROW(BathModel::expression(-1.0, -1, "x"), ConfigError);
    EXPECT_THROW(BathModel::expression(1.0, 0, "x*exp(-x^2)"), ConfigError);
    EXPECT_THROW(BathModel::expression(1.0, -1, "-x*exp(-x^2)"), ConfigError);
    EXPECT_THROW(BathModel::expression(1.0, -1, "x"), ConfigError);  // no decay
    auto m = reference_model();
    EXPECT_GT(m.x_max, 8.0);
    EXPECT_LT(m.x_max, 14.0);
    EXPECT_DOUBLE_EQ(m.antisymmetric(-1.5), -m.antisymmetric(1.5));
    EXPECT_EQ(m.antisymmetric(2 * m.x_max), 0.0);
}

TEST(CLEpsilon, UncoupledLimit) {
    auto m = BathModel::make_uncoupled(1.3, -1);
    for (double w : {0.0, 0.7, 1.3, 4.0}) {
        cplx e = cl_epsilon_real(m, w);
        EXPECT_EQ(e.imag(), 0.0);
        EXPECT_NEAR(e.real(), (w * w - 1.69) / (w * w + 1.69), 1e-15);
    }
    EXPECT_NEAR(std::abs(cl_epsilon_real(m, 1.3)), 0.0, 1e-15);
}

TEST(CLEpsilon, TendsToOneAtInfinity) {
    auto m = reference_model();
    EXPECT_NEAR(std::abs(cl_epsilon_real(m, 200.0) - 1.0), 0.0, 1e-3);
    EXPECT_NEAR(std::abs(cl_epsilon_real(m, -500.0) - 1.0), 0.0, 2e-5);
}

TEST(CLEpsilon, ImaginaryPartSigns) {
    auto m = reference_model();
    for (double w : {0.2, 1.0, 3.0, 6.0}) {
        EXPECT_LT(cl_epsilon_real(m, w).imag(), 0.0) << w;
        EXPECT_GT(cl_epsilon_real(m, -w).imag(), 0.0) << w;
    }
    // the positive-energy oscillator mirrors the sign
    EXPECT_GT(cl_epsilon_real(m.with_sign(1), 1.0).imag(), 0.0);
}

TEST(CLEpsilon, BoundaryValueOfTheContinuation) {
    auto m = reference_model();
    for (double w : {-2.0, 0.5, 1.3}) {
        cplx a = cl_epsilon_real(m, w), b = cl_epsilon_complex(m, cplx(w, 1e-7));
        EXPECT_LT(std::abs(a - b), 1e-6) << w;
    }
}

TEST(CLEpsilon, PartialFractionFormMatchesHalfLineForm) {
    for (int sign : {-1, 1}) {
        auto m = reference_model(sign);
        for (cplx w : {cplx(0.3, 0.5), cplx(-1.7, 0.05), cplx(2.5, 2.0), cplx(kRootRe, kRootIm)})
            EXPECT_LT(std::abs(cl_dispersion(m, w) - cl_dispersion_direct(m, w)), 1e-10) << w;
    }
}

TEST(Nyquist, ReferenceModelHasTwoUnstableZeros) {
    auto r = cl_nyquist(reference_model());
    EXPECT_EQ(r.winding, 1);
    EXPECT_EQ(r.poles, 1);
    EXPECT_EQ(r.zeros_upper, 2);
    EXPECT_GT(r.min_abs, 0.1);
    EXPECT_EQ(r.omega.size(), r.eps.size());
    EXPECT_EQ(cl_count_upper(reference_model()), r.zeros_upper);
}

TEST(Nyquist, UncoupledPairIsStable) {
    auto r = cl_nyquist(BathModel::make_uncoupled(1.0, -1));
    EXPECT_EQ(r.winding, -1);
    EXPECT_EQ(r.zeros_upper, 0);
    EXPECT_GT(r.lift, 0.0);
    NyquistOptions o;
    o.uncoupled_lift = 0.0;
    EXPECT_THROW(cl_nyquist(BathModel::make_uncoupled(1.0, -1), o), CriticalityError);
}

TEST(Nyquist, PositiveEnergyOscillatorIsStable) {
    auto m = reference_model(1);
    auto r = cl_nyquist(m);
    EXPECT_EQ(r.winding, -1);
    EXPECT_EQ(r.zeros_upper, 0);
    EXPECT_EQ(cl_count_upper(m), 0);
    EXPECT_TRUE(cl_matrix_oracle(m, 200).unstable.empty());
}

TEST(Nyquist, LiftedContourAgrees) {
    NyquistOptions o;
    o.lift = 0.01;
    auto r = cl_nyquist(reference_model(), o);
    EXPECT_EQ(r.zeros_upper, 2);
}

TEST(Nyquist, WeakCouplingStillDestabilizes) {
    auto base = reference_model();
    for (double a : {0.3, 0.1, 0.01}) {
        auto m = base.scaled(a);
        EXPECT_EQ(cl_nyquist(m).zeros_upper, 2) << a;
        auto roots = cl_roots(m);
        ASSERT_EQ(roots.size(), 2u) << a;
        // growth rate vanishes with the coupling and the pair sits near +-Omega
        EXPECT_LT(roots[1].omega.imag(), 0.3 * a + 1e-3);
        EXPECT_NEAR(std::abs(roots[1].omega.real()), 1.0, 0.2 * a + 0.05);
        EXPECT_EQ(cl_nyquist(m.with_sign(1)).zeros_upper, 0) << a;
    }
}

TEST(Roots, ReferencePair) {
    auto m = reference_model();
    auto roots = cl_roots(m);
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[0].omega.real(), -kRootRe, 1e-9);
    EXPECT_NEAR(roots[1].omega.real(), kRootRe, 1e-9);
    EXPECT_NEAR(roots[0].omega.imag(), kRootIm, 1e-9);
    EXPECT_NEAR(roots[1].omega.imag(), kRootIm, 1e-9);
    // Newton on the half-line form from the same seeds lands within 1e-8
    auto direct = [&](cplx w) { return cl_dispersion_direct(m, w); };
    for (auto& r : roots) {
        auto z = detail::newton(direct, r.omega + cplx(1e-3, -1e-3), DispersionOptions{});
        ASSERT_TRUE(z.has_value());
        EXPECT_LT(std::abs(*z - r.omega), 1e-8);
    }
}

TEST(MatrixOracle, UncoupledSpectrumIsReal) {
    auto m = BathModel::make_uncoupled(1.0, -1);
    auto o = cl_matrix_oracle(m, 20);
    EXPECT_TRUE(o.unstable.empty());
    auto b = discretize_bath(m, 20);
    int found_omega = 0;
    for (auto w : o.eigenvalues) {
        EXPECT_NEAR(w.imag(), 0.0, 1e-12);
        if (std::abs(std::abs(w.real()) - 1.0) < 1e-12) ++found_omega;
    }
    EXPECT_EQ(found_omega, 2);
    for (double x : b.x) {
        int hits = 0;
        for (auto w : o.eigenvalues)
            if (std::abs(std::abs(w.real()) - x) < 1e-12) ++hits;
        EXPECT_EQ(hits, 2) << x;
    }
}

TEST(MatrixOracle, ConvergesToDispersionRoots) {
    auto m = reference_model();
    auto roots = cl_roots(m);
    auto a = cl_matrix_oracle(m, 200), b = cl_matrix_oracle(m, 400);
    ASSERT_EQ(a.unstable.size(), 2u);
    ASSERT_EQ(b.unstable.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_LT(std::abs(a.unstable[i] - roots[i].omega), 1e-3);
        EXPECT_LT(std::abs(b.unstable[i] - roots[i].omega), 1e-3);
        EXPECT_LT(std::abs(b.unstable[i] - a.unstable[i]), 1e-3);
    }
}

TEST(MatrixOracle, TimeIntegrationGrowthRate) {
    auto m = reference_model();
    auto o = cl_matrix_oracle(m, 200);
    ASSERT_FALSE(o.unstable.empty());
    double gmax = 0.0;
    for (auto w : o.unstable) gmax = std::max(gmax, w.imag());
    auto ts = cl_integrate(m, 200, 60.0, 0.02);
    EXPECT_LT(std::abs(cl_growth_rate(ts, 30.0, 60.0) - gmax), 0.01 * gmax);
}

TEST(BathModel, TabulatedCouplingMatchesClosedForm) {
    std::vector<double> x, f2;
    for (int i = 0; i <= 300; ++i) {
        x.push_back(0.04 * i);
        f2.push_back(0.4 * x.back() * std::exp(-0.25 * x.back() * x.back()));
    }
    auto t = BathModel::tabulated(1.0, -1, x, f2);
    // the interpolant is only C^1, so ask the quadrature for less
    CaldeiraOptions o;
    o.dispersion.eps_tol = 1e-9;
    auto roots = cl_roots(t, o);
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[1].omega.real(), kRootRe, 1e-5);
    EXPECT_NEAR(roots[1].omega.imag(), kRootIm, 1e-5);
    EXPECT_EQ(cl_nyquist(t).zeros_upper, 2);
}

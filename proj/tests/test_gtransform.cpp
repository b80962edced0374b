#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chh/dispersion.hpp"
#include "chh/gtransform.hpp"

using namespace chh;

namespace {

double sup_diff(const ComplexSampledFunction& a, const ComplexSampledFunction& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) e = std::max(e, std::abs(a.values[i] - b.values[i]));
    return e;
}

double sup_norm(const ComplexSampledFunction& a) {
    double e = 0.0;
    for (auto v : a.values) e = std::max(e, std::abs(v));
    return e;
}

EquilibriumProfile unit_maxwellian() { return EquilibriumProfile::maxwellian(0, 1, 1 / std::sqrt(std::numbers::pi)); }

// Gaussian envelopes with random center, width, carrier and complex amplitude
std::vector<ComplexSampledFunction> random_smooth(const TransformContext& ctx, int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<ComplexSampledFunction> out;
    for (int r = 0; r < n; ++r) {
        double c = -2 + 4 * U(rng), w = 0.5 + U(rng), a = 3 * U(rng), ph = 6 * U(rng);
        cplx amp(U(rng) - 0.5, U(rng) - 0.5);
        out.push_back(ctx.sample([&](double p) {
            return amp * std::exp(-(p - c) * (p - c) / (w * w)) * std::exp(cplx(0.0, a * p + ph));
        }));
    }
    return out;
}

EquilibriumProfile flat_profile() {
    std::vector<double> p, v;
    for (int i = 0; i <= 40; ++i) {
        p.push_back(-2 + 0.1 * i);
        v.push_back(0.5);
    }
    return EquilibriumProfile::tabulated(p, v);
}

}  // namespace

TEST(GTransform, ZeroMapsToZero) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    auto z = ctx.sample([](double) { return 0.0; });
    EXPECT_EQ(sup_norm(g_forward(ctx, z)), 0.0);
    EXPECT_EQ(sup_norm(g_inverse(ctx, z)), 0.0);
}

TEST(GTransform, FlatProfileIsIdentity) {
    TransformContext ctx(flat_profile(), 0.7);
    for (double e : ctx.abs2()) EXPECT_NEAR(e, 1.0, 1e-14);
    auto g = ctx.sample([](double p) { return std::exp(-p * p) * (1 + p); });
    EXPECT_LT(sup_diff(g_forward(ctx, g), g), 1e-14);
    EXPECT_LT(sup_diff(g_inverse(ctx, g), g), 1e-14);
    // pure free streaming
    const double t = 3.2;
    auto zt = evolve(ctx, g, t);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        double p = ctx.grid()[i];
        EXPECT_NEAR(std::abs(zt.values[i] - g.values[i] * std::exp(cplx(0, -0.7 * p * t))), 0.0, 1e-13);
    }
}

TEST(GTransform, RoundTripOnRandomSmoothFunctions) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    auto fs = random_smooth(ctx, 20, 2024);
    double worst_a = 0.0, worst_b = 0.0;
    for (auto& g : fs) {
        worst_a = std::max(worst_a, sup_diff(g_inverse(ctx, g_forward(ctx, g)), g));
        worst_b = std::max(worst_b, sup_diff(g_forward(ctx, g_inverse(ctx, g)), g));
    }
    EXPECT_LT(worst_a, 1e-6);
    EXPECT_LT(worst_b, 1e-6);
}

TEST(GTransform, Linearity) {
    TransformContext ctx(EquilibriumProfile::bi_maxwellian(1.0, 1, 1), 1.0);
    auto fs = random_smooth(ctx, 2, 5);
    const cplx a(1.7, -0.4);
    ComplexSampledFunction mix = fs[0];
    for (std::size_t i = 0; i < mix.values.size(); ++i) mix.values[i] = a * fs[0].values[i] + fs[1].values[i];
    auto lhs = g_forward(ctx, mix);
    auto f0 = g_forward(ctx, fs[0]), f1 = g_forward(ctx, fs[1]);
    for (std::size_t i = 0; i < mix.values.size(); ++i) f0.values[i] = a * f0.values[i] + f1.values[i];
    EXPECT_LT(sup_diff(lhs, f0), 1e-13);
}

TEST(GTransform, GridMismatchIsRejected) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    ComplexSampledFunction g;
    g.grid = {0.0, 1.0};
    g.values = {1.0, 2.0};
    EXPECT_THROW(g_forward(ctx, g), ConfigError);
}

TEST(GTransform, EmbeddedModeRefused) {
    // separation at which eps_R(0) = 0 for k = 0.5; eps_I(0) = 0 by symmetry
    auto f = EquilibriumProfile::bi_maxwellian(0.9577874169314229, 1, 1);
    EXPECT_THROW(TransformContext(f, 0.5), EmbeddedModeError);
}

TEST(GTransform, UnstableEquilibriumRefused) {
    EXPECT_THROW(TransformContext(EquilibriumProfile::bi_maxwellian(2, 1, 1), 0.5), DomainError);
    TransformOptions o;
    o.require_stable = false;
    EXPECT_NO_THROW(TransformContext(EquilibriumProfile::bi_maxwellian(2, 1, 1), 0.5, o));
}

TEST(Evolve, ZeroTimeIsExact) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    auto z = ctx.sample([](double p) { return std::exp(-p * p); });
    EXPECT_EQ(sup_diff(evolve(ctx, z, 0.0), z), 0.0);
}

TEST(Evolve, GroupProperty) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    auto z = ctx.sample([](double p) { return std::exp(-(p - 0.3) * (p - 0.3)); });
    auto once = evolve(ctx, z, 3.5);
    auto twice = evolve(ctx, evolve(ctx, z, 1.5), 2.0);
    EXPECT_LT(sup_diff(once, twice), 1e-6 * sup_norm(once));
}

TEST(Evolve, FieldMomentMatchesTransformedSide) {
    // \int G[g] dp = \int g du, so the field moment is a Fourier integral of G^[zeta0]
    const double k = 0.6;
    TransformContext ctx(unit_maxwellian(), k);
    auto z0 = ctx.sample([](double p) { return std::exp(-p * p) * (1 + 0.3 * p); });
    auto g0 = g_inverse(ctx, z0);
    for (double t : {0.0, 4.0, 15.0}) {
        cplx direct = field_moment(ctx, evolve(ctx, z0, t));
        cplx spectral = 0.0;
        for (std::size_t i = 0; i < ctx.size(); ++i) {
            double w = (i == 0 || i + 1 == ctx.size()) ? 0.5 : 1.0;
            spectral += w * g0.values[i] * std::exp(cplx(0, -k * ctx.grid()[i] * t));
        }
        spectral *= ctx.spacing();
        EXPECT_LT(std::abs(direct - spectral), 1e-7 * std::abs(field_moment(ctx, z0))) << t;
    }
}

TEST(Evolve, LandauDampingRate) {
    // unit-mass Maxwellian with v_th^2 = 1/2, k v_th = 0.3
    const double k = 0.3 * std::sqrt(2.0);
    auto f = unit_maxwellian();
    TransformContext ctx(f, k);
    auto z0 = ctx.sample([](double p) { return std::exp(-p * p); });
    std::vector<double> ts;
    for (int i = 0; i <= 700; ++i) ts.push_back(0.1 * i);
    auto series = field_series(ctx, z0, ts);
    auto fit = fit_damping(series, 5 / 0.3, 20 / 0.3);
    EXPECT_GE(fit.peak_t.size(), 10u);
    EXPECT_LT(fit.max_residual, 1e-3);

    auto s = f.slope();
    double wr = marginal_frequency(s, k, 2.0, 4.0);
    auto est = marginal_growth_rate(s, k, wr);
    ASSERT_FALSE(est.indeterminate);
    EXPECT_LT(est.gamma, 0.0);
    EXPECT_LT(std::abs(fit.rate - est.gamma), 0.1 * std::abs(est.gamma));
    // damped root from the analytically continued plasma function (scipy wofz)
    EXPECT_NEAR(fit.rate, -0.012620368421116784, 2e-5);
    // beat period of |E| is pi / omega_R
    double period = (fit.peak_t.back() - fit.peak_t.front()) / static_cast<double>(fit.peak_t.size() - 1);
    EXPECT_NEAR(period, std::numbers::pi / 1.1598464805919175, 1e-3);
}

TEST(Evolve, FitNeedsPeaks) {
    FieldSeries s;
    s.t = {0, 1, 2, 3};
    s.moment = {4.0, 3.0, 2.0, 1.0};
    EXPECT_THROW(fit_damping(s, 0, 3), NotFound);
}

TEST(DiagonalEnergy, ZeroFieldHasZeroEnergy) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    std::vector<double> z(ctx.size(), 0.0);
    EXPECT_EQ(diagonal_energy(ctx, z, z), 0.0);
}

TEST(DiagonalEnergy, MaxwellianIsPositive) {
    TransformContext ctx(EquilibriumProfile::maxwellian(0, 1, 1), 1.0);
    for (int s : ctx.sigma()) EXPECT_GE(s, 0);
    auto z = ctx.sample([](double p) { return std::exp(-(p - 1) * (p - 1)); });
    EXPECT_GT(diagonal_energy(ctx, diagonal_variables(ctx, z)), 0.0);
}

TEST(DiagonalEnergy, NegativeSignatureBandGivesNegativeEnergy) {
    // stable bi-Maxwellian: sigma < 0 between the valley and the peaks
    TransformContext ctx(EquilibriumProfile::bi_maxwellian(2, 1, 1), 1.3);
    std::vector<double> Q(ctx.size(), 0.0), P(ctx.size(), 0.0);
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        double u = ctx.grid()[i];
        if (std::abs(u - 1.0) < 0.5) Q[i] = std::cos(std::numbers::pi * (u - 1.0));
    }
    EXPECT_LT(diagonal_energy(ctx, Q, P), 0.0);
}

TEST(DiagonalEnergy, ConservedUnderEvolution) {
    TransformContext ctx(unit_maxwellian(), 1.0);
    auto z0 = ctx.sample([](double p) { return std::exp(-p * p) * (1 + 0.5 * p); });
    double h0 = diagonal_energy(ctx, diagonal_variables(ctx, z0));
    ASSERT_GT(h0, 0.0);
    for (double t : {1.0, 2.5, 5.0, 10.0}) {
        double ht = diagonal_energy(ctx, diagonal_variables(ctx, evolve(ctx, z0, t)));
        EXPECT_LT(std::abs(ht - h0) / h0, 1e-6) << t;
    }
}

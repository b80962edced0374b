#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chh/dispersion.hpp"

using namespace chh;

namespace {

// Maxwellian plus a weak bump on its tail, eta = 0 is marginal.
EquilibriumProfile bump_on_tail(double eta) { return EquilibriumProfile::mixture({{0, 1, 1}, {5.2, 0.5, 0.02 * eta}}); }

EquilibriumProfile symmetric_bumps(double eta) {
    return EquilibriumProfile::mixture({{0, 1, 1}, {3, 0.3, eta}, {-3, 0.3, eta}});
}

DispersionRoot only_root(const std::vector<DispersionRoot>& r) {
    EXPECT_EQ(r.size(), 1u);
    return r.empty() ? DispersionRoot{} : r.front();
}

}  // namespace

TEST(EpsilonComplex, MaxwellianMatchesPlasmaFunction) {
    // 1 + 2 sqrt(pi) (1 + u Z(u)) / k^2, Z from the Faddeeva function (scipy wofz)
    auto s = EquilibriumProfile::maxwellian(0, 1, 1).slope();
    auto a = epsilon_complex(s, 1.0, {1.0, 1.0});
    EXPECT_NEAR(a.real(), 1.3218652157001136, 1e-10);
    EXPECT_NEAR(a.imag(), 0.6064861397257868, 1e-10);
    auto b = epsilon_complex(s, 0.7, {0.3, 0.2});
    EXPECT_NEAR(b.real(), 4.340020739638387, 1e-10);
    EXPECT_NEAR(b.imag(), 2.5769372073744705, 1e-10);
    // eps(-k, omega) = conj eps(k, -conj omega); the Maxwellian is even so both equal eps(k, omega)
    auto c = epsilon_complex(s, -0.7, {0.3, 0.2});
    EXPECT_NEAR(std::abs(c - b), 0.0, 1e-10);
}

TEST(EpsilonComplex, NegativeKReflection) {
    auto s = EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}}).slope();
    for (cplx w : {cplx(0.4, 0.3), cplx(-1.1, 0.05)}) {
        auto a = epsilon_complex(s, -0.6, w), b = epsilon_complex(s, 0.6, -std::conj(w));
        EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-11);
    }
}

TEST(EpsilonComplex, PlemeljLimitMatchesRealAxis) {
    auto s = EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}}).slope();
    const double k = 0.8;
    for (double u : {-2.0, -0.4, 0.9, 1.5, 3.0}) {
        auto e = epsilon_complex(s, k, {k * u, 1e-9});
        EXPECT_NEAR(e.real(), eps_R_at(s, k, u), 1e-6) << u;
        EXPECT_NEAR(e.imag(), eps_I_at(s, k, u), 1e-6) << u;
    }
}

TEST(EpsilonComplex, ExplicitSplitAgrees) {
    // separate real and imaginary integrals, evaluated independently
    auto s = EquilibriumProfile::bi_maxwellian(1.4, 0.8, 1.0, 0.2).slope();
    const double k = 0.9;
    const cplx w(0.5, 0.4);
    const cplx u = w / k;
    const double ur = u.real(), ui = u.imag();
    QuadOptions q{1e-13, 1e-12, 20000, true};
    auto pts = panel_points(s.lo, s.hi, std::vector<double>{ur});
    auto re = integrate([&](double p) { return s.d1(p) * (ur - p) / ((ur - p) * (ur - p) + ui * ui); }, pts, q).value;
    auto im = integrate([&](double p) { return s.d1(p) / ((ur - p) * (ur - p) + ui * ui); }, pts, q).value;
    auto e = epsilon_complex(s, k, w);
    EXPECT_NEAR(e.real(), 1 + re / (k * k), 1e-10);
    EXPECT_NEAR(e.imag(), -ui * im / (k * k), 1e-10);
}

TEST(EpsilonComplex, LimitsAndErrors) {
    auto s = EquilibriumProfile::maxwellian(0, 1, 1).slope();
    EXPECT_NEAR(std::abs(epsilon_complex(s, 1.0, {0.0, 1e4}) - 1.0), 0.0, 1e-7);
    EXPECT_NEAR(std::abs(epsilon_complex(s, 1.0, {3e3, 1.0}) - 1.0), 0.0, 1e-6);
    SlopeFunction flat{[](double) { return 0.0; }, [](double) { return 0.0; }, -3, 3, {}, 0, 0};
    EXPECT_EQ(epsilon_complex(flat, 0.5, {0.2, 0.1}), cplx(1.0, 0.0));
    EXPECT_THROW(epsilon_complex(s, 1.0, {0.2, 0.0}), DomainError);
    EXPECT_THROW(epsilon_complex(s, 1.0, {0.2, -0.3}), DomainError);
    EXPECT_THROW(epsilon_complex(s, 0.0, {0.2, 0.3}), DomainError);
}

TEST(CountZeros, EntireAndMeromorphicTestFunctions) {
    Rect r{-2, 2, -1.5, 1.7};
    EXPECT_EQ(count_zeros([](cplx z) { return std::exp(z); }, r).count, 0);
    auto poly = [](cplx z) { return (z - cplx(0.3, 0.2)) * (z - cplx(-1.0, -0.7)) * (z - cplx(-1.0, -0.7)); };
    auto c = count_zeros(poly, r);
    EXPECT_EQ(c.count, 3);
    EXPECT_NEAR(c.winding_real, 3.0, 0.05);
    EXPECT_EQ(count_zeros([](cplx z) { return 1.0 / (z - cplx(0.5, 0.1)); }, r).count, -1);
    EXPECT_EQ(count_zeros(poly, Rect{0.5, 1.5, 0.5, 1.5}).count, 0);
}

TEST(CountZeros, DegenerateBoundaryAndJitter) {
    auto f = [](cplx z) { return z - cplx(1.0, 0.5); };
    Rect r{-1, 1, 0.1, 2};  // root on the right edge
    EXPECT_THROW(count_zeros(f, r), RegionDegenerate);
    auto c = count_zeros_jittered(f, r, CountOptions{}, 0.1);
    EXPECT_EQ(c.count, 1);
    EXPECT_GT(c.region.re_hi, 1.0);
}

TEST(CountRoots, MaxwellianHasNone) {
    auto f = EquilibriumProfile::maxwellian(0, 1, 1);
    EXPECT_EQ(count_roots(f, 1.0, Rect{-3, 3, 1e-4, 3}).count, 0);
    EXPECT_EQ(count_roots(f, 1.0).count, 0);
    EXPECT_THROW(count_roots(f, 1.0, Rect{-3, 3, 0.0, 3}), DomainError);
}

TEST(CountRoots, SupercriticalBiMaxwellianOnePureImaginaryRootPerSign) {
    auto f = EquilibriumProfile::bi_maxwellian(2, 1, 1);
    for (double k : {0.5, -0.5}) {
        EXPECT_EQ(count_roots(f, k).count, 1);
        auto r = only_root(find_roots(f, k));
        EXPECT_LT(std::abs(r.omega.real()), 1e-10);
        EXPECT_GT(r.omega.imag(), 0.1);
        EXPECT_LT(r.residual, 1e-10);
    }
}

TEST(CountRoots, MatchesPenroseWinding) {
    std::vector<EquilibriumProfile> fs{
        EquilibriumProfile::maxwellian(0, 1, 1),
        EquilibriumProfile::bi_maxwellian(2, 1, 1),
        EquilibriumProfile::bi_maxwellian(0.9, 1, 1),
        EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}}),
        symmetric_bumps(0.1),
    };
    for (auto& f : fs)
        for (double k : {0.3, 0.5, 1.0}) {
            auto w = winding_number(f, k);
            EXPECT_EQ(count_roots(f, k).count, w.winding) << "k=" << k;
        }
}

TEST(RefineRoot, PureImaginarySeedStaysOnAxis) {
    auto s = EquilibriumProfile::bi_maxwellian(2, 1, 1).slope();
    auto r = refine_root(s, 0.5, {0.0, 0.3});
    EXPECT_LT(std::abs(r.omega.real()), 1e-12);
    EXPECT_LT(r.residual, 1e-10);
    EXPECT_EQ(r.multiplicity, 1);
}

TEST(RefineRoot, BisectionAgrees) {
    auto s = EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}}).slope();
    const double k = 0.5;
    auto roots = find_roots(s, k);
    ASSERT_FALSE(roots.empty());
    for (auto& r : roots) {
        double h = 0.05 * r.omega.imag();
        Rect box{r.omega.real() - 0.031, r.omega.real() + 0.027, r.omega.imag() - h, r.omega.imag() + 1.3 * h};
        auto z = locate_root_bisection(s, k, box);
        EXPECT_LT(std::abs(z - r.omega), 1e-8);
    }
}

TEST(RefineRoot, AsymmetricFamilyPastCriticality) {
    auto f = bump_on_tail(0.05);
    auto r = only_root(find_roots(f, 0.3));
    EXPECT_GT(std::abs(r.omega.real()), 1.0);
    EXPECT_GT(r.omega.imag(), 1e-3);
}

TEST(RefineRoot, NoRootMeansNoConvergence) {
    DispersionOptions o;
    o.newton_max_iter = 30;
    EXPECT_THROW(refine_root(EquilibriumProfile::maxwellian(0, 1, 1), 1.0, {0.5, 0.5}, o), NoConvergence);
    EXPECT_THROW(refine_root(EquilibriumProfile::maxwellian(0, 1, 1), 1.0, {0.5, -0.5}), DomainError);
}

TEST(RefineRoot, MultiplicityFromShrinkingBoxes) {
    ComplexFn f = [](cplx z) { return (z - cplx(0.2, 0.5)) * (z - cplx(0.2, 0.5)) * (z + 3.0); };
    EXPECT_EQ(root_multiplicity(f, {0.2, 0.5}, DispersionOptions{}), 2);
}

TEST(Multiplet, CSSPair) {
    auto f = EquilibriumProfile::bi_maxwellian(2, 1, 1);
    auto all = with_conjugates(find_roots(f, 0.5));
    ASSERT_EQ(all.size(), 2u);
    for (auto c : classify_multiplet(all, true)) EXPECT_EQ(c, SymmetryClass::css_pair_member);
}

TEST(Multiplet, AsymmetricQuartet) {
    auto f = bump_on_tail(0.05);
    auto up = find_roots(f, 0.3), down = find_roots(f, -0.3);
    ASSERT_EQ(up.size(), 1u);
    ASSERT_EQ(down.size(), 1u);
    EXPECT_NEAR(std::abs(down[0].omega + std::conj(up[0].omega)), 0.0, 1e-9);
    auto roots = up;
    roots.insert(roots.end(), down.begin(), down.end());
    auto all = with_conjugates(roots);
    ASSERT_EQ(all.size(), 4u);
    for (auto c : classify_multiplet(all, false)) EXPECT_EQ(c, SymmetryClass::quartet_member);
}

TEST(Multiplet, SymmetrizedOctet) {
    auto f = symmetric_bumps(0.1);
    EXPECT_EQ(winding_number(f, 0.5).winding, 2);
    auto up = find_roots(f, 0.5), down = find_roots(f, -0.5);
    ASSERT_EQ(up.size(), 2u);
    auto roots = up;
    roots.insert(roots.end(), down.begin(), down.end());
    auto all = with_conjugates(roots);
    ASSERT_EQ(all.size(), 8u);
    for (auto c : classify_multiplet(all, true)) EXPECT_EQ(c, SymmetryClass::octet_member);
}

TEST(Multiplet, UnpairedRootIsViolation) {
    DispersionRoot r;
    r.omega = {0.4, 0.2};
    r.k = 1.0;
    EXPECT_THROW(classify_multiplet({r}, false), SymmetryViolation);
    auto ok = with_conjugates({r});
    EXPECT_NO_THROW(classify_multiplet(ok, false));
    EXPECT_THROW(classify_multiplet(ok, true), SymmetryViolation);
    DispersionRoot e;
    e.omega = {0.7, 0.0};
    e.k = 1.0;
    EXPECT_EQ(classify_multiplet({e}, false)[0], SymmetryClass::real_embedded);
}

TEST(Marginal, SymmetricZeroKCriticalStateIsIndeterminate) {
    ProfileFamily fam{"separation", 0.8, 2.0, [](double p1) { return EquilibriumProfile::bi_maxwellian(p1, 1, 1); }};
    auto st = find_critical_state(fam, 0.0);
    auto m = marginal_growth_rate(fam.make(st.eta).slope(), 0.0, 0.0);
    EXPECT_TRUE(m.indeterminate);
    EXPECT_TRUE(std::isnan(m.gamma));
}

TEST(Marginal, MatchesRootToSecondOrder) {
    const double k = 0.3;
    for (double eta : {0.01, 0.02, 0.05}) {
        auto s = bump_on_tail(eta).slope();
        double wr = marginal_frequency(s, k, 3.5, 6.0);
        auto m = marginal_growth_rate(s, k, wr);
        ASSERT_FALSE(m.indeterminate);
        auto r = refine_root(s, k, {wr, m.gamma});
        EXPECT_LT(std::abs(m.gamma - r.omega.imag()), 0.5 * eta * eta) << eta;
        EXPECT_GT(r.omega.imag(), 0.0);
    }
}

TEST(Marginal, MaxwellianIsDamped) {
    auto s = EquilibriumProfile::maxwellian(0, 1, 1).slope();
    const double k = 0.5;
    double wr = marginal_frequency(s, k, 2.0, 8.0);
    auto m = marginal_growth_rate(s, k, wr);
    EXPECT_LT(m.gamma, 0.0);
    EXPECT_THROW(marginal_growth_rate(s, k, 0.9 * wr), DomainError);
}

TEST(Marginal, PoleLikeWhenOnlyDenominatorVanishes) {
    // extremum of PV(u) for the Maxwellian, with k^2 chosen to put eps_R = 0 there
    auto s = EquilibriumProfile::maxwellian(0, 1, 1).slope();
    auto h = HilbertOptions::with_tol(1e-11);
    double a = 1.0, b = 2.5;
    for (int i = 0; i < 60; ++i) {
        double m = 0.5 * (a + b);
        (deps_R_du_scaled(s, m, h) > 0) == (deps_R_du_scaled(s, a, h) > 0) ? a = m : b = m;
    }
    double us = 0.5 * (a + b), pv = pv_slope(s, us, h);
    ASSERT_GT(pv, 0.0);
    double k = std::sqrt(pv);
    EXPECT_THROW(marginal_growth_rate(s, k, k * us), PoleLikeError);
}

TEST(DispersionProperty, SymmetricProfilesHaveRealOmegaSquared) {
    for (auto f : {EquilibriumProfile::bi_maxwellian(2, 1, 1), EquilibriumProfile::bi_maxwellian(1.6, 0.8, 1)})
        for (double k : {0.3, 0.6}) {
            auto s = f.slope();
            for (auto& r : find_roots(s, k)) {
                cplx w2 = r.omega * r.omega;
                EXPECT_LT(std::abs(w2.imag()), 1e-6 * std::abs(w2));
                EXPECT_FALSE(symmetry_integral(s, k, r.omega).integral_vanishes);
            }
        }
}

TEST(DispersionProperty, OctetRootsSitWhereTheSymmetryIntegralVanishes) {
    auto s = symmetric_bumps(0.1).slope();
    for (auto& r : find_roots(s, 0.5)) {
        auto d = symmetry_integral(s, 0.5, r.omega);
        EXPECT_GT(d.omega2_imag_rel, 1e-3);
        EXPECT_TRUE(d.integral_vanishes);
    }
}

TEST(DispersionProperty, GalileanShift) {
    auto f = EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}});
    const double v = 0.5, k = 0.5;
    auto a = find_roots(f, k), b = find_roots(f.shifted(v), k);
    ASSERT_EQ(a.size(), b.size());
    ASSERT_FALSE(a.empty());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(std::abs(b[i].omega - (a[i].omega + k * v)), 1e-8);
}

TEST(DispersionProperty, ConjugateClosureAcrossKSigns) {
    auto f = EquilibriumProfile::mixture({{-1.2, 0.7, 1}, {1.5, 0.5, 0.6}});
    auto up = find_roots(f, 0.5), down = find_roots(f, -0.5);
    ASSERT_EQ(up.size(), down.size());
    auto roots = up;
    roots.insert(roots.end(), down.begin(), down.end());
    EXPECT_NO_THROW(classify_multiplet(with_conjugates(roots), false));
}

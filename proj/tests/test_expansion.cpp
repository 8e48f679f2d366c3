#include <gtest/gtest.h>

#include "support.hpp"

using namespace slabfano;
using namespace slabfano::testing;

namespace {

// Known zero curve about (0.2, 1.1): omega - w0 = -(0.3 k + (0.1 + 0.2i) k^2 + ...),
// dressed with a unit factor.
cplx synthetic(cplx kappa, cplx w) {
    const double w0 = 1.1;
    const cplx k = kappa - 0.2;
    const cplx unit = std::exp(cplx(0.0, 0.4)) * (1.0 + 0.5 * (w - w0) + cplx(0.0, 0.2) * k);
    return unit * ((w - w0) + 0.3 * k + cplx(0.1, 0.2) * k * k + 0.05 * k * k * k);
}

} // namespace

TEST(ZeroCurve, RecoversSyntheticCoefficients) {
    const auto fit = fit_zero_curve(synthetic, 0.2, 1.1);
    EXPECT_LT(std::abs(fit.c[1] - 0.3), 1e-8);
    EXPECT_LT(std::abs(fit.c[2] - cplx(0.1, 0.2)), 1e-8);
    EXPECT_LT(fit.err[1], 1e-8);
    EXPECT_LT(fit.err[2], 1e-6);
    EXPECT_EQ(classify_case(fit.c[1], fit.err[1]).case_id, 1);
}

TEST(ZeroCurve, InvariantUnderAUnitFactor) {
    auto scaled = [](cplx k, cplx w) { return synthetic(k, w) * (2.0 - 0.7 * (k - 0.2) + cplx(0.3, 0.1) * (w - 1.1)); };
    const auto a = fit_zero_curve(synthetic, 0.2, 1.1);
    const auto b = fit_zero_curve(scaled, 0.2, 1.1);
    for (int k = 1; k <= 2; ++k) EXPECT_LT(std::abs(a.c[k] - b.c[k]), 3.0 * (a.err[k] + b.err[k])) << "order " << k;
}

TEST(Classification, ThresholdsAndAmbiguousBand) {
    EXPECT_EQ(classify_case(1e-6, 1e-6).case_id, 2);
    EXPECT_FALSE(classify_case(1e-6, 1e-6).ambiguous);
    EXPECT_EQ(classify_case(5e-6, 1e-6).case_id, 2);
    EXPECT_TRUE(classify_case(5e-6, 1e-6).ambiguous);
    EXPECT_EQ(classify_case(2e-5, 1e-6).case_id, 1);
    EXPECT_FALSE(classify_case(2e-5, 1e-6).ambiguous);
}

TEST(Classification, ShippedModes) {
    EXPECT_EQ(case2().c.case_id, 2);
    EXPECT_FALSE(case2().c.ambiguous);
    EXPECT_EQ(case1().c.case_id, 1);
    EXPECT_FALSE(case1().c.ambiguous);
    EXPECT_NE(case1().mode.kappa0, 0.0);
}

TEST(Convexity, GapIsNonnegativeAndVanishesOnlyOnTheDiagonal) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0), th(0.01, 1.55);
    for (int i = 0; i < 500; ++i) {
        const double t = th(rng), r0 = std::sin(t), t0 = std::cos(t);
        const double a = u(rng), b = u(rng);
        const double gap = convexity_gap(r0, t0, a, b);
        EXPECT_GE(gap, -1e-14);
        EXPECT_NEAR(gap, r0 * r0 * t0 * t0 * (a - b) * (a - b), 1e-12);
        EXPECT_NEAR(convexity_gap(r0, t0, a, a), 0.0, 1e-14);
    }
}

TEST(Background, UnitRelation) {
    for (const auto* e : {&case1(), &case2()}) {
        EXPECT_GT(e->c.t0, 0.0);
        EXPECT_LT(e->c.t0, 1.0);
        EXPECT_NEAR(e->c.r0 * e->c.r0 + e->c.t0 * e->c.t0, 1.0, 1e-12);
        EXPECT_NEAR(e->c.r0_direct, e->c.r0, 1e-8);
    }
}

TEST(Background, Case2LimitAlongKappa) {
    const auto& e = case2();
    auto ell = [&](cplx k, cplx w) { return coefficient_triple({k, w}, e.cfg).ell; };
    auto b = [&](cplx k, cplx w) { return coefficient_triple({k, w}, e.cfg).b; };
    ZeroCurveOptions opt;
    opt.rho = e.c.rho;
    const auto fl = fit_zero_curve(ell, e.mode.kappa0, e.mode.omega0, opt);
    const auto fb = fit_zero_curve(b, e.mode.kappa0, e.mode.omega0, opt);
    const auto bg = extract_background(e.mode, e.cfg, fl, fb, 2);
    EXPECT_NEAR(std::abs(bg.T_limit_kappa), e.c.t0 * std::abs(e.c.t2 / e.c.l2), 1e-6);
    // The two limits differ: T is discontinuous at the mode.
    EXPECT_GT(std::abs(std::abs(bg.T_limit_kappa) - e.c.t0), 1e-3);
}

TEST(Relations, Case1WithinPropagatedError) {
    const auto rep = verify_relations(case1().c);
    ASSERT_EQ(rep.case_id, 1);
    for (const auto& ch : rep.checks) EXPECT_TRUE(ch.passed()) << ch.name << ": " << ch.residual << " vs " << ch.error;
    EXPECT_LT(case1().c.err.l1, 1e-4);
    EXPECT_LT(case1().c.err.r1, 1e-4);
    EXPECT_LT(case1().c.err.t1, 1e-4);
    // l1 = r1 = t1 forces Re r1 = Re t1: the convexity gap closes.
    EXPECT_LT(convexity_gap(case1().c.r0, case1().c.t0, case1().c.r1, case1().c.t1), 1e-6);
}

TEST(Relations, Case2WithinPropagatedError) {
    const auto& c = case2().c;
    const auto rep = verify_relations(c);
    ASSERT_EQ(rep.case_id, 2);
    for (const auto& ch : rep.checks) EXPECT_TRUE(ch.passed()) << ch.name << ": " << ch.residual << " vs " << ch.error;
    EXPECT_LT(c.err.l2, 1e-4);
    EXPECT_LT(c.err.r2, 1e-4);
    EXPECT_LT(c.err.t2, 1e-4);
    const double lo = std::min(c.r2.real(), c.t2.real()), hi = std::max(c.r2.real(), c.t2.real());
    EXPECT_GE(c.l2.real(), lo - 3.0 * c.err.l2);
    EXPECT_LE(c.l2.real(), hi + 3.0 * c.err.l2);
    EXPECT_GT(c.l2.imag(), 0.0); // omega = omega0 - l2 k^2 leaks into Im omega < 0
}

TEST(Relations, Case2CubicTermVanishesByEvenness) {
    const auto& e = case2();
    auto ell = [&](cplx k, cplx w) { return coefficient_triple({k, w}, e.cfg).ell; };
    const auto fit = fit_zero_curve(ell, e.mode.kappa0, e.mode.omega0);
    EXPECT_LT(std::abs(fit.c[1]), 3.0 * fit.err[1]);
    EXPECT_FALSE(fit.cubic_used);
}

TEST(Stability, HalvingTheRadius) {
    for (const auto* e : {&case1(), &case2()}) {
        const auto half = extract_coefficients(e->mode, e->cfg, 0.5 * e->c.rho);
        const auto& a = e->c;
        const auto& b = half;
        EXPECT_LT(std::abs(a.l1 - b.l1), 5.0 * (a.err.l1 + b.err.l1) + 1e-12);
        EXPECT_LT(std::abs(a.l2 - b.l2), 5.0 * (a.err.l2 + b.err.l2) + 1e-12);
        EXPECT_LT(std::abs(a.r2 - b.r2), 5.0 * (a.err.r2 + b.err.r2) + 1e-12);
        EXPECT_LT(std::abs(a.t2 - b.t2), 5.0 * (a.err.t2 + b.err.t2) + 1e-12);
        EXPECT_EQ(a.case_id, b.case_id);
    }
}

TEST(Radius, PendantPoleLimitsTheSamplingDisc) {
    const auto& e = case1();
    const double r = analyticity_radius(e.mode.kappa0, e.mode.omega0, e.cfg);
    EXPECT_LE(r, std::abs(std::sqrt(1.23) - e.mode.omega0) + 1e-12);
    EXPECT_LE(e.c.rho, 0.5 * r + 1e-15);
}

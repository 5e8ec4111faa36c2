#include <gtest/gtest.h>

#include <cmath>

#include "delaycomp/analysis.hpp"
#include "delaycomp/bench.hpp"

using namespace delaycomp;

namespace {

const double kS3 = std::sqrt(3.0);

LyapunovBudget unit_budget() {
    LyapunovBudget b;
    b.alpha = 1.0;
    b.beta = 1.0;
    b.c3pp = 1.0;
    return b;
}

}  // namespace

TEST(Growth, UnitBudget) {
    const GrowthConstants g = mu_nu_constants(unit_budget());
    EXPECT_NEAR(g.mu, 3.0 * kS3, 1e-14);
    EXPECT_NEAR(g.nu, 5.0 * kS3, 1e-14);
    EXPECT_NEAR(g.nu0, 2.0 * kS3, 1e-14);
}

TEST(SamplingPeriod, UnitBudgetValue) {
    const SamplingConstants k{3.0 * kS3, 5.0 * kS3, 2.0 * kS3, 1.0, 1.0};
    // ln(1 + 2.5/(6√3)) / (5√3)
    EXPECT_NEAR(max_sampling_period(k), std::log(1.0 + 2.5 / (6.0 * kS3)) / (5.0 * kS3), 1e-15);
    EXPECT_NEAR(max_sampling_period(k), 0.0248913, 1e-7);
    EXPECT_NEAR(max_sampling_period(unit_budget()), max_sampling_period(k), 1e-15);
}

TEST(SamplingPeriod, PhiValue) {
    const SamplingConstants k{3.0 * kS3, 5.0 * kS3, 2.0 * kS3, 1.0, 1.0};
    EXPECT_NEAR(phi_of_T(k, 0.02), 0.4 * 6.0 * kS3 * std::expm1(0.1 * kS3), 1e-14);
    EXPECT_NEAR(phi_of_T(k, 0.02), 0.786115, 1e-6);
}

TEST(SamplingPeriod, PhiReachesOneAtLimit) {
    const SamplingConstants k{2.0, 3.0, 1.5, 0.4, 0.7};
    const double Tmax = max_sampling_period(k);
    EXPECT_NEAR(phi_of_T(k, Tmax * (1 - 1e-12)), 1.0, 1e-9);
    EXPECT_THROW((void)phi_of_T(k, Tmax), OutOfRange);
    EXPECT_THROW((void)phi_of_T(k, 0.0), OutOfRange);
}

TEST(SamplingPeriod, PhiRoundTrip) {
    const SamplingConstants k{2.0, 3.0, 1.5, 0.4, 0.7};
    for (double phi : {1e-6, 0.1, 0.5, 0.99}) {
        EXPECT_NEAR(phi_of_T(k, T_of_phi(k, phi)), phi, 1e-12);
    }
}

TEST(SamplingPeriod, PhiIncreasingInT) {
    const SamplingConstants k{2.0, 3.0, 1.5, 0.4, 0.7};
    const double Tmax = max_sampling_period(k);
    double prev = 0.0;
    for (int i = 1; i < 100; ++i) {
        const double phi = phi_of_T(k, Tmax * i / 100.0);
        EXPECT_GT(phi, prev);
        prev = phi;
    }
}

TEST(DeltaRegion, WorkedValue) {
    const SamplingConstants k{2.0, 1.0, 2.0 * kS3, 1.0, 1.0};
    const DeltaRegion r = delta_region_phi(k, 0.1, 0.01);
    const double numer = 2.0 * 2.0 * 2.0 * kS3 * 0.01 + (0.02 + 1.0 / kS3) * 0.1;
    EXPECT_NEAR(r.delta_lo, numer / (2.0 * kS3 * 0.9), 1e-15);
    EXPECT_NEAR(r.delta_lo, 0.063605, 1e-6);
    const double eps = 0.5 * (std::sqrt(0.1) + 1.0);
    EXPECT_NEAR(r.epsilon, eps, 1e-15);
    EXPECT_NEAR(r.delta_min, numer / (2.0 * kS3 * (eps * eps - 0.1)), 1e-15);
    EXPECT_NEAR(r.delta1, eps * r.delta_min, 1e-15);
    EXPECT_GT(r.delta_min, r.delta_lo);
}

TEST(DeltaRegion, Limits) {
    const SamplingConstants k{2.0, 1.0, 2.0 * kS3, 1.0, 1.0};
    // E = 0: residual region shrinks with φ.
    EXPECT_LT(delta_region_phi(k, 1e-6, 0.0).delta_lo, 1e-6);
    EXPECT_LT(delta_region_phi(k, 0.1, 0.0).delta_lo, delta_region_phi(k, 0.2, 0.0).delta_lo);
    EXPECT_LT(delta_region_phi(k, 0.1, 0.01).delta_lo, delta_region_phi(k, 0.1, 0.02).delta_lo);
    EXPECT_THROW((void)delta_region_phi(k, 1.0, 0.0), OutOfRange);
    EXPECT_THROW((void)delta_region_phi(k, 0.25, 0.0, 0.5), OutOfRange);
    EXPECT_THROW((void)delta_region_phi(k, 0.1, -1.0), ConfigError);
}

TEST(Budget, DefaultsExceedBounds) {
    LyapunovBudget b;
    b.c3 = 0.5;
    b.c4 = 2.0;
    b.L_g = 1.5;
    b.rho = 0.3;
    b.gamma_min = 0.8;
    const LyapunovBudget done = complete_budget(b);
    EXPECT_NEAR(done.alpha, 1.01 * std::max(alpha_lower_bound(b), alpha_lower_bound_gamma(b)), 1e-15);
    ASSERT_TRUE(beta_lower_bound(done, done.alpha));
    EXPECT_NEAR(done.beta, 1.01 * *beta_lower_bound(done, done.alpha), 1e-15);
    const BudgetReport r = check_budget(done);
    EXPECT_TRUE(r.observer_condition);
    EXPECT_GT(r.k1_min_eig, 0.0);
    EXPECT_TRUE(r.k2_positive_definite);
    EXPECT_NEAR(done.c3pp, r.k2_min_eig, 1e-15);
}

TEST(Budget, BelowBoundIsIndefinite) {
    LyapunovBudget b;
    b.c4 = 2.0;
    b.alpha = 0.9 * alpha_lower_bound(b);
    EXPECT_LT(min_eigenvalue(k1_matrix(b)), 0.0);
    b.alpha = 1.1 * alpha_lower_bound(b);
    EXPECT_GT(min_eigenvalue(k1_matrix(b)), 0.0);
}

TEST(Budget, BetaEqualsAlphaWithoutCoupling) {
    const LyapunovBudget done = complete_budget(LyapunovBudget{});
    EXPECT_EQ(done.beta, done.alpha);
}

TEST(Budget, K2HandEigenvalues) {
    // ρ = 0 decouples the observer block: eigenvalues are those of K₁ (Γ for Λ) and 2βω.
    LyapunovBudget b;
    b.alpha = 2.0;
    b.beta = 0.1;
    const double tr = b.c3 + 4.0, det = b.c3 * 4.0 - 0.25;
    const double k1min = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
    EXPECT_NEAR(min_eigenvalue(k2_matrix(b)), std::min(k1min, 0.2), 1e-12);
}

TEST(Budget, RejectsNonPositiveConstants) {
    LyapunovBudget b;
    b.c3 = 0.0;
    EXPECT_THROW((void)complete_budget(b), ConfigError);
    b = LyapunovBudget{};
    b.rho = -1.0;
    EXPECT_THROW((void)complete_budget(b), ConfigError);
}

TEST(Curve, ComposesTimingAndRegion) {
    const BenchPreset preset = table2_preset();
    LyapunovBudget b = preset.budget;
    b.rk = preset.rk_params(4, 0.0);
    const TimingModel tm = preset.timing(0.2);
    const std::vector<double> grid = step_grid(tm, 4, 6);
    const auto curve = theory_error_curve(b, tm, 4, grid);
    ASSERT_EQ(curve.size(), grid.size());
    const SamplingConstants k = sampling_constants(b);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const CurvePoint& pt = curve[i];
        EXPECT_NEAR(pt.delta_c, comp_delay(tm, pt.h, 4), 1e-15);
        EXPECT_NEAR(pt.e_rk, erk_of_step(tm, b.rk, pt.h, 4), 1e-15);
        EXPECT_NEAR(pt.phi, phi_of_T(k, tm.T), 1e-15);
        EXPECT_NEAR(pt.delta_lo, delta_region_phi(k, pt.phi, pt.e_rk).delta_lo, 1e-15);
        if (i > 0) {
            EXPECT_LE(curve[i - 1].delta_c, pt.delta_c);
        }
    }
}

TEST(Curve, PeriodTiedToComputationDelay) {
    const BenchPreset preset = table2_preset();
    LyapunovBudget b = preset.budget;
    b.rk = preset.rk_params(1, 0.0);
    const TimingModel tm = preset.timing(0.1);
    const std::vector<double> grid = step_grid(tm, 1, 5);
    const SamplingConstants k = sampling_constants(b);
    for (const CurvePoint& pt : theory_error_curve(b, tm, 1, grid, PeriodMode::EqualsCompDelay)) {
        EXPECT_NEAR(pt.phi, phi_of_T(k, pt.delta_c), 1e-15);
    }
}

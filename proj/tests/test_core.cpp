#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "delaycomp/bench.hpp"
#include "delaycomp/core.hpp"

using namespace delaycomp;

namespace {

StateVec vec(std::initializer_list<double> v) {
    StateVec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

ErrorDynamics ddi_error(double b, ReferenceTrajectory traj) {
    return ErrorDynamics(ddi_plant(b), std::move(traj));
}

}  // namespace

TEST(ErrorDynamics, VanishesAtReferenceControl) {
    const auto traj = sine_trajectory(2, 1.0, 1.0);
    const auto ed = ddi_error(1.0, traj);
    for (double t : {0.0, 0.4, 1.3, 2.9}) {
        const ActuatorVec eta_star = traj.r_ddot(t).head(1);
        EXPECT_LT(ed.g(StateVec::Zero(2), eta_star, t).norm(), 1e-14) << t;
    }
}

TEST(ErrorDynamics, ZeroReferenceReducesToPlant) {
    const auto ed = ddi_error(2.5, constant_trajectory(2, 0.0));
    const StateVec g = ed.g(vec({0.3, -0.7}), vec({0.4}), 1.0);
    EXPECT_DOUBLE_EQ(g[0], -0.7);
    EXPECT_DOUBLE_EQ(g[1], 2.5 * 0.4);
}

TEST(ErrorDynamics, PositionOffsetAtTimeZero) {
    // x = (0.1, 1), f = (1, 0), ṙ(0) = (1, 0)
    const auto ed = ddi_error(1.0, sine_trajectory(2, 1.0, 1.0));
    const StateVec g = ed.g(vec({0.1, 0.0}), vec({0.0}), 0.0);
    EXPECT_NEAR(g[0], 0.0, 1e-15);
    EXPECT_NEAR(g[1], 0.0, 1e-15);
}

TEST(ErrorDynamics, FreeFunctionMatchesMember) {
    const auto ed = ddi_error(1.0, sine_trajectory(2, 1.0, 1.0));
    const StateVec x = vec({0.2, -0.1});
    const ActuatorVec a = vec({0.3});
    EXPECT_EQ(g_eval(ed, x, a, 0.7), ed.g(x, a, 0.7));
}

TEST(PlantModel, RejectsWrongDimensions) {
    const PlantModel p = ddi_plant(1.0);
    EXPECT_THROW((void)p(vec({1.0}), vec({0.0}), 0.0), ConfigError);
    EXPECT_THROW((void)p(vec({1.0, 0.0}), vec({0.0, 1.0}), 0.0), ConfigError);
}

TEST(Feasibility, ReferenceControlOfDoubleIntegrator) {
    std::vector<double> ts;
    for (int i = 0; i <= 100; ++i) ts.push_back(0.1 * i);
    const DDISystem sys = ddi_system(DDIParams{}, sine_trajectory(2, 1.0, 1.0));
    EXPECT_EQ(reference_feasibility_check(sys.error_dynamics, ts), Feasibility::Feasible);

    ReferenceTrajectory zero = sine_trajectory(2, 1.0, 1.0);
    zero.ref_control = [](double) { return ActuatorVec::Zero(1); };
    EXPECT_EQ(reference_feasibility_check(ddi_error(1.0, zero), ts), Feasibility::Infeasible);

    ReferenceTrajectory nudged = sine_trajectory(2, 1.0, 1.0);
    nudged.ref_control = [](double t) { return ActuatorVec::Constant(1, -std::sin(t) + 1e-3); };
    EXPECT_EQ(reference_feasibility_check(ddi_error(1.0, nudged), ts), Feasibility::Infeasible);

    ReferenceTrajectory none = sine_trajectory(2, 1.0, 1.0);
    none.ref_control.reset();
    EXPECT_EQ(reference_feasibility_check(ddi_error(1.0, none), ts), Feasibility::NotCheckable);
}

TEST(Trajectory, SineDerivatives) {
    const auto tr = sine_trajectory(2, 2.0, 3.0);
    const double t = 0.37;
    EXPECT_DOUBLE_EQ(tr.r(t)[0], 2.0 * std::sin(3.0 * t));
    EXPECT_DOUBLE_EQ(tr.r(t)[1], 6.0 * std::cos(3.0 * t));
    EXPECT_NEAR(tr.r_dot(t)[0], tr.r(t)[1], 1e-14);
    EXPECT_NEAR(tr.r_ddot(t)[0], -18.0 * std::sin(3.0 * t), 1e-13);
    ASSERT_TRUE(tr.r_dddot);
    EXPECT_NEAR((*tr.r_dddot)(t)[0], -54.0 * std::cos(3.0 * t), 1e-12);
}

TEST(Trajectory, FiniteDifferenceAgreesWithAnalytic) {
    const auto exact = sine_trajectory(2, 1.0, 2.0);
    const auto fd = finite_difference_trajectory(exact.r);
    for (double t : {0.1, 1.0, 2.5}) {
        EXPECT_NEAR((fd.r_dot(t) - exact.r_dot(t)).norm(), 0.0, 1e-8);
        EXPECT_NEAR((fd.r_ddot(t) - exact.r_ddot(t)).norm(), 0.0, 1e-5);
        ASSERT_TRUE(fd.r_dddot);
        EXPECT_NEAR(((*fd.r_dddot)(t) - (*exact.r_dddot)(t)).norm(), 0.0, 1e-2);
    }
}

TEST(Lipschitz, UnitSlopeMapWithinTenPercent) {
    // F(v) = (sin v0, v1) has Lipschitz constant exactly 1.
    const auto fn = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(2);
        out << std::sin(v[0]), v[1];
        return out;
    };
    Box box{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
    const double L = estimate_lipschitz(fn, box);
    EXPECT_LE(L, 1.0 + 1e-12);
    EXPECT_GE(L, 0.9);
}

TEST(Lipschitz, ErrorDynamicsOfDoubleIntegrator) {
    // g is linear in (x̃, η) with matrix [[0,1,0],[0,0,b]]: constant max(1, |b|).
    const auto ed = ddi_error(2.0, sine_trajectory(2, 1.0, 1.0));
    Box box{Eigen::VectorXd::Constant(3, -1.0), Eigen::VectorXd::Constant(3, 1.0)};
    const double L = estimate_lipschitz_g(ed, box, 0.3);
    EXPECT_LE(L, 2.0 + 1e-12);
    EXPECT_GE(L, 1.8);
}

TEST(Lipschitz, DeterministicForSeed) {
    const auto fn = [](const Eigen::VectorXd& v) { return Eigen::VectorXd(v.array().tanh()); };
    Box box{Eigen::VectorXd::Constant(3, -2.0), Eigen::VectorXd::Constant(3, 2.0)};
    EXPECT_EQ(estimate_lipschitz(fn, box, 500, 7), estimate_lipschitz(fn, box, 500, 7));
}

TEST(AllFinite, DetectsNonFinite) {
    EXPECT_TRUE(all_finite(vec({1.0, 2.0})));
    EXPECT_FALSE(all_finite(vec({1.0, std::nan("")})));
    EXPECT_FALSE(all_finite(vec({std::numeric_limits<double>::infinity()})));
}

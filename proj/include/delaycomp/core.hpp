#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "delaycomp/errors.hpp"

namespace delaycomp {

using StateVec = Eigen::VectorXd;     // plant state x, or tracking error x̃ (length n)
using ActuatorVec = Eigen::VectorXd;  // actuator state η, command u (length m)
using Matrix = Eigen::MatrixXd;

// ẋ = f(x, η, t)
struct PlantModel {
    using Eval = std::function<StateVec(const StateVec& x, const ActuatorVec& eta, double t)>;

    int n = 0;
    int m = 0;
    Eval eval;
    std::optional<double> lipschitz_f;

    // Checked evaluation: dimensions of inputs and output are enforced.
    [[nodiscard]] StateVec operator()(const StateVec& x, const ActuatorVec& eta, double t) const;
};

// Time-prescribed reference r(t) with analytic derivatives.
struct ReferenceTrajectory {
    using Signal = std::function<StateVec(double t)>;
    using Control = std::function<ActuatorVec(double t)>;

    Signal r;
    Signal r_dot;
    Signal r_ddot;
    // Third derivative; only controllers whose ū̇ needs ∂ū/∂t through r̈ use it.
    std::optional<Signal> r_dddot;
    // Reference control η*(t) with f(r, η*, t) = ṙ.
    std::optional<Control> ref_control;
};

// Builds a trajectory from r alone, with central differences (step 1e-5) for
// the derivatives.
[[nodiscard]] ReferenceTrajectory finite_difference_trajectory(
    ReferenceTrajectory::Signal r, double step = 1e-5);

// r(t) = A·sin(ωt) on the first state and A·ω·cos(ωt) on the second (position
// and velocity of a second-order system). Remaining states, if any, are zero.
[[nodiscard]] ReferenceTrajectory sine_trajectory(int n, double amplitude, double omega);

// Constant position reference r ≡ c on the first state.
[[nodiscard]] ReferenceTrajectory constant_trajectory(int n, double value);

// ẋ̃ = g(x̃, η, t) = f(x̃ + r(t), η, t) − ṙ(t)
class ErrorDynamics {
public:
    ErrorDynamics(PlantModel plant, ReferenceTrajectory traj);

    [[nodiscard]] const PlantModel& plant() const noexcept { return plant_; }
    [[nodiscard]] const ReferenceTrajectory& trajectory() const noexcept { return traj_; }
    [[nodiscard]] int n() const noexcept { return plant_.n; }
    [[nodiscard]] int m() const noexcept { return plant_.m; }

    [[nodiscard]] StateVec g(const StateVec& xerr, const ActuatorVec& act, double t) const;

private:
    PlantModel plant_;
    ReferenceTrajectory traj_;
};

[[nodiscard]] inline StateVec g_eval(const ErrorDynamics& ed, const StateVec& xerr,
                                     const ActuatorVec& act, double t) {
    return ed.g(xerr, act, t);
}

enum class Feasibility { Feasible, Infeasible, NotCheckable };

// True iff ‖g(0, η*(t), t)‖ ≤ tol at every sample; NotCheckable without η*.
[[nodiscard]] Feasibility reference_feasibility_check(const ErrorDynamics& ed,
                                                      std::span<const double> t_samples,
                                                      double tol = 1e-8);

// Axis-aligned box used when a Lipschitz constant must be estimated.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

// Largest ‖F(a) − F(b)‖ / ‖a − b‖ over `samples` uniform random pairs in `box`.
[[nodiscard]] double estimate_lipschitz(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, const Box& box,
    int samples = 10000, std::uint64_t seed = 1);

// Lipschitz constant of g in the stacked argument (x̃, η) at fixed time t.
[[nodiscard]] double estimate_lipschitz_g(const ErrorDynamics& ed, const Box& box, double t,
                                          int samples = 10000, std::uint64_t seed = 1);

[[nodiscard]] bool all_finite(const Eigen::VectorXd& v) noexcept;

}  // namespace delaycomp

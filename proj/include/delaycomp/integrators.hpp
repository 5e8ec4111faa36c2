#pragma once

#include <functional>
#include <vector>

#include "delaycomp/core.hpp"

namespace delaycomp {

// Explicit Butcher tableau; stage count equals the order for every scheme we ship.
struct ButcherTableau {
    std::vector<double> nodes;                 // c
    std::vector<double> weights;               // b
    std::vector<std::vector<double>> stages;   // a, strictly lower triangular
};

// Fixed-step explicit Runge-Kutta method of order p ∈ {1, 2, 3, 4}.
//   p = 1  forward Euler
//   p = 2  Heun (explicit trapezoid)
//   p = 3  Kutta's third-order method
//   p = 4  classic RK4
class RKScheme {
public:
    RKScheme(int order, double step);

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] const ButcherTableau& tableau() const noexcept { return *tableau_; }
    [[nodiscard]] int stages() const noexcept { return static_cast<int>(tableau_->weights.size()); }

private:
    int order_;
    double step_;
    const ButcherTableau* tableau_;
};

[[nodiscard]] const ButcherTableau& butcher_tableau(int order);

using Derivative = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

// One explicit RK update of length `dt` (defaults to the scheme step). Exactly
// `order` derivative evaluations. Throws NumericalBlowup with the stage time when
// a derivative is not finite.
[[nodiscard]] Eigen::VectorXd rk_step(const RKScheme& scheme, const Derivative& deriv,
                                      const Eigen::VectorXd& x, double t);
[[nodiscard]] Eigen::VectorXd rk_step(const RKScheme& scheme, const Derivative& deriv,
                                      const Eigen::VectorXd& x, double t, double dt);

// Number of steps used to cover `horizon`: ceil(horizon / h), with a relative
// slack of 1e-9 so an exact multiple is not followed by a sliver step.
[[nodiscard]] int horizon_steps(double horizon, double h);

// Integrates from t0 to exactly t0 + horizon; the last step is shortened.
[[nodiscard]] Eigen::VectorXd integrate_horizon(const RKScheme& scheme, const Derivative& deriv,
                                                const Eigen::VectorXd& x0, double t0,
                                                double horizon);

struct RKErrorParams {
    double M = 0.0;      // smoothness constant of the stacked field
    double w = 0.0;      // model-error bound
    double L_RK = 1.0;   // Lipschitz constant of the one-step map

    void validate() const;
};

// E_RK = (M hᵖ + w) / L_RK · (exp(L_RK Δ) − 1)
[[nodiscard]] double erk_bound(const RKErrorParams& params, const RKScheme& scheme,
                               double horizon);

}  // namespace delaycomp

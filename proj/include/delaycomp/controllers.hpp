#pragma once

#include <functional>
#include <optional>
#include <string>

#include "delaycomp/core.hpp"
#include "delaycomp/integrators.hpp"
#include "delaycomp/sim.hpp"
#include "delaycomp/timing.hpp"

namespace delaycomp {

// Exponentially stabilizing law ū(x̃, t) for the undelayed error dynamics, with
// its partial derivatives.
struct BaselineController {
    std::function<ActuatorVec(const StateVec& xerr, double t)> u_bar;
    std::function<Matrix(const StateVec& xerr, double t)> jac_x;       // ∂ū/∂x̃ (m × n)
    std::function<ActuatorVec(const StateVec& xerr, double t)> jac_t;  // ∂ū/∂t
    std::optional<double> lipschitz_u;
    std::optional<double> lipschitz_udot;
};

// Largest relative deviation between the analytic jacobians and central
// differences of u_bar at the given probe, step `eps`.
[[nodiscard]] double jacobian_mismatch(const BaselineController& bc, const StateVec& xerr,
                                       double t, double eps = 1e-6);

// ū̇ = ∂ū/∂x̃ · g(x̃, η, t) + ∂ū/∂t
[[nodiscard]] ActuatorVec u_dot_analytic(const BaselineController& bc, const ErrorDynamics& ed,
                                         const StateVec& xerr, const ActuatorVec& act, double t);

// ū̇ from a measured or differentiated ẋ̃; no actuator feedback needed.
[[nodiscard]] ActuatorVec u_dot_numeric(const BaselineController& bc, const StateVec& xerr,
                                        const StateVec& xerr_dot, double t);

// ū + Λ⁻¹ ū̇(x̃, η, t)
[[nodiscard]] ActuatorVec ctrl_fo(const BaselineController& bc, const ErrorDynamics& ed,
                                  const ActuatorModel& am, const StateVec& xerr,
                                  const ActuatorVec& act, double t);

// Trivial actuator observer η̂̇ = −Ωη̂ + Ωu′ (Ω = Λ by default). The estimation
// error then decays as η̇_e = −Ω η_e.
struct ObserverState {
    ActuatorVec eta_hat;
    Eigen::VectorXd gain;
};

[[nodiscard]] ObserverState make_observer(const ActuatorModel& am, ActuatorVec eta_hat0);
[[nodiscard]] ObserverState observer_step(const ObserverState& obs, const ActuatorModel& am,
                                          const ActuatorVec& u_applied, double dt);

// Desired convergence rates Γ of the actuator error (diagonal).
struct GainConfig {
    Eigen::VectorXd gamma;
};

// (I − Λ⁻¹Γ)η̂ + Λ⁻¹Γ ū(x̃, t) + Λ⁻¹ ū̇(x̃, η̂, t)
[[nodiscard]] ActuatorVec ctrl_fo_obs(const BaselineController& bc, const ErrorDynamics& ed,
                                      const ActuatorModel& am, const GainConfig& gains,
                                      const StateVec& xerr, const ActuatorVec& eta_hat, double t);

struct Prediction {
    ActuatorVec command;
    StateVec x;         // predicted plant state at t_i + Δ
    ActuatorVec eta;    // predicted actuator estimate at t_i + Δ
    double time;        // t_i + Δ
};

// Integrates (x, η̂) from t_i to t_i + Δ with the RK scheme, replaying the
// commands already in flight, then evaluates ctrl_fo_obs at the predicted error
// state. `model` is the plant the predictor believes in; it may differ from the
// one in `ed` (model error).
[[nodiscard]] Prediction ctrl_predictive(const BaselineController& bc, const ErrorDynamics& ed,
                                         const PlantModel& model, const ActuatorModel& am,
                                         const GainConfig& gains, const RKScheme& scheme,
                                         double delta, const StateVec& x_meas,
                                         const ObserverState& obs, const CommandQueue& queue,
                                         double t_i);

// ū(t_i) + (Λ⁻¹ + Δ)(ū(t_i) − ū(t_{i−1}))/T
[[nodiscard]] ActuatorVec ctrl_truncated(const ActuatorModel& am, const ActuatorVec& u_bar_now,
                                         const ActuatorVec& u_bar_prev, double T, double delta);

// −kp·e − kd·ė on a single channel.
[[nodiscard]] ActuatorVec ctrl_pd(double kp, double kd, const StateVec& xerr,
                                  const StateVec& xerr_dot_est);

// ---------------------------------------------------------------------------
// Sampled laws for the simulator
// ---------------------------------------------------------------------------

// Applies ū at the sampled state with no compensation.
class BaselineLaw final : public SampledController {
public:
    BaselineLaw(BaselineController bc, ReferenceTrajectory traj);
    [[nodiscard]] std::string name() const override { return "baseline"; }
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext&) override {}
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;

private:
    BaselineController bc_;
    ReferenceTrajectory traj_;
};

// Linear PD on the first error coordinate, using the second as its rate.
class PDLaw final : public SampledController {
public:
    PDLaw(double kp, double kd, ReferenceTrajectory traj, int m = 1);
    [[nodiscard]] std::string name() const override { return "pd"; }
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext&) override {}
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;

private:
    double kp_, kd_;
    ReferenceTrajectory traj_;
    int m_;
};

// Derivative compensation for the first-order lag, fed the true actuator state.
class FirstOrderLaw final : public SampledController {
public:
    FirstOrderLaw(BaselineController bc, ErrorDynamics ed, ActuatorModel am);
    [[nodiscard]] std::string name() const override { return "fo"; }
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext&) override {}
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;

private:
    BaselineController bc_;
    ErrorDynamics ed_;
    ActuatorModel am_;
};

// Observer-based compensation with gains Γ; η̂ comes from the trivial observer.
class ObserverLaw final : public SampledController {
public:
    ObserverLaw(BaselineController bc, ErrorDynamics ed, ActuatorModel am, GainConfig gains,
                std::optional<ActuatorVec> eta_hat0 = std::nullopt);
    [[nodiscard]] std::string name() const override { return "fo_obs"; }
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext& ctx) override;
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;
    void observe(const ActuatorVec& u_applied, double dt) override;
    [[nodiscard]] const ObserverState& observer() const noexcept { return obs_; }

private:
    BaselineController bc_;
    ErrorDynamics ed_;
    ActuatorModel am_;
    GainConfig gains_;
    std::optional<ActuatorVec> eta_hat0_;
    ObserverState obs_;
};

// RK predictor + observer-based law evaluated at t_i + Δ.
class PredictiveLaw final : public SampledController {
public:
    PredictiveLaw(BaselineController bc, ErrorDynamics ed, PlantModel model, ActuatorModel am,
                  GainConfig gains, int order, double step,
                  std::optional<ActuatorVec> eta_hat0 = std::nullopt);
    [[nodiscard]] std::string name() const override { return "predictive"; }
    // comp_delay(tm, h, p)
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext& ctx) override;
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;
    void observe(const ActuatorVec& u_applied, double dt) override;

    [[nodiscard]] const RKScheme& scheme() const noexcept { return scheme_; }
    // Most recent prediction, for diagnostics.
    [[nodiscard]] const std::optional<Prediction>& last_prediction() const noexcept {
        return last_;
    }

private:
    BaselineController bc_;
    ErrorDynamics ed_;
    PlantModel model_;
    ActuatorModel am_;
    GainConfig gains_;
    RKScheme scheme_;
    std::optional<ActuatorVec> eta_hat0_;
    ObserverState obs_;
    double delta_ = 0.0;
    std::optional<Prediction> last_;
};

// First-order truncation of the predictive law; uses only ū at the last two samples.
class TruncatedLaw final : public SampledController {
public:
    TruncatedLaw(BaselineController bc, ReferenceTrajectory traj, ActuatorModel am);
    [[nodiscard]] std::string name() const override { return "truncated"; }
    // C_η only: no integration and no ū̇ evaluation.
    [[nodiscard]] double computation_delay(const TimingModel& tm) const override;
    void reset(const RunContext& ctx) override;
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override;

private:
    BaselineController bc_;
    ReferenceTrajectory traj_;
    ActuatorModel am_;
    double delta_ = 0.0;
    double T_ = 0.0;
    std::optional<ActuatorVec> prev_;
};

}  // namespace delaycomp

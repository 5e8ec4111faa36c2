#pragma once

#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "delaycomp/core.hpp"
#include "delaycomp/timing.hpp"

namespace delaycomp {

// Diagonal first-order actuator lag: η̇ = −Λη + Λu′.
class ActuatorModel {
public:
    explicit ActuatorModel(Eigen::VectorXd rates);

    [[nodiscard]] const Eigen::VectorXd& rates() const noexcept { return rates_; }
    [[nodiscard]] int m() const noexcept { return static_cast<int>(rates_.size()); }
    [[nodiscard]] double lambda_min() const noexcept { return rates_.minCoeff(); }
    [[nodiscard]] double lambda_max() const noexcept { return rates_.maxCoeff(); }

private:
    Eigen::VectorXd rates_;
};

// Exact zero-order-hold response over dt: η ← u′ + (η − u′)·exp(−λ dt), per channel.
[[nodiscard]] ActuatorVec actuator_propagate(const ActuatorModel& am, const ActuatorVec& eta,
                                             const ActuatorVec& u_hold, double dt);

struct ScheduledCommand {
    double issue_time;
    double delivery_time;
    ActuatorVec command;
};

// Commands in flight between the controller and the actuator. The applied
// command u′ is always defined; deliveries replace it in time order.
class CommandQueue {
public:
    explicit CommandQueue(ActuatorVec initial_hold);

    // Delivery times must be strictly increasing.
    void push(double issue_time, double delivery_time, ActuatorVec command);

    // Applies every pending command with delivery_time <= t + tol. Returns the
    // number delivered.
    int deliver_until(double t, double tol = 1e-10);

    [[nodiscard]] const ActuatorVec& applied() const noexcept { return applied_; }
    [[nodiscard]] const std::deque<ScheduledCommand>& pending() const noexcept { return pending_; }
    [[nodiscard]] std::optional<double> next_delivery() const;

    // Command the actuator will be holding at time s ≥ now if nothing else is
    // enqueued: the latest pending delivery at or before s, else the applied one.
    [[nodiscard]] const ActuatorVec& command_at(double s) const;

private:
    ActuatorVec applied_;
    std::deque<ScheduledCommand> pending_;
};

// What a controller sees at a sample instant.
struct SampleInput {
    double t;
    const StateVec& x;          // measured plant state
    const ActuatorVec& eta;     // true actuator state; only laws that assume it measurable read it
    const CommandQueue& queue;  // in-flight commands, for predictor replay
};

struct RunContext {
    ActuatorVec eta0;  // actuator state at t = 0
    double delta;      // transport delay Δ between sampling and delivery
    double T;          // sampling period
};

// A sampled control law driven by the simulator. Implementations may keep state
// (observers, previous samples); one instance belongs to one run.
class SampledController {
public:
    virtual ~SampledController() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    // δ_c charged to this law by the timing model.
    [[nodiscard]] virtual double computation_delay(const TimingModel& tm) const = 0;
    virtual void reset(const RunContext& ctx) = 0;
    [[nodiscard]] virtual ActuatorVec sample(const SampleInput& in) = 0;
    // u′ held at the actuator over the next dt seconds.
    virtual void observe(const ActuatorVec& /*u_applied*/, double /*dt*/) {}
};

struct SimConfig {
    double horizon = 20.0;
    double plant_step = 1e-3;
    double window_fraction = 0.5;
    std::uint64_t seed = 0;  // reserved; runs are deterministic
    std::optional<StateVec> initial_state;       // default r(0)
    std::optional<ActuatorVec> initial_actuator;  // default η*(0), else 0
    std::optional<ActuatorVec> initial_command;   // default η*(0), else 0
    // Feed u′ straight into the plant (no first-order lag).
    bool bypass_actuator = false;
    double blowup_norm = 1e6;
};

struct SimResult {
    std::vector<double> times;
    std::vector<StateVec> states;
    std::vector<StateVec> reference;
    std::vector<ActuatorVec> actuator;
    std::vector<ActuatorVec> applied;
    std::vector<ScheduledCommand> commands;
    double delta = 0.0;
    double plant_step = 0.0;
    double horizon = 0.0;
    bool unstable = false;
    double unstable_time = 0.0;
    std::string failure;
    double rmse_ss = 0.0;
};

// Closed loop under periodic sampling at t_i = i·T. Each command is delivered at
// t_i + Δ (Δ = δ_s + δ_c of the controller) and held until the next delivery. The
// plant is integrated with RK4 at plant_step, split exactly at sample and delivery
// instants; the actuator uses the exact exponential update. Divergence (non-finite
// or ‖x‖ > blowup_norm) stops the run and sets `unstable`.
[[nodiscard]] SimResult run_closed_loop(const PlantModel& plant, const ReferenceTrajectory& traj,
                                        const ActuatorModel& actuator,
                                        SampledController& controller, const TimingModel& tm,
                                        const SimConfig& cfg);

// RMS of ‖x(t) − r(t)‖ over the trailing window_fraction of the horizon, on the
// recorded grid. +∞ for unstable runs.
[[nodiscard]] double steady_state_rmse(const SimResult& res, const ReferenceTrajectory& traj,
                                       double window_fraction);

// CSV: time, x0.., r0.., eta0.., u_applied0.. at plant_step resolution.
void write_csv(std::ostream& os, const SimResult& res);

}  // namespace delaycomp

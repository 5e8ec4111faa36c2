#include "delaycomp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "delaycomp/csv.hpp"
#include "delaycomp/integrators.hpp"

namespace delaycomp {

namespace {

constexpr double kEventTol = 1e-10;

}  // namespace

ActuatorModel::ActuatorModel(Eigen::VectorXd rates) : rates_(std::move(rates)) {
    if (rates_.size() < 1) throw ConfigError("actuator: at least one channel required");
    for (Eigen::Index j = 0; j < rates_.size(); ++j) {
        if (!(rates_[j] > 0.0) || !std::isfinite(rates_[j])) {
            throw ConfigError("actuator: lambda > 0 required");
        }
    }
}

ActuatorVec actuator_propagate(const ActuatorModel& am, const ActuatorVec& eta,
                               const ActuatorVec& u_hold, double dt) {
    if (eta.size() != am.m() || u_hold.size() != am.m()) {
        throw ConfigError("actuator_propagate: dimension mismatch");
    }
    if (dt < 0.0) throw ConfigError("actuator_propagate: dt >= 0 required");
    const Eigen::ArrayXd decay = (-am.rates().array() * dt).exp();
    return u_hold.array() + (eta - u_hold).array() * decay;
}

CommandQueue::CommandQueue(ActuatorVec initial_hold) : applied_(std::move(initial_hold)) {}

void CommandQueue::push(double issue_time, double delivery_time, ActuatorVec command) {
    if (!pending_.empty() && !(delivery_time > pending_.back().delivery_time)) {
        throw ConfigError("command queue: delivery times must be strictly increasing");
    }
    if (command.size() != applied_.size()) throw ConfigError("command queue: dimension mismatch");
    pending_.push_back({issue_time, delivery_time, std::move(command)});
}

int CommandQueue::deliver_until(double t, double tol) {
    int delivered = 0;
    while (!pending_.empty() && pending_.front().delivery_time <= t + tol) {
        applied_ = std::move(pending_.front().command);
        pending_.pop_front();
        ++delivered;
    }
    return delivered;
}

std::optional<double> CommandQueue::next_delivery() const {
    if (pending_.empty()) return std::nullopt;
    return pending_.front().delivery_time;
}

const ActuatorVec& CommandQueue::command_at(double s) const {
    const ActuatorVec* current = &applied_;
    for (const auto& c : pending_) {
        if (c.delivery_time > s) break;
        current = &c.command;
    }
    return *current;
}

SimResult run_closed_loop(const PlantModel& plant, const ReferenceTrajectory& traj,
                          const ActuatorModel& actuator, SampledController& controller,
                          const TimingModel& tm, const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0)) throw ConfigError("sim: horizon > 0 required");
    if (!(cfg.plant_step > 0.0)) throw ConfigError("sim: plant_step > 0 required");
    if (!(tm.T > 0.0)) throw ConfigError("sim: T > 0 required");
    if (tm.delta_s < 0.0) throw ConfigError("sim: delta_s >= 0 required");
    if (actuator.m() != plant.m) throw ConfigError("sim: actuator/plant dimension mismatch");

    const double delta = tm.delta_s + controller.computation_delay(tm);
    const double gap = delta > 0.0 ? std::min(tm.T, delta) : tm.T;
    if (cfg.plant_step > gap / 5.0 * (1.0 + 1e-12)) {
        throw ConfigError("sim: plant_step <= min(T, delta)/5 required");
    }

    const int m = plant.m;
    const ActuatorVec ref_u0 = traj.ref_control ? (*traj.ref_control)(0.0)
                                                : ActuatorVec(ActuatorVec::Zero(m));
    StateVec x = cfg.initial_state.value_or(traj.r(0.0));
    ActuatorVec eta = cfg.initial_actuator.value_or(ref_u0);
    if (x.size() != plant.n || eta.size() != m) throw ConfigError("sim: initial state dimension");
    CommandQueue queue(cfg.initial_command.value_or(ref_u0));
    if (cfg.bypass_actuator) eta = queue.applied();

    controller.reset({eta, delta, tm.T});

    SimResult res;
    res.delta = delta;
    res.plant_step = cfg.plant_step;
    res.horizon = cfg.horizon;
    const int grid_points = horizon_steps(cfg.horizon, cfg.plant_step) + 1;
    res.times.reserve(grid_points);
    res.states.reserve(grid_points);
    res.reference.reserve(grid_points);
    res.actuator.reserve(grid_points);
    res.applied.reserve(grid_points);

    auto grid_time = [&](int k) {
        return k + 1 == grid_points ? cfg.horizon : k * cfg.plant_step;
    };

    const RKScheme rk4(4, cfg.plant_step);
    double t = 0.0;
    int next_grid = 0;
    long next_sample = 0;

    auto fail = [&](const std::string& why, double when) {
        res.unstable = true;
        res.unstable_time = when;
        res.failure = why;
    };

    while (true) {
        queue.deliver_until(t, kEventTol);
        if (next_sample * tm.T <= t + kEventTol) {
            ActuatorVec u;
            try {
                u = controller.sample({t, x, eta, queue});
            } catch (const NumericalBlowup& e) {
                fail(e.what(), t);
                break;
            }
            if (u.size() != m) throw ConfigError("sim: controller output dimension mismatch");
            if (!all_finite(u)) {
                fail("non-finite command", t);
                break;
            }
            res.commands.push_back({t, t + delta, u});
            queue.push(t, t + delta, std::move(u));
            ++next_sample;
            queue.deliver_until(t, kEventTol);
        }
        if (cfg.bypass_actuator) eta = queue.applied();

        if (next_grid < grid_points && grid_time(next_grid) <= t + kEventTol) {
            res.times.push_back(grid_time(next_grid));
            res.states.push_back(x);
            res.reference.push_back(traj.r(grid_time(next_grid)));
            res.actuator.push_back(eta);
            res.applied.push_back(queue.applied());
            ++next_grid;
        }
        if (next_grid >= grid_points) break;

        double t_next = grid_time(next_grid);
        t_next = std::min(t_next, next_sample * tm.T);
        if (auto d = queue.next_delivery()) t_next = std::min(t_next, *d);
        const double dt = t_next - t;

        const ActuatorVec u_hold = queue.applied();
        if (dt > 0.0) {
            const double t0 = t;
            const ActuatorVec eta0 = eta;
            Derivative field;
            if (cfg.bypass_actuator) {
                field = [&](const Eigen::VectorXd& xs, double s) { return plant(xs, u_hold, s); };
            } else {
                field = [&](const Eigen::VectorXd& xs, double s) {
                    return plant(xs, actuator_propagate(actuator, eta0, u_hold, s - t0), s);
                };
            }
            try {
                x = rk_step(rk4, field, x, t, dt);
            } catch (const NumericalBlowup& e) {
                fail(e.what(), e.time());
                break;
            }
            eta = cfg.bypass_actuator ? u_hold : actuator_propagate(actuator, eta, u_hold, dt);
            controller.observe(u_hold, dt);
        }
        t = t_next;

        if (!all_finite(x) || x.norm() > cfg.blowup_norm) {
            fail("state diverged", t);
            break;
        }
    }

    res.rmse_ss = steady_state_rmse(res, traj, cfg.window_fraction);
    return res;
}

double steady_state_rmse(const SimResult& res, const ReferenceTrajectory& traj,
                         double window_fraction) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
        throw ConfigError("steady_state_rmse: 0 < window_fraction <= 1 required");
    }
    if (res.unstable) return std::numeric_limits<double>::infinity();
    const double start = res.horizon * (1.0 - window_fraction) - kEventTol;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        if (res.times[k] < start) continue;
        sum += (res.states[k] - traj.r(res.times[k])).squaredNorm();
        ++count;
    }
    if (count == 0) throw ConfigError("steady_state_rmse: empty window");
    return std::sqrt(sum / static_cast<double>(count));
}

void write_csv(std::ostream& os, const SimResult& res) {
    const Eigen::Index n = res.states.empty() ? 0 : res.states.front().size();
    const Eigen::Index m = res.actuator.empty() ? 0 : res.actuator.front().size();
    std::vector<std::string> row{"time"};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back("x" + std::to_string(i));
    for (Eigen::Index i = 0; i < n; ++i) row.push_back("r" + std::to_string(i));
    for (Eigen::Index j = 0; j < m; ++j) row.push_back("eta" + std::to_string(j));
    for (Eigen::Index j = 0; j < m; ++j) row.push_back("u_applied" + std::to_string(j));
    csv::write_row(os, row);
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        row.clear();
        row.push_back(csv::number(res.times[k]));
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(csv::number(res.states[k][i]));
        for (Eigen::Index i = 0; i < n; ++i) row.push_back(csv::number(res.reference[k][i]));
        for (Eigen::Index j = 0; j < m; ++j) row.push_back(csv::number(res.actuator[k][j]));
        for (Eigen::Index j = 0; j < m; ++j) row.push_back(csv::number(res.applied[k][j]));
        csv::write_row(os, row);
    }
}

}  // namespace delaycomp

#include "delaycomp/core.hpp"

#include <cmath>
#include <random>
#include <string>

namespace delaycomp {

namespace {

void require_dim(const Eigen::VectorXd& v, int expected, const char* what) {
    if (v.size() != expected) {
        throw ConfigError(std::string(what) + ": expected length " + std::to_string(expected) +
                          ", got " + std::to_string(v.size()));
    }
}

}  // namespace

bool all_finite(const Eigen::VectorXd& v) noexcept {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

StateVec PlantModel::operator()(const StateVec& x, const ActuatorVec& eta, double t) const {
    require_dim(x, n, "plant state");
    require_dim(eta, m, "plant actuator input");
    StateVec dx = eval(x, eta, t);
    require_dim(dx, n, "plant derivative");
    return dx;
}

ReferenceTrajectory finite_difference_trajectory(ReferenceTrajectory::Signal r, double step) {
    ReferenceTrajectory traj;
    traj.r = r;
    traj.r_dot = [r, step](double t) -> StateVec {
        return (r(t + step) - r(t - step)) / (2.0 * step);
    };
    // Second difference with a wider stencil keeps roundoff at ~eps/step².
    const double h2 = std::sqrt(step) * 1e-1;
    traj.r_ddot = [r, h2](double t) -> StateVec {
        return (r(t + h2) - 2.0 * r(t) + r(t - h2)) / (h2 * h2);
    };
    const double h3 = std::cbrt(step) * 1e-1;
    traj.r_dddot = [r, h3](double t) -> StateVec {
        return (r(t + 2 * h3) - 2.0 * r(t + h3) + 2.0 * r(t - h3) - r(t - 2 * h3)) /
               (2.0 * h3 * h3 * h3);
    };
    return traj;
}

ReferenceTrajectory sine_trajectory(int n, double amplitude, double omega) {
    if (n < 1) throw ConfigError("sine_trajectory: n >= 1 required");
    auto shaped = [n](double pos, double vel) {
        StateVec v = StateVec::Zero(n);
        v[0] = pos;
        if (n > 1) v[1] = vel;
        return v;
    };
    const double a = amplitude;
    const double w = omega;
    ReferenceTrajectory traj;
    traj.r = [=](double t) { return shaped(a * std::sin(w * t), a * w * std::cos(w * t)); };
    traj.r_dot = [=](double t) {
        return shaped(a * w * std::cos(w * t), -a * w * w * std::sin(w * t));
    };
    traj.r_ddot = [=](double t) {
        return shaped(-a * w * w * std::sin(w * t), -a * w * w * w * std::cos(w * t));
    };
    traj.r_dddot = [=](double t) {
        return shaped(-a * w * w * w * std::cos(w * t), a * w * w * w * w * std::sin(w * t));
    };
    return traj;
}

ReferenceTrajectory constant_trajectory(int n, double value) {
    if (n < 1) throw ConfigError("constant_trajectory: n >= 1 required");
    ReferenceTrajectory traj;
    traj.r = [n, value](double) {
        StateVec v = StateVec::Zero(n);
        v[0] = value;
        return v;
    };
    auto zero = [n](double) -> StateVec { return StateVec::Zero(n); };
    traj.r_dot = zero;
    traj.r_ddot = zero;
    traj.r_dddot = zero;
    return traj;
}

ErrorDynamics::ErrorDynamics(PlantModel plant, ReferenceTrajectory traj)
    : plant_(std::move(plant)), traj_(std::move(traj)) {
    if (plant_.n < 1 || plant_.m < 1) throw ConfigError("plant dimensions must be >= 1");
    if (!plant_.eval) throw ConfigError("plant has no evaluator");
    if (!traj_.r || !traj_.r_dot || !traj_.r_ddot) {
        throw ConfigError("trajectory must provide r, r_dot and r_ddot");
    }
}

StateVec ErrorDynamics::g(const StateVec& xerr, const ActuatorVec& act, double t) const {
    require_dim(xerr, plant_.n, "error state");
    return plant_(xerr + traj_.r(t), act, t) - traj_.r_dot(t);
}

Feasibility reference_feasibility_check(const ErrorDynamics& ed,
                                        std::span<const double> t_samples, double tol) {
    const auto& traj = ed.trajectory();
    if (!traj.ref_control) return Feasibility::NotCheckable;
    const StateVec zero = StateVec::Zero(ed.n());
    for (double t : t_samples) {
        if (ed.g(zero, (*traj.ref_control)(t), t).norm() > tol) return Feasibility::Infeasible;
    }
    return Feasibility::Feasible;
}

double estimate_lipschitz(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                          const Box& box, int samples, std::uint64_t seed) {
    if (box.lo.size() != box.hi.size() || box.lo.size() == 0) {
        throw ConfigError("lipschitz box: lo/hi must be nonempty and equal length");
    }
    if ((box.hi.array() < box.lo.array()).any()) throw ConfigError("lipschitz box: hi >= lo");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::Index dim = box.lo.size();
    auto draw = [&] {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            v[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
        }
        return v;
    };
    double best = 0.0;
    for (int k = 0; k < samples; ++k) {
        const Eigen::VectorXd a = draw();
        const Eigen::VectorXd b = draw();
        const double dx = (a - b).norm();
        if (dx < 1e-12) continue;
        best = std::max(best, (fn(a) - fn(b)).norm() / dx);
    }
    return best;
}

double estimate_lipschitz_g(const ErrorDynamics& ed, const Box& box, double t, int samples,
                            std::uint64_t seed) {
    const int n = ed.n();
    const int m = ed.m();
    if (box.lo.size() != n + m) throw ConfigError("lipschitz box must span (x̃, η)");
    auto stacked = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return ed.g(z.head(n), z.tail(m), t);
    };
    return estimate_lipschitz(stacked, box, samples, seed);
}

}  // namespace delaycomp

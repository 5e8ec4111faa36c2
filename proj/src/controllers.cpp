#include "delaycomp/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace delaycomp {

namespace {

void require_len(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
    if (v.size() != n) throw ConfigError(std::string(what) + ": dimension mismatch");
}

Eigen::ArrayXd inverse_rates(const ActuatorModel& am) { return am.rates().array().inverse(); }

}  // namespace

double jacobian_mismatch(const BaselineController& bc, const StateVec& xerr, double t,
                         double eps) {
    const Matrix jx = bc.jac_x(xerr, t);
    const ActuatorVec jt = bc.jac_t(xerr, t);
    double worst = 0.0;
    auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return (a - b).norm() / std::max(1.0, b.norm());
    };
    for (Eigen::Index i = 0; i < xerr.size(); ++i) {
        StateVec up = xerr, dn = xerr;
        up[i] += eps;
        dn[i] -= eps;
        const ActuatorVec fd = (bc.u_bar(up, t) - bc.u_bar(dn, t)) / (2.0 * eps);
        worst = std::max(worst, rel(jx.col(i), fd));
    }
    const ActuatorVec fd_t = (bc.u_bar(xerr, t + eps) - bc.u_bar(xerr, t - eps)) / (2.0 * eps);
    return std::max(worst, rel(jt, fd_t));
}

ActuatorVec u_dot_analytic(const BaselineController& bc, const ErrorDynamics& ed,
                           const StateVec& xerr, const ActuatorVec& act, double t) {
    require_len(act, ed.m(), "u_dot_analytic actuator");
    return u_dot_numeric(bc, xerr, ed.g(xerr, act, t), t);
}

ActuatorVec u_dot_numeric(const BaselineController& bc, const StateVec& xerr,
                          const StateVec& xerr_dot, double t) {
    require_len(xerr_dot, xerr.size(), "u_dot_numeric error rate");
    const Matrix jx = bc.jac_x(xerr, t);
    if (jx.cols() != xerr.size()) throw ConfigError("baseline jacobian: column count != n");
    return jx * xerr_dot + bc.jac_t(xerr, t);
}

ActuatorVec ctrl_fo(const BaselineController& bc, const ErrorDynamics& ed,
                    const ActuatorModel& am, const StateVec& xerr, const ActuatorVec& act,
                    double t) {
    require_len(act, am.m(), "ctrl_fo actuator");
    const ActuatorVec udot = u_dot_analytic(bc, ed, xerr, act, t);
    return bc.u_bar(xerr, t).array() + inverse_rates(am) * udot.array();
}

ObserverState make_observer(const ActuatorModel& am, ActuatorVec eta_hat0) {
    require_len(eta_hat0, am.m(), "observer initial estimate");
    return {std::move(eta_hat0), am.rates()};
}

ObserverState observer_step(const ObserverState& obs, const ActuatorModel& am,
                            const ActuatorVec& u_applied, double dt) {
    require_len(u_applied, am.m(), "observer input");
    if (dt < 0.0) throw ConfigError("observer_step: dt >= 0 required");
    if ((obs.gain.array() <= 0.0).any()) throw ConfigError("observer gain > 0 required");
    const Eigen::ArrayXd decay = (-obs.gain.array() * dt).exp();
    ObserverState next = obs;
    next.eta_hat = u_applied.array() + (obs.eta_hat - u_applied).array() * decay;
    return next;
}

ActuatorVec ctrl_fo_obs(const BaselineController& bc, const ErrorDynamics& ed,
                        const ActuatorModel& am, const GainConfig& gains, const StateVec& xerr,
                        const ActuatorVec& eta_hat, double t) {
    require_len(gains.gamma, am.m(), "gain gamma");
    require_len(eta_hat, am.m(), "ctrl_fo_obs estimate");
    const Eigen::ArrayXd inv = inverse_rates(am);
    const Eigen::ArrayXd ratio = inv * gains.gamma.array();
    const ActuatorVec udot = u_dot_analytic(bc, ed, xerr, eta_hat, t);
    return (1.0 - ratio) * eta_hat.array() + ratio * bc.u_bar(xerr, t).array() +
           inv * udot.array();
}

Prediction ctrl_predictive(const BaselineController& bc, const ErrorDynamics& ed,
                           const PlantModel& model, const ActuatorModel& am,
                           const GainConfig& gains, const RKScheme& scheme, double delta,
                           const StateVec& x_meas, const ObserverState& obs,
                           const CommandQueue& queue, double t_i) {
    const int n = model.n;
    const int m = model.m;
    require_len(x_meas, n, "predictor state");
    require_len(obs.eta_hat, m, "predictor estimate");
    const Eigen::ArrayXd rates = am.rates().array();
    Derivative stacked = [&](const Eigen::VectorXd& y, double s) -> Eigen::VectorXd {
        Eigen::VectorXd dy(n + m);
        const ActuatorVec eta = y.tail(m);
        dy.head(n) = model(y.head(n), eta, s);
        dy.tail(m) = rates * (queue.command_at(s).array() - eta.array());
        return dy;
    };
    Eigen::VectorXd y0(n + m);
    y0 << x_meas, obs.eta_hat;
    const Eigen::VectorXd y = integrate_horizon(scheme, stacked, y0, t_i, delta);
    const double t_pred = t_i + delta;
    Prediction out;
    out.x = y.head(n);
    out.eta = y.tail(m);
    out.time = t_pred;
    out.command = ctrl_fo_obs(bc, ed, am, gains, out.x - ed.trajectory().r(t_pred), out.eta,
                              t_pred);
    return out;
}

ActuatorVec ctrl_truncated(const ActuatorModel& am, const ActuatorVec& u_bar_now,
                           const ActuatorVec& u_bar_prev, double T, double delta) {
    if (!(T > 0.0)) throw ConfigError("ctrl_truncated: T > 0 required");
    require_len(u_bar_now, am.m(), "ctrl_truncated");
    require_len(u_bar_prev, am.m(), "ctrl_truncated");
    const Eigen::ArrayXd lead = inverse_rates(am) + delta;
    return u_bar_now.array() + lead * (u_bar_now - u_bar_prev).array() / T;
}

ActuatorVec ctrl_pd(double kp, double kd, const StateVec& xerr, const StateVec& xerr_dot_est) {
    if (xerr.size() < 1 || xerr_dot_est.size() < 1) throw ConfigError("ctrl_pd: empty error");
    ActuatorVec u(1);
    u[0] = -kp * xerr[0] - kd * xerr_dot_est[0];
    return u;
}

// ---------------------------------------------------------------------------

BaselineLaw::BaselineLaw(BaselineController bc, ReferenceTrajectory traj)
    : bc_(std::move(bc)), traj_(std::move(traj)) {}

double BaselineLaw::computation_delay(const TimingModel& tm) const { return tm.C_eta; }

ActuatorVec BaselineLaw::sample(const SampleInput& in) {
    return bc_.u_bar(in.x - traj_.r(in.t), in.t);
}

PDLaw::PDLaw(double kp, double kd, ReferenceTrajectory traj, int m)
    : kp_(kp), kd_(kd), traj_(std::move(traj)), m_(m) {}

double PDLaw::computation_delay(const TimingModel& tm) const { return tm.C_eta; }

ActuatorVec PDLaw::sample(const SampleInput& in) {
    const StateVec e = in.x - traj_.r(in.t);
    if (e.size() < 2) throw ConfigError("PD law needs position and rate states");
    StateVec rate(1);
    rate[0] = e[1];
    ActuatorVec u = ActuatorVec::Zero(m_);
    u[0] = ctrl_pd(kp_, kd_, e, rate)[0];
    return u;
}

FirstOrderLaw::FirstOrderLaw(BaselineController bc, ErrorDynamics ed, ActuatorModel am)
    : bc_(std::move(bc)), ed_(std::move(ed)), am_(std::move(am)) {}

double FirstOrderLaw::computation_delay(const TimingModel& tm) const { return tm.C_eta; }

ActuatorVec FirstOrderLaw::sample(const SampleInput& in) {
    const StateVec xerr = in.x - ed_.trajectory().r(in.t);
    return ctrl_fo(bc_, ed_, am_, xerr, in.eta, in.t);
}

ObserverLaw::ObserverLaw(BaselineController bc, ErrorDynamics ed, ActuatorModel am,
                         GainConfig gains, std::optional<ActuatorVec> eta_hat0)
    : bc_(std::move(bc)),
      ed_(std::move(ed)),
      am_(std::move(am)),
      gains_(std::move(gains)),
      eta_hat0_(std::move(eta_hat0)),
      obs_(make_observer(am_, ActuatorVec::Zero(am_.m()))) {
    require_len(gains_.gamma, am_.m(), "gain gamma");
    if ((gains_.gamma.array() <= 0.0).any()) throw ConfigError("gamma > 0 required");
}

double ObserverLaw::computation_delay(const TimingModel& tm) const { return tm.C_eta; }

void ObserverLaw::reset(const RunContext& ctx) {
    obs_ = make_observer(am_, eta_hat0_.value_or(ctx.eta0));
}

ActuatorVec ObserverLaw::sample(const SampleInput& in) {
    const StateVec xerr = in.x - ed_.trajectory().r(in.t);
    return ctrl_fo_obs(bc_, ed_, am_, gains_, xerr, obs_.eta_hat, in.t);
}

void ObserverLaw::observe(const ActuatorVec& u_applied, double dt) {
    obs_ = observer_step(obs_, am_, u_applied, dt);
}

PredictiveLaw::PredictiveLaw(BaselineController bc, ErrorDynamics ed, PlantModel model,
                             ActuatorModel am, GainConfig gains, int order, double step,
                             std::optional<ActuatorVec> eta_hat0)
    : bc_(std::move(bc)),
      ed_(std::move(ed)),
      model_(std::move(model)),
      am_(std::move(am)),
      gains_(std::move(gains)),
      scheme_(order, step),
      eta_hat0_(std::move(eta_hat0)),
      obs_(make_observer(am_, ActuatorVec::Zero(am_.m()))) {
    require_len(gains_.gamma, am_.m(), "gain gamma");
    if ((gains_.gamma.array() <= 0.0).any()) throw ConfigError("gamma > 0 required");
    if (model_.n != ed_.n() || model_.m != ed_.m()) {
        throw ConfigError("predictor model dimensions differ from the plant");
    }
}

double PredictiveLaw::computation_delay(const TimingModel& tm) const {
    return comp_delay(tm, scheme_.step(), scheme_.order());
}

void PredictiveLaw::reset(const RunContext& ctx) {
    obs_ = make_observer(am_, eta_hat0_.value_or(ctx.eta0));
    delta_ = ctx.delta;
    last_.reset();
}

ActuatorVec PredictiveLaw::sample(const SampleInput& in) {
    last_ = ctrl_predictive(bc_, ed_, model_, am_, gains_, scheme_, delta_, in.x, obs_,
                            in.queue, in.t);
    return last_->command;
}

void PredictiveLaw::observe(const ActuatorVec& u_applied, double dt) {
    obs_ = observer_step(obs_, am_, u_applied, dt);
}

TruncatedLaw::TruncatedLaw(BaselineController bc, ReferenceTrajectory traj, ActuatorModel am)
    : bc_(std::move(bc)), traj_(std::move(traj)), am_(std::move(am)) {}

double TruncatedLaw::computation_delay(const TimingModel& tm) const { return tm.C_eta; }

void TruncatedLaw::reset(const RunContext& ctx) {
    delta_ = ctx.delta;
    T_ = ctx.T;
    prev_.reset();
}

ActuatorVec TruncatedLaw::sample(const SampleInput& in) {
    const ActuatorVec now = bc_.u_bar(in.x - traj_.r(in.t), in.t);
    const ActuatorVec prev = prev_.value_or(now);
    prev_ = now;
    return ctrl_truncated(am_, now, prev, T_, delta_);
}

}  // namespace delaycomp

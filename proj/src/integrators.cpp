#include "delaycomp/integrators.hpp"

#include <cmath>
#include <string>

namespace delaycomp {

namespace {

const ButcherTableau kEuler{{0.0}, {1.0}, {{}}};

const ButcherTableau kHeun{{0.0, 1.0}, {0.5, 0.5}, {{}, {1.0}}};

const ButcherTableau kKutta3{
    {0.0, 0.5, 1.0}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0}, {{}, {0.5}, {-1.0, 2.0}}};

const ButcherTableau kRK4{{0.0, 0.5, 0.5, 1.0},
                          {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0},
                          {{}, {0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}}};

}  // namespace

const ButcherTableau& butcher_tableau(int order) {
    switch (order) {
        case 1: return kEuler;
        case 2: return kHeun;
        case 3: return kKutta3;
        case 4: return kRK4;
        default:
            throw ConfigError("RK order must be in {1,2,3,4}, got " + std::to_string(order));
    }
}

RKScheme::RKScheme(int order, double step)
    : order_(order), step_(step), tableau_(&butcher_tableau(order)) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw ConfigError("RK step h > 0 required, got " + std::to_string(step));
    }
}

Eigen::VectorXd rk_step(const RKScheme& scheme, const Derivative& deriv,
                        const Eigen::VectorXd& x, double t) {
    return rk_step(scheme, deriv, x, t, scheme.step());
}

Eigen::VectorXd rk_step(const RKScheme& scheme, const Derivative& deriv,
                        const Eigen::VectorXd& x, double t, double dt) {
    const ButcherTableau& tab = scheme.tableau();
    const std::size_t s = tab.weights.size();
    std::vector<Eigen::VectorXd> k;
    k.reserve(s);
    for (std::size_t i = 0; i < s; ++i) {
        Eigen::VectorXd xi = x;
        for (std::size_t j = 0; j < i; ++j) {
            const double a = tab.stages[i][j];
            if (a != 0.0) xi += dt * a * k[j];
        }
        const double ti = t + tab.nodes[i] * dt;
        Eigen::VectorXd ki = deriv(xi, ti);
        if (!all_finite(ki)) throw NumericalBlowup("non-finite derivative in RK stage", ti);
        k.push_back(std::move(ki));
    }
    Eigen::VectorXd out = x;
    for (std::size_t i = 0; i < s; ++i) out += dt * tab.weights[i] * k[i];
    return out;
}

int horizon_steps(double horizon, double h) {
    if (horizon <= 0.0) return 0;
    const double ratio = horizon / h;
    const double nearest = std::round(ratio);
    if (nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * nearest) {
        return static_cast<int>(nearest);
    }
    return static_cast<int>(std::ceil(ratio));
}

Eigen::VectorXd integrate_horizon(const RKScheme& scheme, const Derivative& deriv,
                                  const Eigen::VectorXd& x0, double t0, double horizon) {
    if (horizon < 0.0) throw ConfigError("integration horizon must be >= 0");
    const int steps = horizon_steps(horizon, scheme.step());
    Eigen::VectorXd x = x0;
    const double t_end = t0 + horizon;
    for (int k = 0; k < steps; ++k) {
        const double t = t0 + k * scheme.step();
        const double dt = (k + 1 == steps) ? t_end - t : scheme.step();
        x = rk_step(scheme, deriv, x, t, dt);
    }
    return x;
}

void RKErrorParams::validate() const {
    if (!std::isfinite(M) || M < 0.0) throw ConfigError("RK error params: M >= 0 required");
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("RK error params: w >= 0 required");
    if (!std::isfinite(L_RK) || !(L_RK > 0.0)) {
        throw ConfigError("RK error params: L_RK > 0 required");
    }
}

double erk_bound(const RKErrorParams& params, const RKScheme& scheme, double horizon) {
    params.validate();
    if (horizon < 0.0) throw ConfigError("erk_bound: horizon >= 0 required");
    const double local = params.M * std::pow(scheme.step(), scheme.order()) + params.w;
    return local / params.L_RK * std::expm1(params.L_RK * horizon);
}

}  // namespace delaycomp

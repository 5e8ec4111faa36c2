#include "delaycomp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace delaycomp {

namespace {

const double kSqrt3 = std::sqrt(3.0);

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("budget: ") + name + " > 0 required");
    }
}

}  // namespace

double alpha_lower_bound(const LyapunovBudget& b) {
    require_positive(b.c3, "c3");
    require_positive(b.lambda_min, "lambda_min");
    return b.c4 * b.c4 * b.L_g * b.L_g / (8.0 * b.c3 * b.lambda_min);
}

double alpha_lower_bound_gamma(const LyapunovBudget& b) {
    require_positive(b.c3, "c3");
    require_positive(b.gamma_min, "gamma_min");
    return b.c4 * b.c4 * b.L_g * b.L_g / (8.0 * b.c3 * b.gamma_min);
}

std::optional<double> beta_lower_bound(const LyapunovBudget& b, double alpha) {
    const double bracket = 8.0 * b.c3 * alpha * b.gamma_min - b.c4 * b.c4 * b.L_g * b.L_g;
    if (!(bracket > 0.0)) return std::nullopt;
    require_positive(b.omega_min, "omega_min");
    return 2.0 * b.c3 * alpha * alpha * b.rho * b.rho / (b.omega_min * bracket);
}

Matrix k1_matrix(const LyapunovBudget& b) {
    Matrix k(2, 2);
    const double off = -b.c4 * b.L_g / 2.0;
    k << b.c3, off, off, 2.0 * b.alpha * b.lambda_min;
    return k;
}

Matrix k2_matrix(const LyapunovBudget& b) {
    Matrix k(3, 3);
    const double off = -b.c4 * b.L_g / 2.0;
    const double couple = -b.alpha * b.rho;
    k << b.c3, off, 0.0,
         off, 2.0 * b.alpha * b.gamma_min, couple,
         0.0, couple, 2.0 * b.beta * b.omega_min;
    return k;
}

double min_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

LyapunovBudget complete_budget(LyapunovBudget b) {
    for (auto [v, name] : {std::pair{b.c1, "c1"}, {b.c2, "c2"}, {b.c3, "c3"}, {b.c4, "c4"},
                           {b.lambda_min, "lambda_min"}, {b.lambda_max, "lambda_max"},
                           {b.gamma_min, "gamma_min"}, {b.gamma_max, "gamma_max"},
                           {b.omega_min, "omega_min"}, {b.omega_max, "omega_max"}}) {
        require_positive(v, name);
    }
    if (b.L_g < 0 || b.L_ubar < 0 || b.L_udot < 0 || b.rho < 0) {
        throw ConfigError("budget: Lipschitz constants and rho must be >= 0");
    }
    if (!(b.alpha > 0.0)) {
        b.alpha = 1.01 * std::max(alpha_lower_bound(b), alpha_lower_bound_gamma(b));
        if (!(b.alpha > 0.0)) b.alpha = 1.0;
    }
    if (!(b.beta > 0.0)) {
        const auto bound = beta_lower_bound(b, b.alpha);
        b.beta = (bound && *bound > 0.0) ? 1.01 * *bound : b.alpha;
    }
    b.c3pp = min_eigenvalue(k2_matrix(b));
    return b;
}

BudgetReport check_budget(const LyapunovBudget& b) {
    BudgetReport r;
    r.alpha_bound = alpha_lower_bound(b);
    r.beta_bound = beta_lower_bound(b, b.alpha);
    r.observer_condition =
        8.0 * b.c3 * b.alpha * b.gamma_min > b.c4 * b.c4 * b.L_g * b.L_g;
    r.k1_min_eig = min_eigenvalue(k1_matrix(b));
    r.k2_min_eig = min_eigenvalue(k2_matrix(b));
    r.k2_positive_definite = r.k2_min_eig > 0.0;
    return r;
}

GrowthConstants mu_nu_constants(const LyapunovBudget& b) {
    const double Lu = b.L_ubar;
    const double Lud = b.L_udot;
    const double Lg = b.L_g;
    GrowthConstants k;
    k.mu = kSqrt3 * std::max(b.rho + Lud, b.lambda_max * Lu + Lud * (1.0 + Lu));
    k.nu = kSqrt3 * std::max({b.lambda_max * Lu + (Lg + Lud) * (1.0 + Lu),
                              b.lambda_max + Lud + Lg, b.omega_max + Lud});
    k.nu0 = kSqrt3 * std::max({Lg * (1.0 + Lu), b.gamma_max + Lg, b.rho + b.omega_max});
    return k;
}

SamplingConstants sampling_constants(const LyapunovBudget& b) {
    const GrowthConstants g = mu_nu_constants(b);
    return {g.mu, g.nu, g.nu0, b.c3pp, b.alpha};
}

double max_sampling_period(const SamplingConstants& k) {
    require_positive(k.mu, "mu");
    require_positive(k.nu, "nu");
    require_positive(k.nu0, "nu0");
    require_positive(k.alpha, "alpha");
    if (!(k.c3pp >= 0.0)) throw ConfigError("budget: c3pp >= 0 required");
    return std::log1p(k.nu / k.nu0 * k.c3pp / (2.0 * k.alpha * k.mu)) / k.nu;
}

double max_sampling_period(const LyapunovBudget& b) {
    return max_sampling_period(sampling_constants(b));
}

double phi_of_T(const SamplingConstants& k, double T) {
    const double limit = max_sampling_period(k);
    if (!(T > 0.0) || !(T < limit)) {
        std::ostringstream os;
        os << "sampling period T = " << T << " outside (0, " << limit << ")";
        throw OutOfRange(os.str());
    }
    return k.nu0 / k.nu * (2.0 * k.alpha * k.mu / k.c3pp) * std::expm1(k.nu * T);
}

double phi_of_T(const LyapunovBudget& b, double T) { return phi_of_T(sampling_constants(b), T); }

double T_of_phi(const SamplingConstants& k, double phi) {
    return std::log1p(k.nu / k.nu0 * phi * k.c3pp / (2.0 * k.alpha * k.mu)) / k.nu;
}

DeltaRegion delta_region_phi(const SamplingConstants& k, double phi, double e_rk,
                             std::optional<double> epsilon) {
    if (!(phi > 0.0 && phi < 1.0)) throw OutOfRange("delta_region: phi in (0, 1) required");
    if (e_rk < 0.0) throw ConfigError("delta_region: E_RK >= 0 required");
    DeltaRegion r;
    r.phi = phi;
    r.epsilon = epsilon.value_or(0.5 * (std::sqrt(phi) + 1.0));
    if (!(r.epsilon > std::sqrt(phi) && r.epsilon < 1.0)) {
        throw OutOfRange("delta_region: epsilon in (sqrt(phi), 1) required");
    }
    const double numer =
        2.0 * k.alpha * k.mu * k.nu0 * e_rk / k.c3pp + (k.mu * e_rk + 1.0 / kSqrt3) * phi;
    r.delta_lo = numer / (k.nu0 * (1.0 - phi));
    r.delta_min = numer / (k.nu0 * (r.epsilon * r.epsilon - phi));
    r.delta1 = r.epsilon * r.delta_min;
    return r;
}

DeltaRegion delta_region(const LyapunovBudget& b, double T, double e_rk) {
    const SamplingConstants k = sampling_constants(b);
    return delta_region_phi(k, phi_of_T(k, T), e_rk);
}

std::vector<CurvePoint> theory_error_curve(const LyapunovBudget& b, const TimingModel& tm, int p,
                                           std::span<const double> h_grid, PeriodMode mode) {
    const SamplingConstants k = sampling_constants(b);
    std::vector<CurvePoint> out;
    out.reserve(h_grid.size());
    for (double h : h_grid) {
        CurvePoint pt;
        pt.h = h;
        pt.p = p;
        pt.delta_c = comp_delay(tm, h, p);
        pt.e_rk = erk_of_step(tm, b.rk, h, p);
        const double T = mode == PeriodMode::Fixed ? tm.T : pt.delta_c;
        pt.phi = phi_of_T(k, T);
        pt.delta_lo = delta_region_phi(k, pt.phi, pt.e_rk).delta_lo;
        out.push_back(pt);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const CurvePoint& a, const CurvePoint& c) { return a.delta_c < c.delta_c; });
    return out;
}

}  // namespace delaycomp

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "delaycomp/integrators.hpp"
#include "delaycomp/timing.hpp"

namespace delaycomp {

// Constants of the composite Lyapunov argument for the predictive controller.
//
// c1..c4 bound the converse Lyapunov function of the undelayed loop; L_* are
// Lipschitz constants of g, ū and ū̇; the spectral constants come from Λ, Γ and
// the observer rate Ω; ρ = max eig(Γ − Λ). alpha and beta weight the actuator and
// observer error terms; c3pp = min eig K₂.
struct LyapunovBudget {
    double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
    double L_g = 1.0, L_ubar = 1.0, L_udot = 1.0;
    double lambda_min = 1.0, lambda_max = 1.0;
    double gamma_min = 1.0, gamma_max = 1.0;
    double omega_min = 1.0, omega_max = 1.0;
    double rho = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double c3pp = 0.0;
    RKErrorParams rk;
};

// α must exceed c4²L_g²/(8 c3 λ_min) for K₁ ≻ 0.
[[nodiscard]] double alpha_lower_bound(const LyapunovBudget& b);
// With Γ in place of Λ the same bound reads c4²L_g²/(8 c3 γ_min).
[[nodiscard]] double alpha_lower_bound_gamma(const LyapunovBudget& b);
// 2 c3 α² ρ² / (ω_min (8 c3 α γ_min − c4² L_g²)); empty when the bracket is not positive.
[[nodiscard]] std::optional<double> beta_lower_bound(const LyapunovBudget& b, double alpha);

[[nodiscard]] Matrix k1_matrix(const LyapunovBudget& b);
[[nodiscard]] Matrix k2_matrix(const LyapunovBudget& b);
[[nodiscard]] double min_eigenvalue(const Matrix& symmetric);

struct BudgetReport {
    double alpha_bound;
    std::optional<double> beta_bound;
    bool observer_condition;  // 8 c3 α γ_min > c4² L_g²
    double k1_min_eig;        // c3′
    double k2_min_eig;        // c3″
    bool k2_positive_definite;
};

// Fills alpha and beta (when they are <= 0) with 1.01× their lower bounds and sets
// c3pp from K₂. When the β bound vanishes (ρ = 0) beta defaults to alpha.
[[nodiscard]] LyapunovBudget complete_budget(LyapunovBudget b);
[[nodiscard]] BudgetReport check_budget(const LyapunovBudget& b);

struct GrowthConstants {
    double mu;
    double nu;
    double nu0;
};

[[nodiscard]] GrowthConstants mu_nu_constants(const LyapunovBudget& b);

// Everything the sampling and region bounds depend on.
struct SamplingConstants {
    double mu;
    double nu;
    double nu0;
    double c3pp;
    double alpha;
};

[[nodiscard]] SamplingConstants sampling_constants(const LyapunovBudget& b);

// T < (1/ν) ln[1 + (ν/ν₀) c3″/(2αμ)]
[[nodiscard]] double max_sampling_period(const SamplingConstants& k);
[[nodiscard]] double max_sampling_period(const LyapunovBudget& b);

// φ = (ν₀/ν)(2αμ/c3″)(exp(νT) − 1); OutOfRange unless 0 < T < max_sampling_period.
[[nodiscard]] double phi_of_T(const SamplingConstants& k, double T);
[[nodiscard]] double phi_of_T(const LyapunovBudget& b, double T);
// Inverse: T = (1/ν) ln[1 + (ν/ν₀) φ c3″/(2αμ)]
[[nodiscard]] double T_of_phi(const SamplingConstants& k, double phi);

struct DeltaRegion {
    double phi;
    double epsilon;    // chosen in (√φ, 1)
    double delta_lo;   // lower bound on εδ (the unproven residual region)
    double delta_min;  // smallest δ admitted for this ε
    double delta1;     // ε·delta_min: inner radius of the exponential-decay annulus
};

// delta_lo = [2αμν₀E/c3″ + (μE + 1/√3)φ] / [ν₀(1 − φ)]
// delta_min = [2αμν₀E/c3″ + (μE + 1/√3)φ] / [ν₀(ε² − φ)], ε = midpoint of (√φ, 1)
[[nodiscard]] DeltaRegion delta_region_phi(const SamplingConstants& k, double phi, double e_rk,
                                           std::optional<double> epsilon = std::nullopt);
[[nodiscard]] DeltaRegion delta_region(const LyapunovBudget& b, double T, double e_rk);

enum class PeriodMode {
    Fixed,            // T from the timing model
    EqualsCompDelay,  // T = δ_c(h, p)
};

struct CurvePoint {
    double h;
    int p;
    double delta_c;
    double e_rk;
    double phi;
    double delta_lo;
};

// For each h: δ_c, E_RK (through Δ(h)), φ at the sampling period, δ_lo. Sorted by δ_c.
[[nodiscard]] std::vector<CurvePoint> theory_error_curve(const LyapunovBudget& b,
                                                         const TimingModel& tm, int p,
                                                         std::span<const double> h_grid,
                                                         PeriodMode mode = PeriodMode::Fixed);

}  // namespace delaycomp

#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "delaycomp/analysis.hpp"
#include "delaycomp/controllers.hpp"
#include "delaycomp/sim.hpp"

namespace delaycomp {

// Delayed double integrator: ẋ₁ = x₂, ẋ₂ = b η₁, η̇₁ = −λη₁ + λu(t − Δ).
struct DDIParams {
    double b = 1.0;
    double lambda = 5.0;
    double k1 = 1.0;
    double k2 = 2.0;
    double C_f = 0.005;
    double C_0 = 0.0;
    double C_eta = 0.025;

    void validate() const;
};

struct DDISystem {
    PlantModel plant;
    ActuatorModel actuator;
    BaselineController baseline;
    ReferenceTrajectory trajectory;
    ErrorDynamics error_dynamics;
};

[[nodiscard]] PlantModel ddi_plant(double b);

// Plant, actuator and the feedback-linearizing law ū = (r̈ − k1 x̃₁ − k2 x̃₂)/b for
// the given position reference. Fills η*(t) = r̈(t)/b when the trajectory has none.
[[nodiscard]] DDISystem ddi_system(const DDIParams& params, ReferenceTrajectory traj);

enum class ControllerKind { PD, Baseline, FirstOrder, ObserverBased, Predictive, Truncated };

[[nodiscard]] std::string to_string(ControllerKind k);
[[nodiscard]] ControllerKind controller_kind_from_string(const std::string& s);

// Tunables shared by all experiments. Defaults are the shipped "table2" preset.
struct BenchPreset {
    std::string name = "table2";
    DDIParams ddi;
    double amplitude = 1.0;
    double omega = 1.0;
    double horizon = 20.0;
    double window_fraction = 0.5;
    double T = 0.1;
    double max_plant_step = 2e-3;
    StateVec initial_error = StateVec::Zero(2);

    // PD gains frozen from tune_pd at δ_s = 0.1.
    double pd_kp = 0.5;
    double pd_kd = 6.0;

    // Predictive law: order, step (empty → optimal_step), actuator gain Γ.
    int predictive_order = 4;
    std::optional<double> predictive_step;
    double gamma = 5.0;
    double model_error = 0.0;  // predictor uses b̂ = b(1 + w)

    // RK error model: smoothness constant per order (index p − 1) and L_RK.
    std::array<double, 4> M_by_order{2.06e-5, 3.59e-4, 5.05e-3, 1.34e-1};
    double L_RK = 1.0;

    // Lyapunov constants used by the theoretical curves (illustrative).
    LyapunovBudget budget;

    // Axes.
    std::vector<double> fig2_delta_s{0.2, 0.3};
    std::vector<double> fig2_w{0.0, 0.2, 0.5};
    int fig2_points = 50;
    int fig3_points = 8;
    std::vector<double> fig4_delta_s{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<double> fig4_omega{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    double fig4_omega_delta_s = 0.2;
    std::vector<double> fig5_s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> fig5_q{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

    [[nodiscard]] RKErrorParams rk_params(int p, double w) const;
    [[nodiscard]] TimingModel timing(double delta_s) const;
};

[[nodiscard]] BenchPreset table2_preset();

// Builds one controller of the given kind for the system. `model_error` perturbs
// the predictor plant; `step` overrides the predictive step.
[[nodiscard]] std::unique_ptr<SampledController> make_controller(
    ControllerKind kind, const DDISystem& sys, const BenchPreset& preset, const TimingModel& tm,
    double model_error = 0.0, std::optional<int> order = std::nullopt,
    std::optional<double> step = std::nullopt);

// Plant step satisfying the simulator's ≤ min(T, Δ)/5 rule, capped by the preset.
[[nodiscard]] double plant_step_for(const BenchPreset& preset, double T, double delta);

struct RunOutcome {
    double rmse;
    bool unstable;
    double delta;
};

// One closed-loop run of the double integrator with a sine reference.
[[nodiscard]] RunOutcome run_ddi(const BenchPreset& preset, ControllerKind kind,
                                 const TimingModel& tm, double omega, double model_error = 0.0,
                                 std::optional<int> order = std::nullopt,
                                 std::optional<double> step = std::nullopt,
                                 std::optional<DDIParams> ddi_override = std::nullopt);

// Runs fn(i) for i in [0, count) on `workers` threads; results are keyed by index.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

// Uniform grid of `points` step sizes across the feasible range of order p.
[[nodiscard]] std::vector<double> step_grid(const TimingModel& tm, int p, int points);

// ----------------------------------------------------------------------------

struct Fig2Row {
    std::string mode;  // "fixed_T" or "T_eq_delta_c"
    double delta_s;
    double w;
    CurvePoint point;
};

[[nodiscard]] std::vector<Fig2Row> experiment_fig2(const BenchPreset& preset);

struct Fig3Row {
    std::string mode;
    double delta_s;
    double w;
    int p;
    double h;
    double delta_c;
    double T;
    double rmse;
    bool unstable;
};

[[nodiscard]] std::vector<Fig3Row> experiment_fig3(const BenchPreset& preset, int workers = 1);

struct SweepSpec {
    std::string axis;  // "delta_s" or "omega"
    std::vector<double> values;
    std::vector<ControllerKind> controllers;
    double amplitude = 1.0;
    double omega = 1.0;    // fixed frequency when sweeping delta_s
    double delta_s = 0.0;  // fixed system delay when sweeping omega
    double horizon = 20.0;
    int repetitions = 1;

    void validate() const;
};

struct SweepRow {
    std::string axis;
    ControllerKind controller;
    double delta_s;
    double omega;
    double rmse;
    bool unstable;
};

[[nodiscard]] std::vector<SweepRow> run_sweep(const BenchPreset& preset, const SweepSpec& spec,
                                              int workers = 1);

// Both panels: rmse vs δ_s at the preset ω, and rmse vs ω at fig4_omega_delta_s.
[[nodiscard]] std::vector<SweepRow> experiment_fig4(const BenchPreset& preset, int workers = 1);

struct Fig5Row {
    double s;       // Δ + 1/λ
    double q;       // 1/(λΔ + 1)
    double lambda;
    double delta;
    double rmse;
    bool unstable;
};

// (s, q) → (λ, Δ) = (1/(q s), s(1 − q)) and back.
struct DelayMix {
    double lambda;
    double delta;
};
[[nodiscard]] DelayMix delay_mix_from_ratio(double s, double q);
[[nodiscard]] std::pair<double, double> ratio_from_delay_mix(double lambda, double delta);

[[nodiscard]] RunOutcome run_truncated_mix(const BenchPreset& preset, double s, double q);
[[nodiscard]] std::vector<Fig5Row> experiment_fig5(const BenchPreset& preset, int workers = 1);

struct PDTuning {
    double kp;
    double kd;
    double rmse;
};

// Coarse grid search of PD gains minimizing steady-state RMSE at the given δ_s.
[[nodiscard]] PDTuning tune_pd(const BenchPreset& preset, const std::vector<double>& kp_grid,
                               const std::vector<double>& kd_grid, double delta_s,
                               int workers = 1);

// RMS difference between the truncated law and the single-Euler-step predictive
// law (Γ = Λ), sampled along a closed-loop run of the latter over the trailing
// window. λ and Δ are set directly; no computation delay is charged.
[[nodiscard]] double truncation_gap(const BenchPreset& preset, double T, double lambda,
                                    double delta);

// One random predictor check: state, in-flight queue and step drawn at random,
// prediction compared against a fine-step reference of the true system.
struct PredictorTrial {
    int p;
    double h;
    double delta;
    double error;  // ‖x̂(t_i + Δ) − x(t_i + Δ)‖
};

// Exact-model (w = 0) trials over δ_s ∈ [0, delta_s_max], uniform over orders 1..4.
[[nodiscard]] std::vector<PredictorTrial> predictor_trials(const BenchPreset& preset, int count,
                                                           std::uint64_t seed,
                                                           double delta_s_max = 0.3);

// Smallest M with error ≤ E_RK(M, w = 0, L_RK) on every trial of order p.
[[nodiscard]] double fit_rk_M(const std::vector<PredictorTrial>& trials, int p, double L_RK);

// CSV emitters (header row first).
void write_fig2_csv(std::ostream& os, const std::vector<Fig2Row>& rows);
void write_fig3_csv(std::ostream& os, const std::vector<Fig3Row>& rows);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_fig5_csv(std::ostream& os, const std::vector<Fig5Row>& rows);
// h, p, delta_c, E_RK, phi, delta_lo
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve);

}  // namespace delaycomp

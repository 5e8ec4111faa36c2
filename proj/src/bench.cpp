#include "delaycomp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <ostream>
#include <thread>

#include "delaycomp/csv.hpp"

namespace delaycomp {

void DDIParams::validate() const {
    if (b == 0.0 || !std::isfinite(b)) throw ConfigError("ddi: b != 0 required");
    if (!(lambda > 0.0)) throw ConfigError("ddi: lambda > 0 required");
    if (!(k1 > 0.0)) throw ConfigError("ddi: k1 > 0 required");
    if (!(k2 > 0.0)) throw ConfigError("ddi: k2 > 0 required");
    if (!(C_f > 0.0)) throw ConfigError("ddi: C_f > 0 required");
    if (!(C_0 >= 0.0)) throw ConfigError("ddi: C_0 >= 0 required");
    if (!(C_eta >= 0.0)) throw ConfigError("ddi: C_eta >= 0 required");
}

PlantModel ddi_plant(double b) {
    PlantModel p;
    p.n = 2;
    p.m = 1;
    p.eval = [b](const StateVec& x, const ActuatorVec& eta, double) {
        StateVec dx(2);
        dx << x[1], b * eta[0];
        return dx;
    };
    p.lipschitz_f = std::max(1.0, std::abs(b));
    return p;
}

DDISystem ddi_system(const DDIParams& params, ReferenceTrajectory traj) {
    params.validate();
    const double b = params.b;
    const double k1 = params.k1;
    const double k2 = params.k2;
    if (!traj.ref_control) {
        auto r_ddot = traj.r_ddot;
        traj.ref_control = [r_ddot, b](double t) {
            ActuatorVec u(1);
            u[0] = r_ddot(t)[0] / b;
            return u;
        };
    }
    ReferenceTrajectory::Signal r_ddot = traj.r_ddot;
    ReferenceTrajectory::Signal r_dddot;
    if (traj.r_dddot) {
        r_dddot = *traj.r_dddot;
    } else {
        r_dddot = [r_ddot](double t) -> StateVec {
            const double h = 1e-4;
            return (r_ddot(t + h) - r_ddot(t - h)) / (2.0 * h);
        };
    }

    BaselineController bc;
    bc.u_bar = [=](const StateVec& e, double t) {
        ActuatorVec u(1);
        u[0] = (r_ddot(t)[0] - k1 * e[0] - k2 * e[1]) / b;
        return u;
    };
    bc.jac_x = [=](const StateVec&, double) {
        Matrix j(1, 2);
        j << -k1 / b, -k2 / b;
        return j;
    };
    bc.jac_t = [=](const StateVec&, double t) {
        ActuatorVec u(1);
        u[0] = r_dddot(t)[0] / b;
        return u;
    };
    bc.lipschitz_u = std::hypot(k1, k2) / std::abs(b);
    bc.lipschitz_udot = std::hypot(k1, k2 * b) / std::abs(b);

    PlantModel plant = ddi_plant(b);
    Eigen::VectorXd rates(1);
    rates << params.lambda;
    ErrorDynamics ed(plant, traj);
    return {plant, ActuatorModel(rates), std::move(bc), std::move(traj), std::move(ed)};
}

std::string to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::PD: return "pd";
        case ControllerKind::Baseline: return "baseline";
        case ControllerKind::FirstOrder: return "fo";
        case ControllerKind::ObserverBased: return "fo_obs";
        case ControllerKind::Predictive: return "predictive";
        case ControllerKind::Truncated: return "truncated";
    }
    return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& s) {
    for (auto k : {ControllerKind::PD, ControllerKind::Baseline, ControllerKind::FirstOrder,
                   ControllerKind::ObserverBased, ControllerKind::Predictive,
                   ControllerKind::Truncated}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown controller '" + s +
                      "' (expected pd|baseline|fo|fo_obs|predictive|truncated)");
}

RKErrorParams BenchPreset::rk_params(int p, double w) const {
    if (p < 1 || p > 4) throw ConfigError("RK order must be in {1,2,3,4}");
    RKErrorParams rk;
    rk.M = M_by_order[p - 1];
    rk.w = w;
    rk.L_RK = L_RK;
    return rk;
}

TimingModel BenchPreset::timing(double delta_s) const {
    TimingModel tm;
    tm.C_f = ddi.C_f;
    tm.C_0 = ddi.C_0;
    tm.C_eta = ddi.C_eta;
    tm.delta_s = delta_s;
    tm.T = T;
    return tm;
}

BenchPreset table2_preset() {
    BenchPreset p;
    // Grid search of tune_pd at δ_s = 0.1 over kp ∈ {0.25, 0.5, 1, 2, 4, 8},
    // kd ∈ {0.5, 1, 1.5, 2, 3, 4, 6}.
    p.pd_kp = 0.5;
    p.pd_kd = 6.0;
    // Shape across orders from fit_rk_M on 4000 exact-model predictor trials
    // (seed 11); overall scale is illustrative.
    p.M_by_order = {2.06e-5, 3.59e-4, 5.05e-3, 1.34e-1};
    // Illustrative constants for the theoretical curves, chosen so that the
    // sampling limit (about 0.34 s) comfortably exceeds T = 0.1 s. They are not
    // derived from the double integrator.
    LyapunovBudget& b = p.budget;
    b.c1 = 0.5;
    b.c2 = 2.0;
    b.c3 = 1.0;
    b.c4 = 1.0;
    b.L_g = 1.0;
    b.L_ubar = 1e-3;
    b.L_udot = 1e-3;
    b.lambda_min = b.lambda_max = 1.0;
    b.gamma_min = b.gamma_max = 1.0;
    b.omega_min = b.omega_max = 1.0;
    b.rho = 0.0;
    p.budget = complete_budget(b);
    return p;
}

std::unique_ptr<SampledController> make_controller(ControllerKind kind, const DDISystem& sys,
                                                   const BenchPreset& preset,
                                                   const TimingModel& tm, double model_error,
                                                   std::optional<int> order,
                                                   std::optional<double> step) {
    Eigen::VectorXd gamma(1);
    gamma << preset.gamma;
    switch (kind) {
        case ControllerKind::PD:
            return std::make_unique<PDLaw>(preset.pd_kp, preset.pd_kd, sys.trajectory);
        case ControllerKind::Baseline:
            return std::make_unique<BaselineLaw>(sys.baseline, sys.trajectory);
        case ControllerKind::FirstOrder:
            return std::make_unique<FirstOrderLaw>(sys.baseline, sys.error_dynamics,
                                                   sys.actuator);
        case ControllerKind::ObserverBased:
            return std::make_unique<ObserverLaw>(sys.baseline, sys.error_dynamics, sys.actuator,
                                                 GainConfig{gamma});
        case ControllerKind::Truncated:
            return std::make_unique<TruncatedLaw>(sys.baseline, sys.trajectory, sys.actuator);
        case ControllerKind::Predictive: {
            const int p = order.value_or(preset.predictive_order);
            double h = 0.0;
            if (step) {
                h = *step;
            } else if (preset.predictive_step) {
                h = *preset.predictive_step;
            } else {
                h = optimal_step(tm, preset.rk_params(p, 0.0), p).h;
            }
            PlantModel model = sys.plant;
            if (model_error != 0.0) {
                // The predictor's control effectiveness is off by the factor (1 + w).
                const auto truth = sys.plant.eval;
                const double scale = 1.0 + model_error;
                model.eval = [truth, scale](const StateVec& x, const ActuatorVec& eta, double t) {
                    return truth(x, ActuatorVec(scale * eta), t);
                };
            }
            return std::make_unique<PredictiveLaw>(sys.baseline, sys.error_dynamics,
                                                   std::move(model), sys.actuator,
                                                   GainConfig{gamma}, p, h);
        }
    }
    throw ConfigError("unknown controller kind");
}

double plant_step_for(const BenchPreset& preset, double T, double delta) {
    const double gap = delta > 0.0 ? std::min(T, delta) : T;
    return std::min(preset.max_plant_step, gap / 5.0);
}

RunOutcome run_ddi(const BenchPreset& preset, ControllerKind kind, const TimingModel& tm,
                   double omega, double model_error, std::optional<int> order,
                   std::optional<double> step, std::optional<DDIParams> ddi_override) {
    const DDIParams params = ddi_override.value_or(preset.ddi);
    const DDISystem sys = ddi_system(params, sine_trajectory(2, preset.amplitude, omega));
    auto ctrl = make_controller(kind, sys, preset, tm, model_error, order, step);
    const double delta = tm.delta_s + ctrl->computation_delay(tm);
    SimConfig cfg;
    cfg.horizon = preset.horizon;
    cfg.window_fraction = preset.window_fraction;
    cfg.plant_step = plant_step_for(preset, tm.T, delta);
    cfg.initial_state = sys.trajectory.r(0.0) + preset.initial_error;
    const SimResult res = run_closed_loop(sys.plant, sys.trajectory, sys.actuator, *ctrl, tm, cfg);
    return {res.rmse_ss, res.unstable, delta};
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::jthread> pool;
    const int width = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(width);
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
    pool.clear();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> step_grid(const TimingModel& tm, int p, int points) {
    const StepRange range = feasible_step_range(tm, p);
    std::vector<double> grid;
    if (points <= 1 || range.lo == range.hi) return {range.hi};
    grid.reserve(points);
    for (int i = 0; i < points; ++i) {
        grid.push_back(range.lo + (range.hi - range.lo) * i / (points - 1));
    }
    return grid;
}

std::vector<Fig2Row> experiment_fig2(const BenchPreset& preset) {
    std::vector<Fig2Row> rows;
    for (PeriodMode mode : {PeriodMode::Fixed, PeriodMode::EqualsCompDelay}) {
        const std::string mode_name = mode == PeriodMode::Fixed ? "fixed_T" : "T_eq_delta_c";
        for (double ds : preset.fig2_delta_s) {
            const TimingModel tm = preset.timing(ds);
            for (double w : preset.fig2_w) {
                for (int p = 1; p <= 4; ++p) {
                    LyapunovBudget b = preset.budget;
                    b.rk = preset.rk_params(p, w);
                    const auto grid = step_grid(tm, p, preset.fig2_points);
                    for (const CurvePoint& pt : theory_error_curve(b, tm, p, grid, mode)) {
                        rows.push_back({mode_name, ds, w, pt});
                    }
                }
            }
        }
    }
    return rows;
}

std::vector<Fig3Row> experiment_fig3(const BenchPreset& preset, int workers) {
    std::vector<Fig3Row> rows;
    for (const char* mode : {"fixed_T", "T_eq_delta_c"}) {
        for (double ds : preset.fig2_delta_s) {
            const TimingModel tm = preset.timing(ds);
            for (double w : preset.fig2_w) {
                for (int p = 1; p <= 4; ++p) {
                    for (double h : step_grid(tm, p, preset.fig3_points)) {
                        Fig3Row r{};
                        r.mode = mode;
                        r.delta_s = ds;
                        r.w = w;
                        r.p = p;
                        r.h = h;
                        r.delta_c = comp_delay(tm, h, p);
                        r.T = std::string(mode) == "fixed_T" ? tm.T : r.delta_c;
                        rows.push_back(r);
                    }
                }
            }
        }
    }
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        Fig3Row& r = rows[i];
        TimingModel tm = preset.timing(r.delta_s);
        tm.T = r.T;
        const RunOutcome out =
            run_ddi(preset, ControllerKind::Predictive, tm, preset.omega, r.w, r.p, r.h);
        r.rmse = out.rmse;
        r.unstable = out.unstable;
    });
    return rows;
}

void SweepSpec::validate() const {
    if (axis != "delta_s" && axis != "omega") {
        throw ConfigError("sweep axis must be delta_s or omega");
    }
    if (values.empty()) throw ConfigError("sweep: nonempty axis values required");
    if (controllers.empty()) throw ConfigError("sweep: at least one controller required");
    for (double v : values) {
        if (axis == "delta_s" && !(v >= 0.0)) throw ConfigError("sweep: delta_s >= 0 required");
        if (axis == "omega" && !(v > 0.0)) throw ConfigError("sweep: omega > 0 required");
    }
    if (!(horizon > 0.0)) throw ConfigError("sweep: horizon > 0 required");
    if (repetitions < 1) throw ConfigError("sweep: repetitions >= 1 required");
}

std::vector<SweepRow> run_sweep(const BenchPreset& preset, const SweepSpec& spec, int workers) {
    spec.validate();
    BenchPreset local = preset;
    local.amplitude = spec.amplitude;
    local.horizon = spec.horizon;
    std::vector<SweepRow> rows;
    for (ControllerKind c : spec.controllers) {
        for (double v : spec.values) {
            SweepRow r{};
            r.axis = spec.axis;
            r.controller = c;
            r.delta_s = spec.axis == "delta_s" ? v : spec.delta_s;
            r.omega = spec.axis == "omega" ? v : spec.omega;
            rows.push_back(r);
        }
    }
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        SweepRow& r = rows[i];
        const TimingModel tm = local.timing(r.delta_s);
        double sum = 0.0;
        bool unstable = false;
        for (int k = 0; k < spec.repetitions; ++k) {
            const RunOutcome out = run_ddi(local, r.controller, tm, r.omega);
            unstable = unstable || out.unstable;
            sum += out.rmse;
        }
        r.unstable = unstable;
        r.rmse = unstable ? std::numeric_limits<double>::infinity() : sum / spec.repetitions;
    });
    return rows;
}

std::vector<SweepRow> experiment_fig4(const BenchPreset& preset, int workers) {
    const std::vector<ControllerKind> ctrls{ControllerKind::PD, ControllerKind::Baseline,
                                            ControllerKind::Truncated, ControllerKind::Predictive};
    SweepSpec by_delay;
    by_delay.axis = "delta_s";
    by_delay.values = preset.fig4_delta_s;
    by_delay.controllers = ctrls;
    by_delay.amplitude = preset.amplitude;
    by_delay.omega = preset.omega;
    by_delay.horizon = preset.horizon;

    SweepSpec by_freq = by_delay;
    by_freq.axis = "omega";
    by_freq.values = preset.fig4_omega;
    by_freq.delta_s = preset.fig4_omega_delta_s;

    auto rows = run_sweep(preset, by_delay, workers);
    auto more = run_sweep(preset, by_freq, workers);
    rows.insert(rows.end(), more.begin(), more.end());
    return rows;
}

DelayMix delay_mix_from_ratio(double s, double q) {
    if (!(s > 0.0)) throw ConfigError("combined delay s > 0 required");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("ratio q in (0, 1] required");
    return {1.0 / (q * s), s * (1.0 - q)};
}

std::pair<double, double> ratio_from_delay_mix(double lambda, double delta) {
    if (!(lambda > 0.0) || delta < 0.0) throw ConfigError("lambda > 0 and delta >= 0 required");
    return {delta + 1.0 / lambda, 1.0 / (lambda * delta + 1.0)};
}

RunOutcome run_truncated_mix(const BenchPreset& preset, double s, double q) {
    const DelayMix mix = delay_mix_from_ratio(s, q);
    DDIParams params = preset.ddi;
    params.lambda = mix.lambda;
    // The whole transport delay is carried by δ_s; the law itself is charged nothing.
    TimingModel tm = preset.timing(mix.delta);
    tm.C_eta = 0.0;
    params.C_eta = 0.0;
    return run_ddi(preset, ControllerKind::Truncated, tm, preset.omega, 0.0, std::nullopt,
                   std::nullopt, params);
}

std::vector<Fig5Row> experiment_fig5(const BenchPreset& preset, int workers) {
    std::vector<Fig5Row> rows;
    for (double s : preset.fig5_s) {
        for (double q : preset.fig5_q) {
            const DelayMix mix = delay_mix_from_ratio(s, q);
            rows.push_back({s, q, mix.lambda, mix.delta, 0.0, false});
        }
    }
    parallel_for(rows.size(), workers, [&](std::size_t i) {
        const RunOutcome out = run_truncated_mix(preset, rows[i].s, rows[i].q);
        rows[i].rmse = out.rmse;
        rows[i].unstable = out.unstable;
    });
    return rows;
}

PDTuning tune_pd(const BenchPreset& preset, const std::vector<double>& kp_grid,
                 const std::vector<double>& kd_grid, double delta_s, int workers) {
    struct Cell {
        double kp, kd, rmse;
    };
    std::vector<Cell> cells;
    for (double kp : kp_grid) {
        for (double kd : kd_grid) cells.push_back({kp, kd, 0.0});
    }
    if (cells.empty()) throw ConfigError("tune_pd: empty grid");
    const TimingModel tm = preset.timing(delta_s);
    parallel_for(cells.size(), workers, [&](std::size_t i) {
        BenchPreset local = preset;
        local.pd_kp = cells[i].kp;
        local.pd_kd = cells[i].kd;
        cells[i].rmse = run_ddi(local, ControllerKind::PD, tm, preset.omega).rmse;
    });
    const auto best = std::min_element(cells.begin(), cells.end(),
                                       [](const Cell& a, const Cell& b) { return a.rmse < b.rmse; });
    return {best->kp, best->kd, best->rmse};
}

namespace {

std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

void write_fig2_csv(std::ostream& os, const std::vector<Fig2Row>& rows) {
    csv::write_row(os, {"mode", "delta_s", "w", "h", "p", "delta_c", "E_RK", "phi", "delta_lo"});
    for (const auto& r : rows) {
        csv::write_row(os, {r.mode, csv::number(r.delta_s), csv::number(r.w),
                            csv::number(r.point.h), std::to_string(r.point.p),
                            csv::number(r.point.delta_c), csv::number(r.point.e_rk),
                            csv::number(r.point.phi), csv::number(r.point.delta_lo)});
    }
}

void write_fig3_csv(std::ostream& os, const std::vector<Fig3Row>& rows) {
    csv::write_row(os, {"mode", "delta_s", "w", "p", "h", "delta_c", "T", "rmse", "unstable"});
    for (const auto& r : rows) {
        csv::write_row(os, {r.mode, csv::number(r.delta_s), csv::number(r.w), std::to_string(r.p),
                            csv::number(r.h), csv::number(r.delta_c), csv::number(r.T),
                            csv::number(r.rmse), flag(r.unstable)});
    }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    csv::write_row(os, {"axis", "controller", "delta_s", "omega", "rmse", "unstable"});
    for (const auto& r : rows) {
        csv::write_row(os, {r.axis, to_string(r.controller), csv::number(r.delta_s),
                            csv::number(r.omega), csv::number(r.rmse), flag(r.unstable)});
    }
}

void write_fig5_csv(std::ostream& os, const std::vector<Fig5Row>& rows) {
    csv::write_row(os, {"s", "q", "lambda", "Delta", "rmse", "unstable"});
    for (const auto& r : rows) {
        csv::write_row(os, {csv::number(r.s), csv::number(r.q), csv::number(r.lambda),
                            csv::number(r.delta), csv::number(r.rmse), flag(r.unstable)});
    }
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
    csv::write_row(os, {"h", "p", "delta_c", "E_RK", "phi", "delta_lo"});
    for (const auto& c : curve) {
        csv::write_row(os, {csv::number(c.h), std::to_string(c.p), csv::number(c.delta_c),
                            csv::number(c.e_rk), csv::number(c.phi), csv::number(c.delta_lo)});
    }
}

namespace {

// Drives the plant with the predictive law while recording how far the truncated
// law would have been from it at each sample.
class GapProbe final : public SampledController {
public:
    GapProbe(PredictiveLaw pred, TruncatedLaw trunc, double window_start)
        : pred_(std::move(pred)), trunc_(std::move(trunc)), window_start_(window_start) {}
    [[nodiscard]] std::string name() const override { return "gap_probe"; }
    [[nodiscard]] double computation_delay(const TimingModel&) const override { return 0.0; }
    void reset(const RunContext& ctx) override {
        pred_.reset(ctx);
        trunc_.reset(ctx);
        sum_sq_ = 0.0;
        count_ = 0;
    }
    [[nodiscard]] ActuatorVec sample(const SampleInput& in) override {
        const ActuatorVec u = pred_.sample(in);
        const ActuatorVec v = trunc_.sample(in);
        if (in.t >= window_start_) {
            sum_sq_ += (u - v).squaredNorm();
            ++count_;
        }
        return u;
    }
    void observe(const ActuatorVec& u_applied, double dt) override { pred_.observe(u_applied, dt); }
    [[nodiscard]] double rms() const {
        return count_ ? std::sqrt(sum_sq_ / count_) : std::numeric_limits<double>::quiet_NaN();
    }

private:
    PredictiveLaw pred_;
    TruncatedLaw trunc_;
    double window_start_;
    double sum_sq_ = 0.0;
    int count_ = 0;
};

}  // namespace

double truncation_gap(const BenchPreset& preset, double T, double lambda, double delta) {
    if (!(T > 0.0) || !(lambda > 0.0) || !(delta > 0.0)) {
        throw ConfigError("truncation_gap: T, lambda, delta > 0 required");
    }
    DDIParams params = preset.ddi;
    params.lambda = lambda;
    const DDISystem sys =
        ddi_system(params, sine_trajectory(2, preset.amplitude, preset.omega));
    Eigen::VectorXd gamma(1);
    gamma << lambda;
    PredictiveLaw pred(sys.baseline, sys.error_dynamics, sys.plant, sys.actuator,
                       GainConfig{gamma}, 1, delta);
    TruncatedLaw trunc(sys.baseline, sys.trajectory, sys.actuator);
    GapProbe probe(std::move(pred), std::move(trunc),
                   preset.horizon * (1.0 - preset.window_fraction));

    TimingModel tm = preset.timing(delta);  // the probe charges no computation delay
    tm.T = T;
    SimConfig cfg;
    cfg.horizon = preset.horizon;
    cfg.window_fraction = preset.window_fraction;
    cfg.plant_step = plant_step_for(preset, T, delta);
    cfg.initial_state = sys.trajectory.r(0.0);
    const SimResult res = run_closed_loop(sys.plant, sys.trajectory, sys.actuator, probe, tm, cfg);
    if (res.unstable) throw NumericalBlowup("truncation_gap: nominal run diverged", res.unstable_time);
    return probe.rms();
}

std::vector<PredictorTrial> predictor_trials(const BenchPreset& preset, int count,
                                             std::uint64_t seed, double delta_s_max) {
    if (count < 0) throw ConfigError("predictor_trials: count >= 0 required");
    const DDISystem sys =
        ddi_system(preset.ddi, sine_trajectory(2, preset.amplitude, preset.omega));
    Eigen::VectorXd gamma(1);
    gamma << preset.gamma;
    const GainConfig gains{gamma};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    std::vector<PredictorTrial> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int p = 1 + k % 4;
        const TimingModel tm = preset.timing(draw(0.0, delta_s_max));
        const StepRange range = feasible_step_range(tm, p);
        const double h = draw(range.lo, range.hi);
        const double delta = transport_delay(tm, h, p);
        const double t_i = draw(0.0, 20.0);

        StateVec x = sys.trajectory.r(t_i);
        for (int j = 0; j < x.size(); ++j) x[j] += draw(-0.5, 0.5);
        const ActuatorVec eta_star = (*sys.trajectory.ref_control)(t_i);
        ActuatorVec eta = eta_star;
        eta[0] += draw(-0.5, 0.5);

        // In-flight commands from earlier samples, on the periodic delivery grid.
        CommandQueue queue(ActuatorVec::Constant(1, eta_star[0] + draw(-0.5, 0.5)));
        for (int back = static_cast<int>(std::ceil(delta / tm.T)); back >= 1; --back) {
            const double issue = t_i - back * tm.T;
            if (issue + delta <= t_i) continue;
            queue.push(issue, issue + delta,
                       ActuatorVec::Constant(1, eta_star[0] + draw(-0.5, 0.5)));
        }

        const Prediction pred =
            ctrl_predictive(sys.baseline, sys.error_dynamics, sys.plant, sys.actuator, gains,
                            RKScheme(p, h), delta, x, make_observer(sys.actuator, eta), queue, t_i);

        // Reference: RK4 at a fine step, split at deliveries, exact actuator update.
        const double fine = 1e-4;
        StateVec xr = x;
        ActuatorVec er = eta;
        double t = t_i;
        const double t_end = t_i + delta;
        while (t < t_end) {
            double seg_end = t_end;
            for (const ScheduledCommand& c : queue.pending()) {
                if (c.delivery_time > t + 1e-12) {
                    seg_end = std::min(seg_end, c.delivery_time);
                    break;
                }
            }
            const ActuatorVec u = queue.command_at(t + 1e-12);
            const double t0 = t;
            const ActuatorVec e0 = er;
            auto deriv = [&](const Eigen::VectorXd& xs, double s) -> Eigen::VectorXd {
                return sys.plant(xs, actuator_propagate(sys.actuator, e0, u, s - t0), s);
            };
            const int n = std::max(1, static_cast<int>(std::ceil((seg_end - t) / fine)));
            const double dt = (seg_end - t) / n;
            for (int i = 0; i < n; ++i) {
                xr = rk_step(RKScheme(4, dt), deriv, xr, t, dt);
                t = t0 + (i + 1) * dt;
            }
            er = actuator_propagate(sys.actuator, e0, u, seg_end - t0);
            t = seg_end;
        }
        out.push_back({p, h, delta, (pred.x - xr).norm()});
    }
    return out;
}

double fit_rk_M(const std::vector<PredictorTrial>& trials, int p, double L_RK) {
    if (!(L_RK > 0.0)) throw ConfigError("fit_rk_M: L_RK > 0 required");
    double M = 0.0;
    for (const PredictorTrial& tr : trials) {
        if (tr.p != p || tr.delta <= 0.0) continue;
        const double unit_bound = std::pow(tr.h, p) / L_RK * std::expm1(L_RK * tr.delta);
        M = std::max(M, tr.error / unit_bound);
    }
    return M;
}

}  // namespace delaycomp

#include "runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "delaycomp/csv.hpp"

#ifndef DELAYCOMP_VERSION
#define DELAYCOMP_VERSION "0.0.0"
#endif

namespace delaycomp::cli {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that anything
// left over can be rejected by name.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": object expected");
    }

    [[nodiscard]] bool has(const std::string& key) {
        allowed_.insert(key);
        return node_.contains(key);
    }

    [[nodiscard]] const json& at(const std::string& key) {
        allowed_.insert(key);
        return node_.at(key);
    }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void number(const std::string& key, double& target) {
        if (!has(key)) return;
        const json& v = node_.at(key);
        if (!v.is_number()) throw ConfigError(field(key) + ": number expected");
        target = v.get<double>();
        if (!std::isfinite(target)) throw ConfigError(field(key) + ": finite value required");
    }

    void number(const std::string& key, std::optional<double>& target) {
        if (!has(key)) return;
        double v = 0.0;
        number(key, v);
        target = v;
    }

    void integer(const std::string& key, int& target) {
        if (!has(key)) return;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) throw ConfigError(field(key) + ": integer expected");
        target = v.get<int>();
    }

    void integer(const std::string& key, std::optional<int>& target) {
        if (!has(key)) return;
        int v = 0;
        integer(key, v);
        target = v;
    }

    void text(const std::string& key, std::string& target) {
        if (!has(key)) return;
        const json& v = node_.at(key);
        if (!v.is_string()) throw ConfigError(field(key) + ": string expected");
        target = v.get<std::string>();
    }

    void flag(const std::string& key, bool& target) {
        if (!has(key)) return;
        const json& v = node_.at(key);
        if (!v.is_boolean()) throw ConfigError(field(key) + ": boolean expected");
        target = v.get<bool>();
    }

    void numbers(const std::string& key, std::vector<double>& target) {
        if (!has(key)) return;
        const json& v = node_.at(key);
        if (!v.is_array()) throw ConfigError(field(key) + ": array of numbers expected");
        target.clear();
        for (const json& e : v) {
            if (!e.is_number()) throw ConfigError(field(key) + ": array of numbers expected");
            target.push_back(e.get<double>());
        }
    }

    void reject_unknown() const {
        for (const auto& [key, value] : node_.items()) {
            if (!allowed_.count(key)) throw ConfigError(field(key) + ": unknown key");
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> allowed_;
};

void require(bool ok, const std::string& field, const std::string& constraint) {
    if (!ok) throw ConfigError(field + ": " + constraint + " required");
}

Mode mode_from_string(const std::string& s) {
    if (s == "simulate") return Mode::Simulate;
    if (s == "sweep") return Mode::Sweep;
    if (s == "bounds") return Mode::Bounds;
    if (s == "calibrate") return Mode::Calibrate;
    throw ConfigError("mode: one of simulate, sweep, bounds, calibrate required");
}

ControllerKind controller_field(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError(field + ": controller name expected");
    try {
        return controller_kind_from_string(v.get<std::string>());
    } catch (const ConfigError& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

void read_params(Section s, DDIParams& p) {
    s.number("b", p.b);
    s.number("lambda", p.lambda);
    s.number("k1", p.k1);
    s.number("k2", p.k2);
    s.number("C_f", p.C_f);
    s.number("C_0", p.C_0);
    s.number("C_eta", p.C_eta);
    s.reject_unknown();
    require(p.b != 0.0, s.field("b"), "b != 0");
    require(p.lambda > 0.0, s.field("lambda"), "lambda > 0");
    require(p.k1 > 0.0, s.field("k1"), "k1 > 0");
    require(p.k2 > 0.0, s.field("k2"), "k2 > 0");
    require(p.C_f > 0.0, s.field("C_f"), "C_f > 0");
    require(p.C_0 >= 0.0, s.field("C_0"), "C_0 >= 0");
    require(p.C_eta >= 0.0, s.field("C_eta"), "C_eta >= 0");
}

void read_budget(Section s, LyapunovBudget& b) {
    for (auto [key, target] : {std::pair<const char*, double*>{"c1", &b.c1}, {"c2", &b.c2},
                               {"c3", &b.c3}, {"c4", &b.c4}, {"L_g", &b.L_g},
                               {"L_ubar", &b.L_ubar}, {"L_udot", &b.L_udot},
                               {"lambda_min", &b.lambda_min}, {"lambda_max", &b.lambda_max},
                               {"gamma_min", &b.gamma_min}, {"gamma_max", &b.gamma_max},
                               {"omega_min", &b.omega_min}, {"omega_max", &b.omega_max},
                               {"rho", &b.rho}}) {
        s.number(key, *target);
    }
    std::optional<double> alpha, beta;
    s.number("alpha", alpha);
    s.number("beta", beta);
    s.reject_unknown();
    b.alpha = alpha.value_or(0.0);
    b.beta = beta.value_or(0.0);
    if (alpha) require(*alpha > 0.0, s.field("alpha"), "alpha > 0");
    if (beta) require(*beta > 0.0, s.field("beta"), "beta > 0");
    try {
        b = complete_budget(b);
    } catch (const ConfigError& e) {
        throw ConfigError(s.field("") + " " + e.what());
    }
}

void read_preset_overrides(Section s, BenchPreset& p) {
    s.number("amplitude", p.amplitude);
    s.number("omega", p.omega);
    s.number("horizon", p.horizon);
    s.number("window_fraction", p.window_fraction);
    s.number("T", p.T);
    s.number("max_plant_step", p.max_plant_step);
    s.number("pd_kp", p.pd_kp);
    s.number("pd_kd", p.pd_kd);
    s.integer("predictive_order", p.predictive_order);
    s.number("predictive_step", p.predictive_step);
    s.number("gamma", p.gamma);
    s.number("L_RK", p.L_RK);
    if (s.has("M_by_order")) {
        std::vector<double> m;
        s.numbers("M_by_order", m);
        require(m.size() == 4, s.field("M_by_order"), "four entries (orders 1..4)");
        for (std::size_t i = 0; i < 4; ++i) p.M_by_order[i] = m[i];
    }
    s.numbers("fig2_delta_s", p.fig2_delta_s);
    s.numbers("fig2_w", p.fig2_w);
    s.integer("fig2_points", p.fig2_points);
    s.integer("fig3_points", p.fig3_points);
    s.numbers("fig4_delta_s", p.fig4_delta_s);
    s.numbers("fig4_omega", p.fig4_omega);
    s.number("fig4_omega_delta_s", p.fig4_omega_delta_s);
    s.numbers("fig5_s", p.fig5_s);
    s.numbers("fig5_q", p.fig5_q);
    if (s.has("params")) read_params(Section(s.at("params"), s.field("params")), p.ddi);
    if (s.has("budget")) {
        LyapunovBudget b = p.budget;
        read_budget(Section(s.at("budget"), s.field("budget")), b);
        p.budget = b;
    }
    s.reject_unknown();

    require(p.amplitude > 0.0, s.field("amplitude"), "amplitude > 0");
    require(p.omega > 0.0, s.field("omega"), "omega > 0");
    require(p.horizon > 0.0, s.field("horizon"), "horizon > 0");
    require(p.window_fraction > 0.0 && p.window_fraction <= 1.0, s.field("window_fraction"),
            "0 < window_fraction <= 1");
    require(p.T > 0.0, s.field("T"), "T > 0");
    require(p.max_plant_step > 0.0, s.field("max_plant_step"), "max_plant_step > 0");
    require(p.predictive_order >= 1 && p.predictive_order <= 4, s.field("predictive_order"),
            "1 <= predictive_order <= 4");
    if (p.predictive_step) {
        require(*p.predictive_step > 0.0, s.field("predictive_step"), "predictive_step > 0");
    }
    require(p.gamma > 0.0, s.field("gamma"), "gamma > 0");
    require(p.L_RK > 0.0, s.field("L_RK"), "L_RK > 0");
    for (double m : p.M_by_order) require(m >= 0.0, s.field("M_by_order"), "M >= 0");
    require(p.fig2_points >= 1, s.field("fig2_points"), "fig2_points >= 1");
    require(p.fig3_points >= 1, s.field("fig3_points"), "fig3_points >= 1");
}

void read_simulate(Section s, SimulateSpec& sim, const BenchPreset& preset) {
    sim.omega = preset.omega;
    sim.amplitude = preset.amplitude;
    sim.T = preset.T;
    sim.horizon = preset.horizon;
    if (s.has("controller")) sim.controller = controller_field(s.at("controller"), s.field("controller"));
    s.number("delta_s", sim.delta_s);
    s.number("omega", sim.omega);
    s.number("amplitude", sim.amplitude);
    s.number("T", sim.T);
    s.number("horizon", sim.horizon);
    s.integer("order", sim.order);
    s.number("step", sim.step);
    s.number("model_error", sim.model_error);
    s.flag("trace", sim.trace);
    s.reject_unknown();
    require(sim.delta_s >= 0.0, s.field("delta_s"), "delta_s >= 0");
    require(sim.omega > 0.0, s.field("omega"), "omega > 0");
    require(sim.amplitude > 0.0, s.field("amplitude"), "amplitude > 0");
    require(sim.T > 0.0, s.field("T"), "T > 0");
    require(sim.horizon > 0.0, s.field("horizon"), "horizon > 0");
    if (sim.order) require(*sim.order >= 1 && *sim.order <= 4, s.field("order"), "1 <= order <= 4");
    if (sim.step) require(*sim.step > 0.0, s.field("step"), "step > 0");
    require(sim.model_error > -1.0, s.field("model_error"), "model_error > -1");
}

void read_sweep(Section s, SweepMode& sw, const BenchPreset& preset) {
    s.text("experiment", sw.experiment);
    static const std::set<std::string> known{"fig2", "fig3", "fig4", "fig5", "custom"};
    require(known.count(sw.experiment) > 0, s.field("experiment"),
            "one of fig2, fig3, fig4, fig5, custom");
    SweepSpec& c = sw.custom;
    c.amplitude = preset.amplitude;
    c.omega = preset.omega;
    c.horizon = preset.horizon;
    s.text("axis", c.axis);
    s.numbers("values", c.values);
    if (s.has("controllers")) {
        const json& arr = s.at("controllers");
        if (!arr.is_array()) throw ConfigError(s.field("controllers") + ": array expected");
        c.controllers.clear();
        for (const json& e : arr) c.controllers.push_back(controller_field(e, s.field("controllers")));
    }
    s.number("amplitude", c.amplitude);
    s.number("omega", c.omega);
    s.number("delta_s", c.delta_s);
    s.number("horizon", c.horizon);
    s.integer("repetitions", c.repetitions);
    s.reject_unknown();
    if (sw.experiment == "custom") {
        try {
            c.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(s.field("") + " " + e.what());
        }
        require(c.omega > 0.0, s.field("omega"), "omega > 0");
        require(c.delta_s >= 0.0, s.field("delta_s"), "delta_s >= 0");
        require(c.amplitude > 0.0, s.field("amplitude"), "amplitude > 0");
    }
}

void read_bounds(Section s, BoundsSpec& b, const BenchPreset& preset) {
    b.T = preset.T;
    b.order = preset.predictive_order;
    s.number("T", b.T);
    s.number("e_rk", b.e_rk);
    s.integer("order", b.order);
    s.number("step", b.step);
    s.number("w", b.w);
    s.number("delta_s", b.delta_s);
    s.integer("curve_points", b.curve_points);
    s.reject_unknown();
    require(b.T > 0.0, s.field("T"), "T > 0");
    if (b.e_rk) require(*b.e_rk >= 0.0, s.field("e_rk"), "e_rk >= 0");
    require(b.order >= 1 && b.order <= 4, s.field("order"), "1 <= order <= 4");
    if (b.step) require(*b.step > 0.0, s.field("step"), "step > 0");
    require(b.w >= 0.0, s.field("w"), "w >= 0");
    require(b.delta_s >= 0.0, s.field("delta_s"), "delta_s >= 0");
    require(b.curve_points >= 0, s.field("curve_points"), "curve_points >= 0");
}

void read_calibrate(Section s, CalibrateSpec& c) {
    s.integer("trials", c.trials);
    if (s.has("seed")) {
        const json& v = s.at("seed");
        if (!v.is_number_unsigned()) throw ConfigError(s.field("seed") + ": unsigned integer expected");
        c.seed = v.get<std::uint64_t>();
    }
    s.number("delta_s_max", c.delta_s_max);
    s.integer("timing_repeats", c.timing_repeats);
    s.reject_unknown();
    require(c.trials >= 4, s.field("trials"), "trials >= 4");
    require(c.delta_s_max >= 0.0, s.field("delta_s_max"), "delta_s_max >= 0");
    require(c.timing_repeats >= 1, s.field("timing_repeats"), "timing_repeats >= 1");
}

// Line and column of a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.imbue(std::locale::classic());
    return os;
}

void write_summary(std::ostream& os, const SimulateSpec& sim, const RunOutcome& r) {
    csv::write_row(os, {"controller", "delta_s", "omega", "amplitude", "T", "delta", "rmse_ss",
                        "unstable"});
    csv::write_row(os, {to_string(sim.controller), csv::number(sim.delta_s),
                        csv::number(sim.omega), csv::number(sim.amplitude), csv::number(sim.T),
                        csv::number(r.delta), csv::number(r.rmse), r.unstable ? "1" : "0"});
}

std::vector<std::string> run_simulate(const RunConfig& cfg, const std::filesystem::path& out) {
    const SimulateSpec& sim = cfg.simulate;
    BenchPreset preset = cfg.preset;
    preset.amplitude = sim.amplitude;
    preset.horizon = sim.horizon;
    preset.T = sim.T;
    const TimingModel tm = preset.timing(sim.delta_s);
    const DDISystem sys = ddi_system(preset.ddi, sine_trajectory(2, sim.amplitude, sim.omega));
    auto ctrl = make_controller(sim.controller, sys, preset, tm, sim.model_error, sim.order, sim.step);
    const double delta = tm.delta_s + ctrl->computation_delay(tm);
    SimConfig sc;
    sc.horizon = preset.horizon;
    sc.window_fraction = preset.window_fraction;
    sc.plant_step = plant_step_for(preset, tm.T, delta);
    sc.initial_state = sys.trajectory.r(0.0) + preset.initial_error;
    const SimResult res = run_closed_loop(sys.plant, sys.trajectory, sys.actuator, *ctrl, tm, sc);

    std::vector<std::string> files{"summary.csv"};
    auto os = open_out(out / "summary.csv");
    write_summary(os, sim, {res.rmse_ss, res.unstable, delta});
    if (sim.trace) {
        auto ts = open_out(out / "trace.csv");
        write_csv(ts, res);
        files.push_back("trace.csv");
    }
    return files;
}

std::vector<std::string> run_sweep_mode(const RunConfig& cfg, const std::filesystem::path& out,
                                        int workers) {
    const std::string& exp = cfg.sweep.experiment;
    const std::string file = (exp == "custom" ? std::string("sweep") : exp) + ".csv";
    auto os = open_out(out / file);
    if (exp == "fig2") {
        write_fig2_csv(os, experiment_fig2(cfg.preset));
    } else if (exp == "fig3") {
        write_fig3_csv(os, experiment_fig3(cfg.preset, workers));
    } else if (exp == "fig4") {
        write_sweep_csv(os, experiment_fig4(cfg.preset, workers));
    } else if (exp == "fig5") {
        write_fig5_csv(os, experiment_fig5(cfg.preset, workers));
    } else {
        write_sweep_csv(os, run_sweep(cfg.preset, cfg.sweep.custom, workers));
    }
    return {file};
}

std::vector<std::string> run_bounds(const RunConfig& cfg, const std::filesystem::path& out) {
    const BoundsSpec& bs = cfg.bounds;
    LyapunovBudget b = cfg.preset.budget;
    b.rk = cfg.preset.rk_params(bs.order, bs.w);
    TimingModel tm = cfg.preset.timing(bs.delta_s);
    tm.T = bs.T;

    double e_rk = 0.0;
    double h = std::numeric_limits<double>::quiet_NaN();
    if (bs.e_rk) {
        e_rk = *bs.e_rk;
    } else {
        h = bs.step ? *bs.step : optimal_step(tm, b.rk, bs.order).h;
        e_rk = erk_of_step(tm, b.rk, h, bs.order);
    }
    const SamplingConstants k = sampling_constants(b);
    const BudgetReport rep = check_budget(b);
    const DeltaRegion region = delta_region_phi(k, phi_of_T(k, bs.T), e_rk);

    auto os = open_out(out / "bounds.csv");
    csv::write_row(os, {"T", "T_max", "order", "h", "w", "delta_s", "E_RK", "mu", "nu", "nu0",
                        "alpha", "beta", "c3pp", "k2_positive_definite", "phi", "epsilon",
                        "delta_lo", "delta_min", "delta1"});
    csv::write_row(os, {csv::number(bs.T), csv::number(max_sampling_period(k)),
                        std::to_string(bs.order), csv::number(h), csv::number(bs.w),
                        csv::number(bs.delta_s), csv::number(e_rk), csv::number(k.mu),
                        csv::number(k.nu), csv::number(k.nu0), csv::number(b.alpha),
                        csv::number(b.beta), csv::number(b.c3pp),
                        rep.k2_positive_definite ? "1" : "0", csv::number(region.phi),
                        csv::number(region.epsilon), csv::number(region.delta_lo),
                        csv::number(region.delta_min), csv::number(region.delta1)});
    std::vector<std::string> files{"bounds.csv"};
    if (bs.curve_points > 0) {
        const auto grid = step_grid(tm, bs.order, bs.curve_points);
        auto cs = open_out(out / "curve.csv");
        write_curve_csv(cs, theory_error_curve(b, tm, bs.order, grid));
        files.push_back("curve.csv");
    }
    return files;
}

// Mean wall time of fn over `repeats` calls, in seconds.
template <class Fn>
double mean_seconds(int repeats, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / repeats;
}

std::vector<std::string> run_calibrate(const RunConfig& cfg, const std::filesystem::path& out,
                                       int workers) {
    (void)workers;
    const CalibrateSpec& cs = cfg.calibrate;
    const BenchPreset& preset = cfg.preset;

    // Smoothness constants from exact-model predictor trials.
    const auto trials = predictor_trials(preset, cs.trials, cs.seed, cs.delta_s_max);
    {
        auto os = open_out(out / "rk_fit.csv");
        csv::write_row(os, {"p", "L_RK", "M", "trials"});
        for (int p = 1; p <= 4; ++p) {
            int n = 0;
            for (const auto& t : trials) n += t.p == p;
            csv::write_row(os, {std::to_string(p), csv::number(preset.L_RK),
                                csv::number(fit_rk_M(trials, p, preset.L_RK)), std::to_string(n)});
        }
    }

    // Host timings of the predictor pieces. These vary run to run.
    const DDISystem sys =
        ddi_system(preset.ddi, sine_trajectory(2, preset.amplitude, preset.omega));
    Eigen::VectorXd gamma(1);
    gamma << preset.gamma;
    const GainConfig gains{gamma};
    StateVec x = sys.trajectory.r(0.3);
    ActuatorVec eta = ActuatorVec::Constant(1, 0.1);
    volatile double sink = 0.0;
    const Derivative field = [&](const Eigen::VectorXd& z, double t) -> Eigen::VectorXd {
        Eigen::VectorXd dz(3);
        dz << sys.plant(z.head(2), z.tail(1), t), preset.ddi.lambda * (0.2 - z[2]);
        return dz;
    };
    Eigen::VectorXd z(3);
    z << x, eta;
    const double C_f = mean_seconds(cs.timing_repeats, [&] { sink = sink + field(z, 0.3)[0]; });
    const double step = mean_seconds(cs.timing_repeats, [&] {
        sink = sink + rk_step(RKScheme(1, 0.01), field, z, 0.3)[0];
    });
    const double C_eta = mean_seconds(cs.timing_repeats, [&] {
        sink = sink + ctrl_fo_obs(sys.baseline, sys.error_dynamics, sys.actuator, gains,
                                  x - sys.trajectory.r(0.3), eta, 0.3)[0];
    });
    const double C_0 = std::max(0.0, step - C_f);

    json block = {{"params", {{"C_f", C_f}, {"C_0", C_0}, {"C_eta", C_eta}}}};
    {
        auto os = open_out(out / "calibration.json");
        os << block.dump(2) << '\n';
    }
    return {"rk_fit.csv", "calibration.json"};
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InfeasibleTiming*>(&e)) return 4;
    if (dynamic_cast<const NumericalBlowup*>(&e)) return 3;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const OutOfRange*>(&e)) return 2;
    return 3;
}

std::string kind_for(int code) {
    switch (code) {
        case 2: return "config";
        case 4: return "infeasible_timing";
        default: return "numerical";
    }
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::Simulate: return "simulate";
        case Mode::Sweep: return "sweep";
        case Mode::Bounds: return "bounds";
        case Mode::Calibrate: return "calibrate";
    }
    return "unknown";
}

std::vector<std::string> preset_names() { return {"table2"}; }

BenchPreset named_preset(const std::string& name) {
    if (name == "table2") return table2_preset();
    throw ConfigError("preset: unknown preset '" + name + "'");
}

RunConfig parse_config(const json& doc, const std::optional<std::string>& preset_override) {
    RunConfig cfg;
    cfg.source = doc;
    Section root(doc, "");
    if (!root.has("mode")) throw ConfigError("mode: required");
    std::string mode;
    root.text("mode", mode);
    cfg.mode = mode_from_string(mode);
    root.text("preset", cfg.preset_name);
    if (preset_override) {
        cfg.preset_name = *preset_override;
        cfg.source["preset"] = *preset_override;
    }
    cfg.preset = named_preset(cfg.preset_name);
    if (root.has("overrides")) {
        read_preset_overrides(Section(root.at("overrides"), "overrides"), cfg.preset);
    }
    if (root.has("out")) {
        std::string out;
        root.text("out", out);
        cfg.out = out;
    }
    if (root.has("workers")) {
        int w = 0;
        root.integer("workers", w);
        require(w >= 1, "workers", "workers >= 1");
        cfg.workers = w;
    }

    const std::string section = to_string(cfg.mode);
    for (const char* other : {"simulate", "sweep", "bounds", "calibrate"}) {
        if (other != section && doc.contains(other)) {
            throw ConfigError(std::string(other) + ": section does not apply to mode " + section);
        }
    }
    const json empty = json::object();
    const json& body = root.has(section) ? root.at(section) : empty;
    switch (cfg.mode) {
        case Mode::Simulate: read_simulate(Section(body, section), cfg.simulate, cfg.preset); break;
        case Mode::Sweep: read_sweep(Section(body, section), cfg.sweep, cfg.preset); break;
        case Mode::Bounds: read_bounds(Section(body, section), cfg.bounds, cfg.preset); break;
        case Mode::Calibrate: read_calibrate(Section(body, section), cfg.calibrate); break;
    }
    root.reject_unknown();
    return cfg;
}

RunConfig parse_config_text(const std::string& text,
                            const std::optional<std::string>& preset_override) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream os;
        os << "parse error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(os.str());
    }
    return parse_config(doc, preset_override);
}

RunConfig load_config(const std::filesystem::path& path,
                      const std::optional<std::string>& preset_override) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    try {
        return parse_config_text(buf.str(), preset_override);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

DispatchResult error_result(const std::exception& e) {
    DispatchResult r;
    r.exit_code = exit_code_for(e);
    r.error = {{"status", "error"},
               {"kind", kind_for(r.exit_code)},
               {"exit_code", r.exit_code},
               {"message", e.what()}};
    if (const auto* nb = dynamic_cast<const NumericalBlowup*>(&e)) r.error["time"] = nb->time();
    return r;
}

DispatchResult dispatch(const RunConfig& cfg, const std::filesystem::path& out, int workers) {
    DispatchResult result;
    try {
        std::filesystem::create_directories(out);
        switch (cfg.mode) {
            case Mode::Simulate: result.outputs = run_simulate(cfg, out); break;
            case Mode::Sweep: result.outputs = run_sweep_mode(cfg, out, workers); break;
            case Mode::Bounds: result.outputs = run_bounds(cfg, out); break;
            case Mode::Calibrate: result.outputs = run_calibrate(cfg, out, workers); break;
        }
        const json manifest = {{"version", DELAYCOMP_VERSION},
                               {"preset", cfg.preset_name},
                               {"mode", to_string(cfg.mode)},
                               {"config_hash", fnv1a_hex(cfg.source.dump())},
                               {"config", cfg.source},
                               {"outputs", result.outputs}};
        auto os = open_out(out / "manifest.json");
        os << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        result = error_result(e);
        std::error_code ec;
        if (std::filesystem::is_directory(out, ec)) {
            std::ofstream os(out / "error.json");
            if (os) os << result.error.dump(2) << '\n';
        }
    }
    return result;
}

}  // namespace delaycomp::cli

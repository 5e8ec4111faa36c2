#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "delaycomp/bench.hpp"
#include "json.hpp"

namespace delaycomp::cli {

enum class Mode { Simulate, Sweep, Bounds, Calibrate };

[[nodiscard]] std::string to_string(Mode m);

// Single closed-loop run. Times in seconds, frequencies in rad/s.
struct SimulateSpec {
    ControllerKind controller = ControllerKind::Predictive;
    double delta_s = 0.0;
    double omega = 1.0;
    double amplitude = 1.0;
    double T = 0.1;
    double horizon = 20.0;
    std::optional<int> order;    // predictive only
    std::optional<double> step;  // predictive only; default optimal_step
    double model_error = 0.0;
    bool trace = true;  // write the full time series
};

struct SweepMode {
    std::string experiment = "fig4";  // fig2 | fig3 | fig4 | fig5 | custom
    SweepSpec custom;                 // used when experiment == "custom"
};

// Quantities of the sampled-data stability argument for one (T, E_RK) pair.
// E_RK is taken as given or computed from (order, step, w, delta_s).
struct BoundsSpec {
    double T = 0.1;
    std::optional<double> e_rk;
    int order = 4;
    std::optional<double> step;
    double w = 0.0;
    double delta_s = 0.0;
    int curve_points = 0;  // > 0 also writes the bound over the feasible step range
};

struct CalibrateSpec {
    int trials = 4000;
    std::uint64_t seed = 11;
    double delta_s_max = 0.3;
    int timing_repeats = 20000;
};

struct RunConfig {
    Mode mode = Mode::Simulate;
    std::string preset_name = "table2";
    BenchPreset preset;  // named preset with inline overrides applied
    std::optional<std::filesystem::path> out;
    std::optional<int> workers;
    SimulateSpec simulate;
    SweepMode sweep;
    BoundsSpec bounds;
    CalibrateSpec calibrate;
    nlohmann::json source;  // the document as read, for the manifest
};

// Presets shipped with the tool.
[[nodiscard]] std::vector<std::string> preset_names();
[[nodiscard]] BenchPreset named_preset(const std::string& name);

// Validates a parsed document. `preset_override` replaces the document's preset.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& doc,
                                     const std::optional<std::string>& preset_override = {});
[[nodiscard]] RunConfig parse_config_text(const std::string& text,
                                          const std::optional<std::string>& preset_override = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path,
                                    const std::optional<std::string>& preset_override = {});

// 64-bit FNV-1a, hex encoded.
[[nodiscard]] std::string fnv1a_hex(const std::string& bytes);

struct DispatchResult {
    int exit_code = 0;
    std::vector<std::string> outputs;
    nlohmann::json error;  // null on success
};

// Runs the configured mode, writing CSV files and manifest.json under `out`.
// Library errors are mapped to exit codes: 2 config, 3 numerical, 4 infeasible.
[[nodiscard]] DispatchResult dispatch(const RunConfig& cfg, const std::filesystem::path& out,
                                      int workers);

// Exit code and JSON error record for an exception.
[[nodiscard]] DispatchResult error_result(const std::exception& e);

}  // namespace delaycomp::cli

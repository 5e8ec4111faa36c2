#pragma once

#include <utility>

#include "delaycomp/integrators.hpp"

namespace delaycomp {

// Computation-budget model of one control sample. All quantities in seconds.
struct TimingModel {
    double C_f = 0.005;    // one evaluation of f
    double C_0 = 0.0;      // per-step overhead of the integrator
    double C_eta = 0.025;  // one evaluation of the control law
    double delta_s = 0.0;  // system delay (network, downstream processes)
    double T = 0.1;        // sampling period

    void validate() const;
    // p·C_f + C_0: the cost of one predictor step.
    [[nodiscard]] double step_cost(int p) const noexcept { return p * C_f + C_0; }
};

struct StepRange {
    double lo;
    double hi;
};

// δ_c = (h C_η + δ_s (p C_f + C_0)) / (h − p C_f − C_0). Throws InfeasibleTiming for
// h <= p C_f + C_0.
[[nodiscard]] double comp_delay(const TimingModel& tm, double h, int p);

// Step sizes that keep δ_c ≤ T and h ≤ Δ:
//   [ (T + δ_s)/(T − C_η)·(p C_f + C_0),  δ_s + C_η + p C_f + C_0 ]
// Requires T > C_η + p C_f + C_0.
[[nodiscard]] StepRange feasible_step_range(const TimingModel& tm, int p);

// Δ = (δ_s + C_η)·h / (h − p C_f − C_0) = δ_c + δ_s
[[nodiscard]] double transport_delay(const TimingModel& tm, double h, int p);

// E_RK with Δ expressed through h.
[[nodiscard]] double erk_of_step(const TimingModel& tm, const RKErrorParams& params, double h,
                                 int p);

struct OptimalStep {
    double h;
    double error;
};

// Grid minimum of erk_of_step over the feasible range (`resolution` uniform points,
// endpoints included).
[[nodiscard]] OptimalStep optimal_step(const TimingModel& tm, const RKErrorParams& params, int p,
                                       int resolution = 10000);

}  // namespace delaycomp

#include "delaycomp/timing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace delaycomp {

namespace {

void require_order(int p) {
    if (p < 1 || p > 4) throw ConfigError("RK order must be in {1,2,3,4}");
}

void require_step(const TimingModel& tm, double h, int p) {
    require_order(p);
    const double pole = tm.step_cost(p);
    if (!(h > pole)) {
        std::ostringstream os;
        os << "infeasible step: h = " << h << " must exceed p*C_f + C_0 = " << pole;
        throw InfeasibleTiming(os.str());
    }
}

}  // namespace

void TimingModel::validate() const {
    if (!(C_f > 0.0) || !std::isfinite(C_f)) throw ConfigError("timing: C_f > 0 required");
    if (!(C_0 >= 0.0) || !std::isfinite(C_0)) throw ConfigError("timing: C_0 >= 0 required");
    if (!(C_eta >= 0.0) || !std::isfinite(C_eta)) {
        throw ConfigError("timing: C_eta >= 0 required");
    }
    if (!(delta_s >= 0.0) || !std::isfinite(delta_s)) {
        throw ConfigError("timing: delta_s >= 0 required");
    }
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("timing: T > 0 required");
}

double comp_delay(const TimingModel& tm, double h, int p) {
    require_step(tm, h, p);
    const double cost = tm.step_cost(p);
    return (h * tm.C_eta + tm.delta_s * cost) / (h - cost);
}

StepRange feasible_step_range(const TimingModel& tm, int p) {
    tm.validate();
    require_order(p);
    const double cost = tm.step_cost(p);
    if (!(tm.T > tm.C_eta + cost)) {
        std::ostringstream os;
        os << "infeasible configuration: T > C_eta + p*C_f + C_0 violated (T = " << tm.T
           << ", C_eta + p*C_f + C_0 = " << tm.C_eta + cost << ")";
        throw InfeasibleTiming(os.str());
    }
    StepRange range{(tm.T + tm.delta_s) / (tm.T - tm.C_eta) * cost,
                    tm.delta_s + tm.C_eta + cost};
    // Equal up to roundoff counts as the single-point range.
    if (range.lo > range.hi) {
        if (range.lo - range.hi <= 1e-12 * range.hi) {
            range.lo = range.hi;
        } else {
            std::ostringstream os;
            os << "infeasible configuration: empty step range [" << range.lo << ", " << range.hi
               << "]";
            throw InfeasibleTiming(os.str());
        }
    }
    return range;
}

double transport_delay(const TimingModel& tm, double h, int p) {
    require_step(tm, h, p);
    return (tm.delta_s + tm.C_eta) * h / (h - tm.step_cost(p));
}

double erk_of_step(const TimingModel& tm, const RKErrorParams& params, double h, int p) {
    return erk_bound(params, RKScheme(p, h), transport_delay(tm, h, p));
}

OptimalStep optimal_step(const TimingModel& tm, const RKErrorParams& params, int p,
                         int resolution) {
    const StepRange range = feasible_step_range(tm, p);
    if (resolution < 1) throw ConfigError("optimal_step: resolution >= 1 required");
    if (range.lo == range.hi) {
        // Only possible when δ_s + C_η = 0; then Δ vanishes on the whole open interval
        // and the removable singularity at the pole takes the same value.
        if (tm.delta_s + tm.C_eta == 0.0) {
            return {range.lo, erk_bound(params, RKScheme(p, range.lo), 0.0)};
        }
        return {range.lo, erk_of_step(tm, params, range.lo, p)};
    }
    OptimalStep best{range.lo, std::numeric_limits<double>::infinity()};
    const int points = std::max(resolution, 2);
    for (int i = 0; i < points; ++i) {
        const double h = range.lo + (range.hi - range.lo) * i / (points - 1);
        if (!(h > tm.step_cost(p))) continue;
        const double e = erk_of_step(tm, params, h, p);
        if (e < best.error) best = {h, e};
    }
    return best;
}

}  // namespace delaycomp

// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "delaycomp/bench.hpp"

using namespace delaycomp;

namespace {

// Pinned tolerances.
constexpr double kOrderTol = 0.3;
constexpr double kOrderRuntime = 1.0;
constexpr double kTimingRelTol = 1e-12;
constexpr int kTimingDraws = 1000;
constexpr double kFopdtTol = 1e-9;
constexpr double kFopdtRefStep = 1e-6;
constexpr double kFirstOrderRmseRatio = 0.10;
constexpr double kFirstOrderRuntime = 5.0;
constexpr double kFirstOrderPeriod = 1e-3;
constexpr int kIdentityDraws = 10000;
constexpr double kIdentityTol = 1e-12;
constexpr int kPredictorCalibration = 4000;
constexpr std::uint64_t kPredictorCalibrationSeed = 1;
constexpr int kPredictorChecks = 100;
constexpr std::uint64_t kPredictorCheckSeed = 2;
// Relative slack on simulated-RMSE orderings; bounds are compared exactly.
constexpr double kSimRelTol = 0.01;
constexpr double kTrendRuntime = 120.0;
constexpr double kRankDelayS = 0.3;
constexpr double kTruncatedFailDelayS = 0.6;
constexpr double kDegradeFactor = 5.0;
constexpr double kRankRuntime = 60.0;
constexpr double kSlopeLo = 1.6, kSlopeHi = 2.4;
constexpr double kFig5Spread = 2.0;
constexpr double kFig5Runtime = 120.0;

struct Verdict {
    bool pass;
    std::string detail;
};

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// 1. Global convergence order on ẋ = x, t ∈ [0, 1].
Verdict criterion1() {
    Stopwatch sw;
    const Derivative f = [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return x; };
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 1.0);
    bool ok = true;
    std::ostringstream os;
    for (int p = 1; p <= 4; ++p) {
        std::vector<double> lh, le;
        for (double h : {0.1, 0.05, 0.025}) {
            const double e = std::abs(integrate_horizon(RKScheme(p, h), f, x0, 0.0, 1.0)[0] - std::exp(1.0));
            lh.push_back(std::log(h));
            le.push_back(std::log(e));
        }
        const double order = ls_slope(lh, le);
        ok = ok && std::abs(order - p) <= kOrderTol;
        os << fmt("p=%d order=%.3f ", p, order);
    }
    const double t = sw.seconds();
    ok = ok && t < kOrderRuntime;
    os << fmt("runtime=%.3fs", t);
    return {ok, os.str()};
}

// 2. Timing algebra against an independent transcription of the formulas.
namespace ref {
double comp_delay(double h, int p, double Cf, double C0, double Ce, double ds) {
    const double cost = p * Cf + C0;
    return (h * Ce + ds * cost) / (h - cost);
}
double lo(int p, double Cf, double C0, double Ce, double ds, double T) {
    return (T + ds) / (T - Ce) * (p * Cf + C0);
}
double hi(int p, double Cf, double C0, double Ce, double ds) { return ds + Ce + p * Cf + C0; }
double erk(double M, double w, double L, double h, int p, double delta) {
    return (M * std::pow(h, p) + w) / L * (std::exp(L * delta) - 1.0);
}
}  // namespace ref

Verdict criterion2() {
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    double worst = 0.0;
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int done = 0;
    while (done < kTimingDraws) {
        TimingModel tm;
        tm.C_f = 1e-3 + 9e-3 * u(rng);
        tm.C_0 = 5e-3 * u(rng);
        tm.C_eta = 0.03 * u(rng);
        tm.delta_s = 0.5 * u(rng);
        tm.T = 0.05 + 0.45 * u(rng);
        const int p = 1 + done % 4;
        const double lo = ref::lo(p, tm.C_f, tm.C_0, tm.C_eta, tm.delta_s, tm.T);
        const double hi = ref::hi(p, tm.C_f, tm.C_0, tm.C_eta, tm.delta_s);
        if (!(tm.T > tm.C_eta) || lo > hi) continue;
        const double h = lo + (hi - lo) * u(rng);
        const RKErrorParams rk{u(rng), 0.5 * u(rng), 0.1 + 2.9 * u(rng)};
        const StepRange r = feasible_step_range(tm, p);
        const double dc = ref::comp_delay(h, p, tm.C_f, tm.C_0, tm.C_eta, tm.delta_s);
        worst = std::max({worst, rel(r.lo, lo), rel(r.hi, hi), rel(comp_delay(tm, h, p), dc),
                          rel(transport_delay(tm, h, p), dc + tm.delta_s),
                          rel(erk_of_step(tm, rk, h, p), ref::erk(rk.M, rk.w, rk.L_RK, h, p, dc + tm.delta_s))});
        ++done;
    }
    TimingModel t2;
    t2.C_f = 0.005;
    t2.C_0 = 0.0;
    t2.C_eta = 0.025;
    t2.T = 0.1;
    const double dc = comp_delay(t2, 0.05, 1);
    t2.delta_s = 0.2;
    const StepRange r = feasible_step_range(t2, 4);
    const bool worked = std::abs(dc - 0.027778) < 5e-7 && std::abs(r.lo - 0.08) < 1e-12 &&
                        std::abs(r.hi - 0.245) < 1e-12;
    return {worst <= kTimingRelTol && worked,
            fmt("draws=%d worst_rel=%.2e delta_c=%.6f range=(%.6f, %.6f)", done, worst, dc, r.lo, r.hi)};
}

// 3. Exact actuator update against a fine RK4 reference.
Verdict criterion3() {
    double worst = 0.0;
    const double eta0 = -0.4, u = 1.3;
    for (double lambda : {0.5, 5.0, 50.0}) {
        const ActuatorModel am(Eigen::VectorXd::Constant(1, lambda));
        for (double dt : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
            // Scalar RK4 of η̇ = λ(u − η).
            const long steps = std::lround(dt / kFopdtRefStep);
            const double h = steps > 0 ? dt / steps : 0.0;
            double eta = eta0;
            auto fn = [&](double e) { return lambda * (u - e); };
            for (long k = 0; k < steps; ++k) {
                const double k1 = fn(eta), k2 = fn(eta + 0.5 * h * k1), k3 = fn(eta + 0.5 * h * k2),
                             k4 = fn(eta + h * k3);
                eta += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            }
            const double exact = actuator_propagate(am, Eigen::VectorXd::Constant(1, eta0),
                                                    Eigen::VectorXd::Constant(1, u), dt)[0];
            worst = std::max(worst, std::abs(exact - eta));
        }
    }
    return {worst <= kFopdtTol, fmt("max_abs_diff=%.2e", worst)};
}

// 4. Derivative compensation without transport delay.
Verdict criterion4() {
    Stopwatch sw;
    const BenchPreset preset = table2_preset();
    const DDISystem sys = ddi_system(preset.ddi, sine_trajectory(2, 1.0, 1.0));
    TimingModel tm = preset.timing(0.0);
    tm.C_eta = 0.0;
    tm.T = kFirstOrderPeriod;
    SimConfig cfg;
    cfg.horizon = preset.horizon;
    cfg.plant_step = kFirstOrderPeriod / 5.0;
    StateVec x0 = sys.trajectory.r(0.0);
    x0[0] += 0.5;
    cfg.initial_state = x0;

    FirstOrderLaw fo(sys.baseline, sys.error_dynamics, sys.actuator);
    const SimResult res = run_closed_loop(sys.plant, sys.trajectory, sys.actuator, fo, tm, cfg);
    BaselineLaw naive(sys.baseline, sys.trajectory);
    const SimResult base = run_closed_loop(sys.plant, sys.trajectory, sys.actuator, naive, tm, cfg);

    // ‖(x̃, η − ū)‖ along the run
    std::vector<double> t, norm;
    for (std::size_t k = 0; k < res.times.size(); ++k) {
        const StateVec xe = res.states[k] - sys.trajectory.r(res.times[k]);
        const ActuatorVec ae = res.actuator[k] - sys.baseline.u_bar(xe, res.times[k]);
        t.push_back(res.times[k]);
        norm.push_back(std::sqrt(xe.squaredNorm() + ae.squaredNorm()));
    }
    // Floor: largest value over the trailing half. Fit the decay while the norm is
    // at least 10× above it.
    double floor = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] >= 0.5 * cfg.horizon) floor = std::max(floor, norm[k]);
    }
    std::vector<double> ft, fl;
    for (std::size_t k = 0; k < t.size() && norm[k] > 10.0 * floor; ++k) {
        ft.push_back(t[k]);
        fl.push_back(std::log(norm[k]));
    }
    const double rate = ft.size() >= 10 ? -ls_slope(ft, fl) : 0.0;
    const double ratio = res.rmse_ss / base.rmse_ss;
    const double secs = sw.seconds();
    const bool ok = !res.unstable && rate > 0.0 && ratio < kFirstOrderRmseRatio && secs < kFirstOrderRuntime;
    return {ok, fmt("rate=%.3f/s fit_span=%.2fs rmse_fo=%.3e rmse_baseline=%.3e ratio=%.4f runtime=%.2fs", rate,
                    ft.empty() ? 0.0 : ft.back(), res.rmse_ss, base.rmse_ss, ratio, secs)};
}

// 5. Observer law with Γ = Λ equals the first-order law.
Verdict criterion5() {
    const DDISystem sys = ddi_system(DDIParams{}, sine_trajectory(2, 1.0, 1.0));
    const GainConfig g{sys.actuator.rates()};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < kIdentityDraws; ++i) {
        StateVec x(2);
        x << u(rng), u(rng);
        const ActuatorVec eta = ActuatorVec::Constant(1, u(rng));
        const double t = 10.0 + 2.0 * u(rng);
        const double a = ctrl_fo(sys.baseline, sys.error_dynamics, sys.actuator, x, eta, t)[0];
        const double b = ctrl_fo_obs(sys.baseline, sys.error_dynamics, sys.actuator, g, x, eta, t)[0];
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    return {worst <= kIdentityTol, fmt("draws=%d worst=%.2e", kIdentityDraws, worst)};
}

// 6. Predictor error under the fitted bound on independent scenarios. M is the
// per-order supremum over a separate calibration set.
Verdict criterion6() {
    BenchPreset preset = table2_preset();
    const auto calibration = predictor_trials(preset, kPredictorCalibration, kPredictorCalibrationSeed);
    for (int p = 1; p <= 4; ++p) preset.M_by_order[p - 1] = fit_rk_M(calibration, p, preset.L_RK);
    const auto trials = predictor_trials(preset, kPredictorChecks, kPredictorCheckSeed);
    int violations = 0;
    double worst_ratio = 0.0;
    for (const PredictorTrial& tr : trials) {
        const double bound = erk_bound(preset.rk_params(tr.p, 0.0), RKScheme(tr.p, tr.h), tr.delta);
        const double ratio = tr.error / bound;
        worst_ratio = std::max(worst_ratio, ratio);
        if (tr.error > bound) ++violations;
    }
    return {violations == 0,
            fmt("M=[%.3g %.3g %.3g %.3g] scenarios=%zu violations=%d worst_error/bound=%.3f", preset.M_by_order[0],
                preset.M_by_order[1], preset.M_by_order[2], preset.M_by_order[3], trials.size(), violations,
                worst_ratio)};
}

// 7. Trends of bound and simulated RMSE in δ_c.
double step_for_comp_delay(const TimingModel& tm, int p, double dc) {
    const double cost = tm.step_cost(p);
    return cost * (dc + tm.delta_s) / (dc - tm.C_eta);
}

Verdict criterion7(int workers) {
    Stopwatch sw;
    const BenchPreset preset = table2_preset();
    const auto fig2 = experiment_fig2(preset);
    const auto fig3 = experiment_fig3(preset, workers);

    auto bound_series = [&](double ds, double w, int p) {
        std::vector<std::pair<double, double>> s;
        for (const auto& r : fig2) {
            if (r.mode == "fixed_T" && r.delta_s == ds && r.w == w && r.point.p == p) {
                s.emplace_back(r.point.delta_c, r.point.delta_lo);
            }
        }
        std::sort(s.begin(), s.end());
        return s;
    };
    auto sim_series = [&](double ds, double w, int p) {
        std::vector<std::pair<double, double>> s;
        for (const auto& r : fig3) {
            if (r.mode == "fixed_T" && r.delta_s == ds && r.w == w && r.p == p) {
                s.emplace_back(r.delta_c, r.unstable ? INFINITY : r.rmse);
            }
        }
        std::sort(s.begin(), s.end());
        return s;
    };
    // direction −1: non-increasing, +1: increasing
    auto monotone = [](const std::vector<std::pair<double, double>>& s, int dir, double tol) {
        for (std::size_t i = 1; i < s.size(); ++i) {
            const double a = s[i - 1].second, b = s[i].second;
            if (dir < 0 && !(b <= a * (1.0 + tol))) return false;
            if (dir > 0 && !(b >= a * (1.0 - tol) && (tol > 0.0 || b > a))) return false;
        }
        return s.size() >= 2;
    };

    bool a_bound = true, a_sim = true, b_bound = true, b_sim = true, b_bound_rank = true, b_sim_rank = true;
    std::ostringstream os;
    for (double ds : preset.fig2_delta_s) {
        a_bound = a_bound && monotone(bound_series(ds, 0.0, 4), -1, 0.0);
        const auto sim_a = sim_series(ds, 0.0, 4);
        a_sim = a_sim && monotone(sim_a, -1, kSimRelTol);
        os << fmt("[ds=%.1f w=0 p=4 rmse by dc:", ds);
        for (const auto& [dc, r] : sim_a) os << fmt(" %.4f:%.4f", dc, r);
        os << "] ";
        for (int p : {1, 4}) {
            b_bound = b_bound && monotone(bound_series(ds, 0.5, p), +1, 0.0);
            b_sim = b_sim && monotone(sim_series(ds, 0.5, p), +1, kSimRelTol);
        }
        // Matched δ_c across the overlap of the p = 1 and p = 4 ranges.
        const TimingModel tm = preset.timing(ds);
        double lo = 0.0;
        for (int p : {1, 4}) lo = std::max(lo, comp_delay(tm, feasible_step_range(tm, p).hi, p));
        const double hi = tm.T;
        for (int i = 1; i <= 5; ++i) {
            const double dc = lo + (hi - lo) * i / 6.0;
            double bound[2], rmse[2];
            int k = 0;
            for (int p : {1, 4}) {
                const double h = step_for_comp_delay(tm, p, dc);
                LyapunovBudget b = preset.budget;
                b.rk = preset.rk_params(p, 0.5);
                const std::vector<double> grid{h};
                bound[k] = theory_error_curve(b, tm, p, grid).front().delta_lo;
                const RunOutcome o = run_ddi(preset, ControllerKind::Predictive, tm, preset.omega, 0.5, p, h);
                rmse[k] = o.unstable ? INFINITY : o.rmse;
                ++k;
            }
            b_bound_rank = b_bound_rank && bound[0] <= bound[1];
            b_sim_rank = b_sim_rank && rmse[0] <= rmse[1] * (1.0 + kSimRelTol);
            if (i == 3) {
                os << fmt("[ds=%.1f dc=%.4f bound p1=%.4g p4=%.4g rmse p1=%.4g p4=%.4g] ", ds, dc, bound[0],
                          bound[1], rmse[0], rmse[1]);
            }
        }
    }
    const double secs = sw.seconds();
    const bool ok = a_bound && a_sim && b_bound && b_sim && b_bound_rank && b_sim_rank && secs < kTrendRuntime;
    os << fmt("(a) bound_nonincreasing=%d sim_nonincreasing=%d (b) bound_increasing=%d sim_increasing=%d "
              "bound_p1<=p4=%d sim_p1<=p4=%d runtime=%.1fs",
              a_bound, a_sim, b_bound, b_sim, b_bound_rank, b_sim_rank, secs);
    return {ok, os.str()};
}

// 8. Controller ranking under system delay.
Verdict criterion8() {
    Stopwatch sw;
    const BenchPreset preset = table2_preset();
    const TimingModel tm = preset.timing(kRankDelayS);
    auto rmse = [&](ControllerKind k, const TimingModel& t) {
        const RunOutcome o = run_ddi(preset, k, t, 1.0);
        return o.unstable ? INFINITY : o.rmse;
    };
    const double pred = rmse(ControllerKind::Predictive, tm);
    const double pd = rmse(ControllerKind::PD, tm);
    const double base = rmse(ControllerKind::Baseline, tm);
    const double trunc = rmse(ControllerKind::Truncated, tm);
    const RunOutcome late = run_ddi(preset, ControllerKind::Truncated, preset.timing(kTruncatedFailDelayS), 1.0);
    const bool trunc_fails = late.unstable || late.rmse > kDegradeFactor * trunc;
    const double secs = sw.seconds();
    const bool ok = pred < pd && pd < base && std::isfinite(trunc) && trunc_fails && secs < kRankRuntime;
    return {ok, fmt("predictive=%.4f pd=%.4f baseline=%.4f truncated@0.3=%.4f truncated@0.6=%s%.4g runtime=%.1fs",
                    pred, pd, base, trunc, late.unstable ? "unstable " : "", late.rmse, secs)};
}

// 9. Truncation gap scales as T².
Verdict criterion9() {
    const BenchPreset preset = table2_preset();
    std::vector<double> lt, lg;
    std::ostringstream os;
    for (double T : {0.1, 0.05, 0.025}) {
        const double gap = truncation_gap(preset, T, 0.5 / T, T);
        lt.push_back(std::log(T));
        lg.push_back(std::log(gap));
        os << fmt("T=%.3f gap=%.3e ", T, gap);
    }
    const double slope = ls_slope(lt, lg);
    os << fmt("slope=%.3f", slope);
    return {slope >= kSlopeLo && slope <= kSlopeHi, os.str()};
}

// 10. Combined-delay shape.
Verdict criterion10() {
    Stopwatch sw;
    const BenchPreset preset = table2_preset();
    double lo = INFINITY, hi = 0.0;
    bool any_unstable = false;
    for (double q : preset.fig5_q) {
        if (q < 0.2 - 1e-12 || q > 1.0 + 1e-12) continue;
        const RunOutcome o = run_truncated_mix(preset, 0.3, q);
        any_unstable = any_unstable || o.unstable;
        lo = std::min(lo, o.rmse);
        hi = std::max(hi, o.rmse);
    }
    const RunOutcome far = run_truncated_mix(preset, 1.0, 0.1);
    const bool degraded = far.unstable || far.rmse > kDegradeFactor * hi;
    const double secs = sw.seconds();
    const bool ok = !any_unstable && hi / lo < kFig5Spread && degraded && secs < kFig5Runtime;
    return {ok, fmt("s=0.3 rmse in [%.4f, %.4f] spread=%.3f; s=1.0 q=0.1 %s rmse=%.4g; runtime=%.1fs", lo, hi,
                    hi / lo, far.unstable ? "unstable" : "stable", far.rmse, secs)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    int only = 0;
    int workers = 1;
    app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
    app.add_option("--workers", workers, "threads for the sweep criteria")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Verdict()>> checks{
        criterion1, criterion2, criterion3, criterion4, criterion5,
        criterion6, [&] { return criterion7(workers); }, criterion8, criterion9, criterion10};
    int failures = 0;
    for (int i = 1; i <= 10; ++i) {
        if (only != 0 && i != only) continue;
        Verdict v;
        try {
            v = checks[i - 1]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << i << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
        if (!v.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

/**
 * @brief Studies tying the dispatch iterations to the closed-loop simulator.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "econfreq/dispatch.hpp"
#include "econfreq/dynamics.hpp"
#include "econfreq/model.hpp"

namespace econfreq {

enum class EquivalencePair { DualVsIntegral, MomVsPI };

inline std::string_view to_string(EquivalencePair m) {
    return m == EquivalencePair::DualVsIntegral ? "dual-integral" : "mom-pi";
}

struct EquivalenceReport {
    EquivalencePair method = EquivalencePair::DualVsIntegral;
    double max_abs_deviation = 0.0;
    std::size_t steps = 0;
};

/**
 * Runs the discrete iteration with alpha = rho = K / beta next to a forward
 * Euler integration of the matching controller with h = tau, both starting
 * from the powers implied by lambda0, and reports the largest difference in
 * any power command over all steps.
 */
inline EquivalenceReport check_euler_equivalence(const Scenario& s, EquivalencePair method, std::size_t steps,
                                                 std::optional<double> lambda0 = std::nullopt) {
    if (steps < 1) throw std::invalid_argument("check_euler_equivalence: steps must be >= 1");
    const double gain = s.gain_K / s.beta;
    const double lam0 = lambda0.value_or(default_lambda0(s));
    const bool dual = method == EquivalencePair::DualVsIntegral;

    IterState discrete = dual ? dual_state(s, lam0) : mom_state(s, lam0, gain);
    const ControllerConfig cfg =
        controller_for(s, dual ? ControllerKind::Integral : ControllerKind::ProportionalIntegral);
    const FrequencyModel model = quasi_static_model(s);

    SimState continuous;
    continuous.p = discrete.p;
    continuous.delta_f = frequency_deviation(continuous.p, total_load(s), s.beta);

    EquivalenceReport report{method, 0.0, steps};
    for (std::size_t k = 0; k < steps; ++k) {
        discrete = dual ? dual_ascent_step(discrete, s, gain) : mom_step(discrete, s, gain);
        continuous = step_euler(closed_loop, continuous, s, cfg, model, s.tau);
        for (std::size_t i = 0; i < s.size(); ++i)
            report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(discrete.p[i] - continuous.p[i]));
    }
    return report;
}

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
};

struct SteadyStateReport {
    std::vector<Check> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    const Check* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/**
 * Final sample against the economic dispatch at the final load:
 *  - dispatch_gap: max_i |P_i - P*_i|
 *  - frequency: |df|
 *  - marginal_cost_spread: max_i |mc_i - lambda*|
 * Each must be below tol.
 */
inline SteadyStateReport verify_steady_state_optimality(const SimulationTrace& trace, const Scenario& s, double tol) {
    if (trace.samples.empty()) throw std::invalid_argument("verify_steady_state_optimality: empty trace");
    const SimState& fin = trace.samples.back();
    Scenario at_end = s;
    at_end.loads = trace.loads_at(fin.t);
    const DispatchSolution best = analytic_dispatch(at_end);

    double gap = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        gap = std::max(gap, std::abs(fin.p[i] - best.p[i]));
        spread = std::max(spread, std::abs(marginal_cost(s.generators[i].cost, fin.p[i]) - best.lambda_star));
    }
    const double df = std::abs(fin.delta_f);

    SteadyStateReport r;
    r.checks.push_back({"dispatch_gap", gap < tol, gap});
    r.checks.push_back({"frequency", df < tol, df});
    r.checks.push_back({"marginal_cost_spread", spread < tol, spread});
    return r;
}

/// Continuous load-step study used for settling-time comparisons.
struct StepStudy {
    double h = 0.0;       ///< 0 selects tau / 100
    double t_end = 0.0;   ///< 0 selects 100 tau
    double eps = 1e-4;    ///< settling band on |df|, Hz
    std::vector<LoadEvent> events;  ///< empty selects +20% on every load at t = tau
    FrequencyModel model;
    bool model_from_scenario = true;  ///< QuasiStatic with the scenario's beta
    Integrator integrator = Integrator::Euler;
};

inline StepStudy resolve(const StepStudy& in, const Scenario& s) {
    StepStudy out = in;
    if (out.h <= 0.0) out.h = s.tau / 100.0;
    if (out.t_end <= 0.0) out.t_end = 100.0 * s.tau;
    if (out.events.empty()) {
        LoadEvent e{s.tau, s.loads};
        for (double& d : e.loads) d *= 1.2;
        out.events.push_back(std::move(e));
    }
    if (out.model_from_scenario) out.model = quasi_static_model(s);
    return out;
}

struct MethodResult {
    StopReason stop_reason = StopReason::MaxIterations;
    std::size_t iterations = 0;
    std::optional<double> empirical_ratio;
    double predicted_ratio = 0.0;
};

struct ConvergenceReport {
    double alpha = 0.0;
    double rho = 0.0;
    MethodResult dual;
    MethodResult mom;
    double integral_settling = 0.0;
    double pi_settling = 0.0;
};

inline MethodResult summarize(const IterationTrace& trace, double tol, double predicted) {
    return {trace.stop_reason, trace.iterations(), empirical_contraction_ratio(trace, tol), predicted};
}

inline ConvergenceReport compare_convergence(const Scenario& s, double alpha, double rho, const SolveOptions& opt,
                                             const StepStudy& study = {}) {
    if (!(alpha > 0.0) || !(rho > 0.0)) throw std::invalid_argument("compare_convergence: alpha and rho must be > 0");
    ConvergenceReport r;
    r.alpha = alpha;
    r.rho = rho;
    r.dual = summarize(dual_ascent_solve(s, alpha, opt), opt.tol, dual_contraction_factor(s, alpha));
    r.mom = summarize(mom_solve(s, rho, opt), opt.tol, mom_contraction_factor(s, rho));

    const StepStudy st = resolve(study, s);
    const auto run = [&](ControllerKind kind) {
        return settling_time(simulate(s, controller_for(s, kind), st.model, st.h, st.t_end, st.events, st.integrator),
                             st.eps);
    };
    r.integral_settling = run(ControllerKind::Integral);
    r.pi_settling = run(ControllerKind::ProportionalIntegral);
    return r;
}

enum class SweepParameter { Alpha, Rho, K, Tau };

inline std::string_view to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::Alpha: return "alpha";
        case SweepParameter::Rho: return "rho";
        case SweepParameter::K: return "K";
        case SweepParameter::Tau: return "tau";
    }
    return "unknown";
}

struct SweepRow {
    double value = 0.0;
    std::optional<ConvergenceReport> report;
    std::string error;  ///< set when this value could not be run
};

/**
 * One convergence record per value. alpha and rho override the respective
 * step; K and tau modify the scenario, with alpha = rho = K / beta.
 */
inline std::vector<SweepRow> sweep(const Scenario& s, SweepParameter param, const std::vector<double>& values,
                                   const SolveOptions& opt, const StepStudy& study = {}) {
    if (values.empty()) throw std::invalid_argument("sweep: values must be non-empty");
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (double v : values) {
        SweepRow row{v, std::nullopt, {}};
        if (!(v > 0.0) || !std::isfinite(v)) {
            row.error = "value must be finite and > 0";
            rows.push_back(std::move(row));
            continue;
        }
        Scenario local = s;
        double alpha = s.gain_K / s.beta;
        double rho = alpha;
        switch (param) {
            case SweepParameter::Alpha: alpha = v; break;
            case SweepParameter::Rho: rho = v; break;
            case SweepParameter::K:
                local.gain_K = v;
                alpha = rho = v / s.beta;
                break;
            case SweepParameter::Tau: local.tau = v; break;
        }
        try {
            row.report = compare_convergence(local, alpha, rho, opt, study);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace econfreq

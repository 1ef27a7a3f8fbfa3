/**
 * @brief Continuous-time secondary frequency control loop.
 *
 * Generators are driven by integral or PI controllers whose gains come from
 * their cost curves. The system frequency is either quasi-static,
 * df = (sum P - D) / beta, or a first-order aggregate swing equation
 * M d(df)/dt = (sum P - D) - d_damp df.
 */
#pragma once

#include <cmath>
#include <complex>
#include <concepts>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "econfreq/linalg.hpp"
#include "econfreq/model.hpp"

namespace econfreq {

enum class FrequencyModelKind { QuasiStatic, Inertial };

struct FrequencyModel {
    FrequencyModelKind kind = FrequencyModelKind::QuasiStatic;
    double beta = 1.0;       ///< MW/Hz, QuasiStatic
    double m_inertia = 1.0;  ///< MW s/Hz, Inertial
    double d_damp = 0.0;     ///< MW/Hz, Inertial

    static FrequencyModel quasi_static(double beta) { return {FrequencyModelKind::QuasiStatic, beta, 1.0, 0.0}; }
    static FrequencyModel inertial(double m, double d) { return {FrequencyModelKind::Inertial, 1.0, m, d}; }

    bool is_quasi_static() const { return kind == FrequencyModelKind::QuasiStatic; }

    friend bool operator==(const FrequencyModel&, const FrequencyModel&) = default;
};

inline FrequencyModel quasi_static_model(const Scenario& s) { return FrequencyModel::quasi_static(s.beta); }

struct SimState {
    double t = 0.0;
    std::vector<double> p;
    double delta_f = 0.0;
};

struct StateRate {
    std::vector<double> dp;
    double d_delta_f = 0.0;
};

struct LoadEvent {
    double time = 0.0;
    std::vector<double> loads;

    friend bool operator==(const LoadEvent&, const LoadEvent&) = default;
};

struct SimulationTrace {
    std::vector<SimState> samples;
    std::vector<LoadEvent> events;  ///< times snapped to the integration grid
    ControllerConfig controller;
    FrequencyModel model;
    std::vector<double> initial_loads;

    /// Load vector in force at time t.
    const std::vector<double>& loads_at(double t) const {
        const std::vector<double>* cur = &initial_loads;
        for (const auto& e : events)
            if (e.time <= t) cur = &e.loads;
        return *cur;
    }
};

/// (sum P - D) / beta; surplus generation gives positive deviation.
inline double frequency_deviation(std::span<const double> p, double d_total, double beta) {
    double sum = 0.0;
    for (double x : p) sum += x;
    return (sum - d_total) / beta;
}

inline double frequency_deviation(const std::vector<double>& p, double d_total, double beta) {
    return frequency_deviation(std::span<const double>(p), d_total, beta);
}

namespace detail {

/// Algebraic df for QuasiStatic, the carried state for Inertial.
inline double measured_delta_f(const SimState& st, const Scenario& s, const FrequencyModel& model) {
    return model.is_quasi_static() ? frequency_deviation(st.p, total_load(s), model.beta) : st.delta_f;
}

inline double swing_rate(const SimState& st, const Scenario& s, const FrequencyModel& model) {
    double sum = 0.0;
    for (double x : st.p) sum += x;
    return ((sum - total_load(s)) - model.d_damp * st.delta_f) / model.m_inertia;
}

inline std::vector<double> integral_law(const Scenario& s, const ControllerConfig& cfg, double delta_f) {
    std::vector<double> dp(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        dp[i] = -integral_gain(s.generators[i].cost, cfg.gain_K, cfg.tau) * delta_f;
    return dp;
}

/// Solves 2 a_i tau dP_i + K tau (sum_j dP_j) / beta = -K df.
inline std::vector<double> pi_quasi_static(const Scenario& s, const ControllerConfig& cfg, double beta, double delta_f) {
    std::vector<double> diag(s.size());
    std::vector<double> rhs(s.size(), -cfg.gain_K * delta_f);
    for (std::size_t i = 0; i < s.size(); ++i) diag[i] = 2.0 * s.generators[i].cost.a * cfg.tau;
    return solve_diagonal_plus_ones(diag, cfg.gain_K * cfg.tau / beta, rhs);
}

}  // namespace detail

/// dP_i/dt = -(K / (2 a_i tau)) df under the quasi-static model of the scenario.
inline std::vector<double> integral_rhs(const SimState& st, const Scenario& s, const ControllerConfig& cfg) {
    return detail::integral_law(s, cfg, frequency_deviation(st.p, total_load(s), s.beta));
}

/// Quasi-static PI law: 2 a_i tau dP_i/dt + K tau d(df)/dt = -K df, d(df)/dt = sum dP / beta.
inline std::vector<double> pi_rhs(const SimState& st, const Scenario& s, const ControllerConfig& cfg) {
    return detail::pi_quasi_static(s, cfg, s.beta, frequency_deviation(st.p, total_load(s), s.beta));
}

/// Full closed-loop rate for either controller on either frequency model.
inline StateRate closed_loop_rhs(const SimState& st, const Scenario& s, const ControllerConfig& cfg,
                                 const FrequencyModel& model) {
    StateRate rate;
    const double df = detail::measured_delta_f(st, s, model);
    if (model.is_quasi_static()) {
        rate.dp = cfg.kind == ControllerKind::Integral ? detail::integral_law(s, cfg, df)
                                                       : detail::pi_quasi_static(s, cfg, model.beta, df);
        double sum = 0.0;
        for (double x : rate.dp) sum += x;
        rate.d_delta_f = sum / model.beta;
        return rate;
    }

    rate.d_delta_f = detail::swing_rate(st, s, model);
    const double drive = cfg.kind == ControllerKind::Integral ? df : df + cfg.tau * rate.d_delta_f;
    rate.dp = detail::integral_law(s, cfg, drive);
    return rate;
}

template <typename F>
concept RateFunction = std::invocable<const F&, const SimState&, const Scenario&, const ControllerConfig&,
                                      const FrequencyModel&> &&
                       std::same_as<std::invoke_result_t<const F&, const SimState&, const Scenario&,
                                                         const ControllerConfig&, const FrequencyModel&>,
                                    StateRate>;

inline constexpr auto closed_loop = [](const SimState& st, const Scenario& s, const ControllerConfig& cfg,
                                       const FrequencyModel& model) { return closed_loop_rhs(st, s, cfg, model); };

namespace detail {

inline SimState advance(const SimState& st, const StateRate& rate, double h, const Scenario& s,
                        const FrequencyModel& model) {
    SimState next;
    next.t = st.t + h;
    next.p.resize(st.p.size());
    for (std::size_t i = 0; i < st.p.size(); ++i) next.p[i] = st.p[i] + h * rate.dp[i];
    next.delta_f = model.is_quasi_static() ? frequency_deviation(next.p, total_load(s), model.beta)
                                           : st.delta_f + h * rate.d_delta_f;
    return next;
}

}  // namespace detail

template <RateFunction Rhs>
SimState step_euler(const Rhs& rhs, const SimState& st, const Scenario& s, const ControllerConfig& cfg,
                    const FrequencyModel& model, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step_euler: h must be > 0");
    return detail::advance(st, rhs(st, s, cfg, model), h, s, model);
}

template <RateFunction Rhs>
SimState step_rk4(const Rhs& rhs, const SimState& st, const Scenario& s, const ControllerConfig& cfg,
                  const FrequencyModel& model, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step_rk4: h must be > 0");
    const StateRate k1 = rhs(st, s, cfg, model);
    const StateRate k2 = rhs(detail::advance(st, k1, h / 2, s, model), s, cfg, model);
    const StateRate k3 = rhs(detail::advance(st, k2, h / 2, s, model), s, cfg, model);
    const StateRate k4 = rhs(detail::advance(st, k3, h, s, model), s, cfg, model);

    StateRate avg;
    avg.dp.resize(st.p.size());
    for (std::size_t i = 0; i < st.p.size(); ++i)
        avg.dp[i] = (k1.dp[i] + 2.0 * k2.dp[i] + 2.0 * k3.dp[i] + k4.dp[i]) / 6.0;
    avg.d_delta_f = (k1.d_delta_f + 2.0 * k2.d_delta_f + 2.0 * k3.d_delta_f + k4.d_delta_f) / 6.0;
    return detail::advance(st, avg, h, s, model);
}

enum class Integrator { Euler, RK4 };

inline std::string_view to_string(Integrator i) { return i == Integrator::Euler ? "euler" : "rk4"; }

inline SimState initial_state(const Scenario& s, const FrequencyModel& model) {
    SimState st;
    st.p.reserve(s.size());
    for (const auto& g : s.generators) st.p.push_back(g.p_init);
    st.delta_f = model.is_quasi_static() ? frequency_deviation(st.p, total_load(s), model.beta) : 0.0;
    return st;
}

/**
 * Integrates the closed loop from p_init on the grid t_k = k h up to t_end.
 * Load events are snapped to the nearest grid point; the sample recorded at
 * an event time already reflects the new loads.
 */
inline SimulationTrace simulate(const Scenario& s, const ControllerConfig& cfg, const FrequencyModel& model,
                                double h, double t_end, std::vector<LoadEvent> events = {},
                                Integrator integrator = Integrator::Euler) {
    if (!(h > 0.0)) throw std::invalid_argument("simulate: h must be > 0");
    if (!(t_end > h)) throw std::invalid_argument("simulate: t_end must be > h");
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!std::isfinite(events[i].time)) throw std::invalid_argument("simulate: event time must be finite");
        if (i > 0 && events[i].time < events[i - 1].time)
            throw std::invalid_argument("simulate: events must be sorted by time");
        if (events[i].loads.empty()) throw std::invalid_argument("simulate: event load vector is empty");
        for (double d : events[i].loads)
            if (!std::isfinite(d)) throw std::invalid_argument("simulate: event loads must be finite");
    }

    const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
    std::vector<std::size_t> event_index;
    for (auto& e : events) {
        const double snapped = std::max(0.0, std::round(e.time / h));
        event_index.push_back(static_cast<std::size_t>(snapped));
        e.time = snapped * h;
    }

    SimulationTrace trace;
    trace.controller = cfg;
    trace.model = model;
    trace.initial_loads = s.loads;
    trace.events = events;
    trace.samples.reserve(steps + 1);

    Scenario live = s;
    SimState st = initial_state(live, model);
    std::size_t next_event = 0;
    for (std::size_t k = 0;; ++k) {
        while (next_event < events.size() && event_index[next_event] <= k) {
            live.loads = events[next_event].loads;
            if (model.is_quasi_static()) st.delta_f = frequency_deviation(st.p, total_load(live), model.beta);
            ++next_event;
        }
        st.t = static_cast<double>(k) * h;
        trace.samples.push_back(st);
        if (k == steps) break;
        st = integrator == Integrator::Euler ? step_euler(closed_loop, st, live, cfg, model, h)
                                             : step_rk4(closed_loop, st, live, cfg, model, h);
    }
    return trace;
}

/**
 * Earliest sample time after the last event from which |df| <= eps holds for
 * the rest of the trace; +infinity when the final sample is still outside.
 */
inline double settling_time(const SimulationTrace& trace, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("settling_time: eps must be > 0");
    const double start = trace.events.empty() ? (trace.samples.empty() ? 0.0 : trace.samples.front().t)
                                              : trace.events.back().time;
    double settled = start;
    for (const auto& sample : trace.samples) {
        if (sample.t < start) continue;
        if (std::abs(sample.delta_f) > eps) settled = std::numeric_limits<double>::infinity();
        else if (std::isinf(settled)) settled = sample.t;
    }
    return settled;
}

/// P_i / df evaluated at s = j omega for the PI law -(K / 2a)(1 + 1/(tau s)).
inline std::complex<double> pi_frequency_response(const CostCoefficients& c, double K, double tau, double omega) {
    if (omega == 0.0) throw std::domain_error("pi_frequency_response: omega = 0 is the integrator pole");
    const std::complex<double> s(0.0, omega);
    return -(K / (2.0 * c.a)) * (1.0 + 1.0 / (tau * s));
}

/// max over samples of |(m_i - m_1)(t) - (m_i - m_1)(0)|.
inline double marginal_cost_spread_drift(const SimulationTrace& trace, const Scenario& s) {
    if (trace.samples.empty()) return 0.0;
    auto diffs = [&](const SimState& st) {
        std::vector<double> d(s.size());
        const double m1 = marginal_cost(s.generators[0].cost, st.p[0]);
        for (std::size_t i = 0; i < s.size(); ++i) d[i] = marginal_cost(s.generators[i].cost, st.p[i]) - m1;
        return d;
    };
    const auto ref = diffs(trace.samples.front());
    double drift = 0.0;
    for (const auto& sample : trace.samples) {
        const auto d = diffs(sample);
        for (std::size_t i = 0; i < d.size(); ++i) drift = std::max(drift, std::abs(d[i] - ref[i]));
    }
    return drift;
}

}  // namespace econfreq

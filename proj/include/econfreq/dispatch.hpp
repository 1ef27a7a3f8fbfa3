/**
 * @brief Economic dispatch solvers: closed form, exhaustive grid oracle,
 *        dual decomposition (dual ascent) and the method of multipliers.
 *
 * Sign convention shared with the simulator: imbalance = D - sum(P) and
 * delta_f = -imbalance / beta, so surplus generation gives positive delta_f.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "econfreq/linalg.hpp"
#include "econfreq/model.hpp"

namespace econfreq {

struct IterState {
    std::size_t k = 0;
    double lambda = 0.0;
    std::vector<double> p;
    double imbalance = 0.0;
    double delta_f = 0.0;
};

enum class StopReason { Tolerance, MaxIterations, Diverged };

inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::Tolerance: return "tolerance";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::Diverged: return "diverged";
    }
    return "unknown";
}

struct IterationTrace {
    std::vector<IterState> states;
    bool converged = false;
    StopReason stop_reason = StopReason::MaxIterations;

    const IterState& last() const { return states.back(); }
    /// Number of price updates performed.
    std::size_t iterations() const { return states.empty() ? 0 : states.back().k; }
};

struct SolveOptions {
    double tol = 1e-6;
    std::size_t max_iter = 10000;
    std::optional<double> lambda0;  ///< defaults to the marginal cost of generator 1 at p_init
};

inline double default_lambda0(const Scenario& s) {
    const auto& g = s.generators.front();
    return marginal_cost(g.cost, g.p_init);
}

inline DispatchSolution make_solution(const Scenario& s, std::vector<double> p, double lambda) {
    DispatchSolution sol;
    sol.total_cost = total_cost(s, p);
    sol.p = std::move(p);
    sol.lambda_star = lambda;
    return sol;
}

/// Equal marginal cost substituted into the balance constraint.
inline DispatchSolution analytic_dispatch(const Scenario& s) {
    const double S = price_sensitivity(s);
    double weighted_b = 0.0;
    for (const auto& g : s.generators) weighted_b += g.cost.b / (2.0 * g.cost.a);
    const double lambda = (total_load(s) + weighted_b) / S;

    std::vector<double> p;
    p.reserve(s.size());
    for (const auto& g : s.generators) p.push_back((lambda - g.cost.b) / (2.0 * g.cost.a));
    return make_solution(s, std::move(p), lambda);
}

/**
 * Exhaustive search over P_1..P_{N-1} on a grid of integer multiples of
 * grid_step, with P_N = D - sum(P_i). Exponential in N, so N <= 4.
 *
 * Coordinate i is searched over [-w_i, w_i] where w_i covers [-2D, 2D] and
 * is widened to |D|/(2 a_i S) + (b_max - b_min)/(2 a_i), a box that always
 * contains the optimum. The reported price is the mean marginal cost.
 */
inline DispatchSolution brute_force_dispatch(const Scenario& s, double grid_step) {
    const std::size_t n = s.size();
    if (n == 0 || n > 4) throw std::invalid_argument("brute_force_dispatch: requires 1 <= N <= 4");
    if (!(grid_step > 0.0)) throw std::invalid_argument("brute_force_dispatch: grid_step must be > 0");

    const double D = total_load(s);
    if (n == 1) {
        std::vector<double> p{D};
        return make_solution(s, std::move(p), marginal_cost(s.generators[0].cost, D));
    }

    const double S = price_sensitivity(s);
    double b_min = std::numeric_limits<double>::infinity();
    double b_max = -b_min;
    for (const auto& g : s.generators) {
        b_min = std::min(b_min, g.cost.b);
        b_max = std::max(b_max, g.cost.b);
    }

    const std::size_t free = n - 1;
    std::vector<std::int64_t> half(free);
    for (std::size_t i = 0; i < free; ++i) {
        const double a = s.generators[i].cost.a;
        const double w = std::max(2.0 * std::abs(D), std::abs(D) / (2.0 * a * S) + (b_max - b_min) / (2.0 * a));
        half[i] = static_cast<std::int64_t>(std::ceil(w / grid_step));
    }

    const CostCoefficients& last = s.generators[n - 1].cost;
    const CostCoefficients& inner = s.generators[free - 1].cost;

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_p(n);
    std::vector<std::int64_t> idx(free);
    for (std::size_t i = 0; i + 1 < free; ++i) idx[i] = -half[i];

    // Outer coordinates enumerate as an odometer; the innermost free coordinate
    // is a tight loop.
    while (true) {
        double outer_cost = 0.0;
        double outer_sum = 0.0;
        for (std::size_t i = 0; i + 1 < free; ++i) {
            const double pi = static_cast<double>(idx[i]) * grid_step;
            outer_cost += cost_value(s.generators[i].cost, pi);
            outer_sum += pi;
        }
        const double rest = D - outer_sum;
        const std::int64_t h = half[free - 1];
        for (std::int64_t j = -h; j <= h; ++j) {
            const double pj = static_cast<double>(j) * grid_step;
            const double pn = rest - pj;
            const double c = outer_cost + cost_value(inner, pj) + cost_value(last, pn);
            if (c < best) {
                best = c;
                for (std::size_t i = 0; i + 1 < free; ++i) best_p[i] = static_cast<double>(idx[i]) * grid_step;
                best_p[free - 1] = pj;
                best_p[n - 1] = pn;
            }
        }

        std::size_t pos = 0;
        while (pos + 1 < free) {
            if (++idx[pos] <= half[pos]) break;
            idx[pos] = -half[pos];
            ++pos;
        }
        if (pos + 1 >= free) break;
    }

    double mean_mc = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_mc += marginal_cost(s.generators[i].cost, best_p[i]);
    return make_solution(s, std::move(best_p), mean_mc / static_cast<double>(n));
}

inline IterState make_state(const Scenario& s, std::size_t k, double lambda, std::vector<double> p) {
    IterState st;
    st.k = k;
    st.lambda = lambda;
    double sum = 0.0;
    for (double x : p) sum += x;
    st.p = std::move(p);
    st.imbalance = total_load(s) - sum;
    st.delta_f = -st.imbalance / s.beta;
    return st;
}

/// Per-generator minimizers of C_i(P_i) - lambda P_i, i.e. equal marginal cost lambda.
inline std::vector<double> price_response(const Scenario& s, double lambda) {
    std::vector<double> p;
    p.reserve(s.size());
    for (const auto& g : s.generators) p.push_back((lambda - g.cost.b) / (2.0 * g.cost.a));
    return p;
}

inline IterState dual_state(const Scenario& s, double lambda, std::size_t k = 0) {
    return make_state(s, k, lambda, price_response(s, lambda));
}

inline IterState dual_ascent_step(const IterState& st, const Scenario& s, double alpha) {
    const double lambda = st.lambda + alpha * st.imbalance;
    return dual_state(s, lambda, st.k + 1);
}

namespace detail {

inline bool diverged(const IterState& st, const Scenario& s) {
    return !std::isfinite(st.imbalance) || !std::isfinite(st.lambda) ||
           std::abs(st.imbalance) > 1e9 * std::max(std::abs(total_load(s)), 1.0);
}

template <typename Step>
IterationTrace iterate(IterState first, const Scenario& s, const SolveOptions& opt, Step&& step) {
    IterationTrace trace;
    trace.states.push_back(std::move(first));
    while (true) {
        const IterState& cur = trace.states.back();
        if (std::abs(cur.imbalance) < opt.tol) {
            trace.converged = true;
            trace.stop_reason = StopReason::Tolerance;
            break;
        }
        if (detail::diverged(cur, s)) {
            trace.stop_reason = StopReason::Diverged;
            break;
        }
        if (cur.k >= opt.max_iter) {
            trace.stop_reason = StopReason::MaxIterations;
            break;
        }
        trace.states.push_back(step(cur));
    }
    return trace;
}

inline void check_options(const SolveOptions& opt) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (opt.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

}  // namespace detail

inline IterationTrace dual_ascent_solve(const Scenario& s, double alpha, const SolveOptions& opt = {}) {
    if (!(alpha > 0.0)) throw std::invalid_argument("dual_ascent_solve: alpha must be > 0");
    detail::check_options(opt);
    return detail::iterate(dual_state(s, opt.lambda0.value_or(default_lambda0(s))), s, opt,
                           [&](const IterState& st) { return dual_ascent_step(st, s, alpha); });
}

/// Dual ascent converges iff 0 < alpha < 2/S.
inline double stability_bound_alpha(const Scenario& s) { return 2.0 / price_sensitivity(s); }

/// Per-step imbalance ratio |1 - alpha S| of dual ascent.
inline double dual_contraction_factor(const Scenario& s, double alpha) {
    return std::abs(1.0 - alpha * price_sensitivity(s));
}

/**
 * Minimizer of the augmented Lagrangian for a fixed price: the unique P with
 * 2 a_i P_i + b_i - rho (D - sum P) = lambda for all i.
 */
inline std::vector<double> mom_inner_minimize(double lambda, const Scenario& s, double rho) {
    if (!(rho >= 0.0)) throw std::invalid_argument("mom_inner_minimize: rho must be >= 0");
    const double D = total_load(s);
    std::vector<double> diag, rhs;
    diag.reserve(s.size());
    rhs.reserve(s.size());
    for (const auto& g : s.generators) {
        diag.push_back(2.0 * g.cost.a);
        rhs.push_back(lambda - g.cost.b + rho * D);
    }
    return solve_diagonal_plus_ones(diag, rho, rhs);
}

inline IterState mom_state(const Scenario& s, double lambda, double rho, std::size_t k = 0) {
    return make_state(s, k, lambda, mom_inner_minimize(lambda, s, rho));
}

inline IterState mom_step(const IterState& st, const Scenario& s, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("mom_step: rho must be > 0");
    const IterState current = mom_state(s, st.lambda, rho, st.k);
    const double lambda = current.lambda + rho * current.imbalance;
    return mom_state(s, lambda, rho, st.k + 1);
}

inline IterationTrace mom_solve(const Scenario& s, double rho, const SolveOptions& opt = {}) {
    if (!(rho > 0.0)) throw std::invalid_argument("mom_solve: rho must be > 0");
    detail::check_options(opt);
    return detail::iterate(mom_state(s, opt.lambda0.value_or(default_lambda0(s)), rho), s, opt,
                           [&](const IterState& st) { return mom_step(st, s, rho); });
}

/// Imbalance contracts by 1/(1 + rho S) per step; always in (0, 1).
inline double mom_contraction_factor(const Scenario& s, double rho) {
    return 1.0 / (1.0 + rho * price_sensitivity(s));
}

/**
 * Geometric mean of consecutive |imbalance| ratios over the last 80% of the
 * usable steps. A step is usable when both imbalances are >= 10 tol.
 * Returns nullopt when no usable step exists.
 */
inline std::optional<double> empirical_contraction_ratio(const IterationTrace& trace, double tol) {
    std::vector<double> ratios;
    for (std::size_t k = 0; k + 1 < trace.states.size(); ++k) {
        const double e0 = std::abs(trace.states[k].imbalance);
        const double e1 = std::abs(trace.states[k + 1].imbalance);
        if (e0 < 10.0 * tol || e1 < 10.0 * tol) continue;
        if (!std::isfinite(e0) || !std::isfinite(e1)) continue;
        ratios.push_back(e1 / e0);
    }
    if (ratios.empty()) return std::nullopt;
    const auto keep = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(ratios.size())));
    double log_sum = 0.0;
    for (std::size_t i = ratios.size() - keep; i < ratios.size(); ++i) log_sum += std::log(ratios[i]);
    return std::exp(log_sum / static_cast<double>(keep));
}

/// max_i mc_i - min_i mc_i at the given powers.
inline double marginal_cost_spread(const Scenario& s, std::span<const double> p) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double m = marginal_cost(s.generators[i].cost, p[i]);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    return hi - lo;
}

}  // namespace econfreq

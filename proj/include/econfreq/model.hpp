/**
 * @brief Problem data for quadratic-cost economic dispatch and the
 *        elementary cost algebra shared by the solvers and the simulator.
 *
 * Units: power in MW, price in $/MWh, frequency deviation in Hz,
 * K in ($/MWh)/Hz, beta in MW/Hz, tau in s.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace econfreq {

/// C(p) = a p^2 + b p + c, with a > 0.
struct CostCoefficients {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;

    friend bool operator==(const CostCoefficients&, const CostCoefficients&) = default;
};

struct Generator {
    std::string id;
    CostCoefficients cost;
    double p_init = 0.0;

    friend bool operator==(const Generator&, const Generator&) = default;
};

struct Scenario {
    std::vector<Generator> generators;
    std::vector<double> loads;
    double gain_K = 1.0;  ///< price-to-frequency gain
    double beta = 1.0;    ///< frequency response coefficient
    double tau = 1.0;     ///< iteration step / controller time constant

    std::size_t size() const { return generators.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct DispatchSolution {
    std::vector<double> p;
    double lambda_star = 0.0;
    double total_cost = 0.0;
};

enum class ControllerKind { Integral, ProportionalIntegral };

struct ControllerConfig {
    ControllerKind kind = ControllerKind::Integral;
    double gain_K = 1.0;
    double tau = 1.0;

    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

inline ControllerConfig controller_for(const Scenario& s, ControllerKind kind) {
    return {kind, s.gain_K, s.tau};
}

inline double cost_value(const CostCoefficients& c, double p) {
    return c.a * p * p + c.b * p + c.c;
}

inline double marginal_cost(const CostCoefficients& c, double p) {
    return 2.0 * c.a * p + c.b;
}

/// Coefficient multiplying -df in the continuous integral law, K / (2 a tau).
inline double integral_gain(const CostCoefficients& c, double K, double tau) {
    return K / (2.0 * c.a * tau);
}

/// Per-generator integral gains K / (2 a_i tau) for a controller.
inline std::vector<double> derived_gains(const Scenario& s, const ControllerConfig& cfg) {
    std::vector<double> g;
    g.reserve(s.size());
    for (const auto& gen : s.generators)
        g.push_back(integral_gain(gen.cost, cfg.gain_K, cfg.tau));
    return g;
}

inline double total_load(std::span<const double> loads) {
    double d = 0.0;
    for (double x : loads) d += x;
    return d;
}

inline double total_load(const Scenario& s) { return total_load(s.loads); }

inline double total_cost(const Scenario& s, std::span<const double> p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += cost_value(s.generators[i].cost, p[i]);
    return sum;
}

/// S = sum_i 1/(2 a_i): sensitivity of total output to the price.
inline double price_sensitivity(const Scenario& s) {
    double S = 0.0;
    for (const auto& g : s.generators) S += 1.0 / (2.0 * g.cost.a);
    return S;
}

struct Violation {
    std::string field;    ///< path inside the scenario, e.g. "generators[1].a"
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty result means the scenario satisfies every invariant.
inline std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    auto positive = [&](double v, const char* field, const char* symbol) {
        if (!std::isfinite(v) || v <= 0.0)
            out.push_back({field, std::string(symbol) + " must be finite and > 0"});
    };

    if (s.generators.empty())
        out.push_back({"generators", "at least one generator is required"});
    if (s.loads.empty())
        out.push_back({"loads", "at least one load is required"});

    std::set<std::string> ids;
    for (std::size_t i = 0; i < s.generators.size(); ++i) {
        const auto& g = s.generators[i];
        const std::string path = "generators[" + std::to_string(i) + "]";
        const std::string which = "generator " + std::to_string(i + 1);
        if (g.id.empty())
            out.push_back({path + ".id", "id must be non-empty for " + which});
        else if (!ids.insert(g.id).second)
            out.push_back({path + ".id", "duplicate generator id \"" + g.id + "\""});
        if (!std::isfinite(g.cost.a) || g.cost.a <= 0.0)
            out.push_back({path + ".a", "a must be > 0 for " + which});
        if (!std::isfinite(g.cost.b))
            out.push_back({path + ".b", "b must be finite for " + which});
        if (!std::isfinite(g.cost.c))
            out.push_back({path + ".c", "c must be finite for " + which});
        if (!std::isfinite(g.p_init))
            out.push_back({path + ".p_init", "p_init must be finite for " + which});
    }

    for (std::size_t j = 0; j < s.loads.size(); ++j)
        if (!std::isfinite(s.loads[j]))
            out.push_back({"loads[" + std::to_string(j) + "]", "load must be finite"});
    if (!s.loads.empty() && !std::isfinite(total_load(s)))
        out.push_back({"loads", "total load must be finite"});

    positive(s.gain_K, "gain_K", "K");
    positive(s.beta, "beta", "beta");
    positive(s.tau, "tau", "tau");
    return out;
}

}  // namespace econfreq

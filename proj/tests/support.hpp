#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "econfreq/dispatch.hpp"
#include "econfreq/model.hpp"

namespace econfreq::testing {

/// G1: a=0.5 b=1, G2: a=1 b=2, D = 6 + 4, K = 1, beta = 1.5, tau = 1.
inline Scenario reference_scenario() {
    Scenario s;
    s.generators = {{"G1", {0.5, 1.0, 0.0}, 7.0}, {"G2", {1.0, 2.0, 0.0}, 3.0}};
    s.loads = {6.0, 4.0};
    s.gain_K = 1.0;
    s.beta = 1.5;
    s.tau = 1.0;
    return s;
}

inline Scenario with_total_load(Scenario s, double d) {
    s.loads = {d};
    return s;
}

/**
 * N in {1,2,3}, a in [0.1, 5], b in [0, 20], D in [1, 50] split over one or
 * two loads. beta is drawn so that K S / beta lies in [0.2, 1.8], which keeps
 * the iteration with alpha = K / beta convergent. p_init is the economic
 * dispatch at 70% of the load: equal marginal cost but not balanced.
 */
inline Scenario random_scenario(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> gens(1, 3);
    std::uniform_int_distribution<int> loads(1, 2);
    std::uniform_real_distribution<double> a(0.1, 5.0), b(0.0, 20.0), d(1.0, 50.0);
    std::uniform_real_distribution<double> k(0.5, 5.0), tau(0.5, 5.0), u(0.2, 1.8), split(0.2, 0.8);

    Scenario s;
    const int n = gens(rng);
    for (int i = 0; i < n; ++i) s.generators.push_back({"G" + std::to_string(i + 1), {a(rng), b(rng), 0.0}, 0.0});
    const double total = d(rng);
    if (loads(rng) == 1) s.loads = {total};
    else {
        const double f = split(rng);
        s.loads = {f * total, (1.0 - f) * total};
    }
    s.gain_K = k(rng);
    s.tau = tau(rng);
    s.beta = s.gain_K * price_sensitivity(s) / u(rng);

    const DispatchSolution warm = analytic_dispatch(with_total_load(s, 0.7 * total));
    for (std::size_t i = 0; i < s.size(); ++i) s.generators[i].p_init = warm.p[i];
    return s;
}

inline std::vector<Scenario> random_scenarios(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_scenario(rng));
    return out;
}

/// Dense LDLT solve of (diag(d) + sigma 1 1^T) x = r.
inline std::vector<double> dense_solve(const std::vector<double>& d, double sigma, const std::vector<double>& r) {
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, sigma);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) += d[static_cast<std::size_t>(i)];
        rhs(i) = r[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd x = m.ldlt().solve(rhs);
    return {x.data(), x.data() + n};
}

}  // namespace econfreq::testing

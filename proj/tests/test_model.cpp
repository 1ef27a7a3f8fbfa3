#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "econfreq/model.hpp"
#include "support.hpp"

using namespace econfreq;
using econfreq::testing::reference_scenario;

TEST(Model, CostValue) {
    EXPECT_DOUBLE_EQ(cost_value({0.5, 1.0, 0.0}, 7.0), 31.5);
    EXPECT_DOUBLE_EQ(cost_value({1.0, 2.0, 0.0}, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(cost_value({1.0, 2.0, 5.0}, 3.0), 20.0);
}

TEST(Model, MarginalCost) {
    EXPECT_DOUBLE_EQ(marginal_cost({0.5, 1.0, 0.0}, 7.0), 8.0);
    EXPECT_DOUBLE_EQ(marginal_cost({1.0, 2.0, 0.0}, 0.0), 2.0);
    EXPECT_DOUBLE_EQ(marginal_cost({1.0, 2.0, 0.0}, 3.0), 8.0);
}

TEST(Model, IntegralGain) {
    EXPECT_DOUBLE_EQ(integral_gain({0.5, 0, 0}, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(integral_gain({1.0, 0, 0}, 1.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(integral_gain({0.5, 0, 0}, 2.0, 4.0), 0.5);
}

TEST(Model, TotalLoad) {
    Scenario s = reference_scenario();
    EXPECT_DOUBLE_EQ(total_load(s), 10.0);
    s.loads = {10.0};
    EXPECT_DOUBLE_EQ(total_load(s), 10.0);
    s.loads = {3.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(total_load(s), 10.0);
}

TEST(Model, MarginalCostIsDerivativeOfCost) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> a(0.01, 10.0), b(-50.0, 50.0), c(-100.0, 100.0), p(-100.0, 100.0);
    const double h = 1e-4;
    for (int trial = 0; trial < 500; ++trial) {
        const CostCoefficients cc{a(rng), b(rng), c(rng)};
        const double x = p(rng);
        const double fd = (cost_value(cc, x + h) - cost_value(cc, x - h)) / (2 * h);
        // Central differences are exact for quadratics; the residue is cancellation in cost_value.
        const double scale = std::max(1.0, std::abs(cost_value(cc, x)));
        EXPECT_LE(std::abs(fd - marginal_cost(cc, x)), 1e-6 * scale) << "trial " << trial;
    }
}

TEST(Model, MarginalCostFiniteDifferenceExample) {
    const CostCoefficients cc{0.5, 1.0, 0.0};
    const double h = 1e-4;
    for (double x : {-3.0, 0.0, 7.0, 12.5}) {
        const double fd = (cost_value(cc, x + h) - cost_value(cc, x - h)) / (2 * h);
        EXPECT_LE(std::abs(fd - marginal_cost(cc, x)), 1e-6);
    }
}

TEST(Model, IntegralGainPositiveAndDecreasingInA) {
    double prev = std::numeric_limits<double>::infinity();
    for (double a = 0.05; a < 20.0; a *= 1.3) {
        const double g = integral_gain({a, 0, 0}, 1.7, 0.8);
        EXPECT_GT(g, 0.0);
        EXPECT_LT(g, prev);
        prev = g;
    }
}

TEST(Model, DerivedGainsMatchPerGenerator) {
    const Scenario s = reference_scenario();
    const auto g = derived_gains(s, controller_for(s, ControllerKind::Integral));
    ASSERT_EQ(g.size(), 2u);
    EXPECT_DOUBLE_EQ(g[0], 1.0);
    EXPECT_DOUBLE_EQ(g[1], 0.5);
}

TEST(Validate, AcceptsReferenceScenario) { EXPECT_TRUE(validate_scenario(reference_scenario()).empty()); }

TEST(Validate, ZeroQuadraticCoefficientNamesGenerator) {
    Scenario s = reference_scenario();
    s.generators[1].cost.a = 0.0;
    const auto v = validate_scenario(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].field, "generators[1].a");
    EXPECT_EQ(v[0].message, "a must be > 0 for generator 2");
}

TEST(Validate, NegativeBetaNamed) {
    Scenario s = reference_scenario();
    s.beta = -1.0;
    const auto v = validate_scenario(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].field, "beta");
}

TEST(Validate, ReportsEveryViolation) {
    Scenario s = reference_scenario();
    s.generators[1].id = "G1";
    s.gain_K = 0.0;
    s.tau = -2.0;
    s.loads.push_back(std::numeric_limits<double>::quiet_NaN());
    const auto v = validate_scenario(s);
    std::vector<std::string> fields;
    for (const auto& x : v) fields.push_back(x.field);
    EXPECT_NE(std::find(fields.begin(), fields.end(), "generators[1].id"), fields.end());
    EXPECT_NE(std::find(fields.begin(), fields.end(), "gain_K"), fields.end());
    EXPECT_NE(std::find(fields.begin(), fields.end(), "tau"), fields.end());
    EXPECT_NE(std::find(fields.begin(), fields.end(), "loads[2]"), fields.end());
}

TEST(Validate, EmptyCollections) {
    Scenario s = reference_scenario();
    s.generators.clear();
    s.loads.clear();
    const auto v = validate_scenario(s);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].field, "generators");
    EXPECT_EQ(v[1].field, "loads");
}

// Each field is pushed through its boundary; the scenario must be accepted
// exactly when every invariant holds.
TEST(Validate, FuzzFieldBoundaries) {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    struct Probe {
        double value;
        bool positive_ok;  // valid for a strictly positive field
        bool finite_ok;    // valid for a merely finite field
    };
    const std::vector<Probe> probes = {{-1.0, false, true}, {-1e-300, false, true}, {0.0, false, true},
                                       {1e-300, true, true}, {1.0, true, true},     {1e300, true, true},
                                       {inf, false, false},  {-inf, false, false},  {nan, false, false}};

    using Setter = void (*)(Scenario&, double);
    const std::vector<std::pair<Setter, bool>> fields = {
        {[](Scenario& s, double v) { s.generators[0].cost.a = v; }, true},
        {[](Scenario& s, double v) { s.generators[1].cost.a = v; }, true},
        {[](Scenario& s, double v) { s.gain_K = v; }, true},
        {[](Scenario& s, double v) { s.beta = v; }, true},
        {[](Scenario& s, double v) { s.tau = v; }, true},
        {[](Scenario& s, double v) { s.generators[0].cost.b = v; }, false},
        {[](Scenario& s, double v) { s.generators[1].cost.c = v; }, false},
        {[](Scenario& s, double v) { s.generators[0].p_init = v; }, false},
        {[](Scenario& s, double v) { s.loads[1] = v; }, false},
    };
    for (std::size_t f = 0; f < fields.size(); ++f) {
        for (const auto& probe : probes) {
            Scenario s = reference_scenario();
            fields[f].first(s, probe.value);
            const bool expect_ok = fields[f].second ? probe.positive_ok : probe.finite_ok;
            EXPECT_EQ(validate_scenario(s).empty(), expect_ok) << "field " << f << " value " << probe.value;
        }
    }
}

TEST(Validate, OverflowingTotalLoad) {
    Scenario s = reference_scenario();
    s.loads = {1e308, 1e308};
    const auto v = validate_scenario(s);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].field, "loads");
}

/**
 * @brief Command-line front end.
 *
 * Exit codes: 0 success, 1 usage or I/O error, 2 scenario validation error,
 * 3 solver diverged.
 */
#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "econfreq/dispatch.hpp"
#include "econfreq/dynamics.hpp"
#include "econfreq/experiments.hpp"
#include "econfreq/io.hpp"

namespace econfreq {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInvalid = 2, kExitDiverged = 3 };

namespace cli_detail {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : json(nullptr); }

inline ScenarioFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_file(buf.str());
}

template <typename Writer>
void write_csv(const std::string& path, Writer&& writer) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open '" + path + "' for writing");
    writer(out);
}

inline json to_json(const MethodResult& m) {
    return {{"stop_reason", to_string(m.stop_reason)},
            {"converged", m.stop_reason == StopReason::Tolerance},
            {"iterations", m.iterations},
            {"empirical_ratio", number_or_null(m.empirical_ratio)},
            {"predicted_ratio", m.predicted_ratio}};
}

inline json to_json(const ConvergenceReport& r) {
    return {{"alpha", r.alpha},
            {"rho", r.rho},
            {"dual", to_json(r.dual)},
            {"mom", to_json(r.mom)},
            {"integral_settling", number_or_null(r.integral_settling)},
            {"pi_settling", number_or_null(r.pi_settling)}};
}

inline json to_json(const SteadyStateReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}});
    return {{"passed", r.passed()}, {"checks", checks}};
}

struct Settings {
    std::string file;
    std::string out_csv;
    bool oracle = false;
    double grid_step = 0.01;
    std::string method;
    std::optional<double> alpha, rho, lambda0, tol, h, t_end, eps;
    std::optional<std::size_t> max_iter;
    std::string controller;
    std::string integrator;
    std::string param;
    std::vector<double> values;
    std::string pair;
    std::size_t steps = 200;
    double steady_tol = 1e-6;
};

inline SolveOptions solve_options(const ScenarioFile& f, const Settings& cfg) {
    SolveOptions opt;
    if (f.solver) {
        if (f.solver->tol) opt.tol = *f.solver->tol;
        if (f.solver->max_iter) opt.max_iter = *f.solver->max_iter;
        if (f.solver->lambda0) opt.lambda0 = f.solver->lambda0;
    }
    if (cfg.tol) opt.tol = *cfg.tol;
    if (cfg.max_iter) opt.max_iter = *cfg.max_iter;
    if (cfg.lambda0) opt.lambda0 = cfg.lambda0;
    if (!(opt.tol > 0.0)) throw UsageError("--tol must be > 0");
    if (opt.max_iter < 1) throw UsageError("--max-iter must be >= 1");
    return opt;
}

inline double default_step(const ScenarioFile& f) { return f.scenario.gain_K / f.scenario.beta; }

inline double alpha_of(const ScenarioFile& f, const Settings& cfg) {
    const double a = cfg.alpha.value_or(f.solver && f.solver->alpha ? *f.solver->alpha : default_step(f));
    if (!(a > 0.0)) throw UsageError("--alpha must be > 0");
    return a;
}

inline double rho_of(const ScenarioFile& f, const Settings& cfg) {
    const double r = cfg.rho.value_or(f.solver && f.solver->rho ? *f.solver->rho : default_step(f));
    if (!(r > 0.0)) throw UsageError("--rho must be > 0");
    return r;
}

inline StepStudy step_study(const ScenarioFile& f, const Settings& cfg) {
    StepStudy st;
    if (f.simulation) {
        const auto& sim = *f.simulation;
        st.h = sim.h.value_or(0.0);
        st.t_end = sim.t_end.value_or(0.0);
        st.eps = sim.settling_eps.value_or(st.eps);
        st.events = sim.events;
        st.integrator = sim.integrator.value_or(Integrator::Euler);
        if (sim.model) {
            st.model = *sim.model;
            st.model_from_scenario = false;
        }
    }
    if (cfg.h) st.h = *cfg.h;
    if (cfg.t_end) st.t_end = *cfg.t_end;
    if (cfg.eps) st.eps = *cfg.eps;
    if (!cfg.integrator.empty()) st.integrator = *detail::parse_integrator(cfg.integrator);
    if (cfg.h && !(*cfg.h > 0.0)) throw UsageError("--step must be > 0");
    if (cfg.eps && !(*cfg.eps > 0.0)) throw UsageError("--eps must be > 0");
    return st;
}

inline int cmd_validate(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    out << json{{"command", "validate"},
                {"valid", true},
                {"generators", f.scenario.size()},
                {"loads", f.scenario.loads.size()},
                {"total_load", total_load(f.scenario)}}
               .dump(2)
        << '\n';
    return kExitOk;
}

inline int cmd_dispatch(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    const DispatchSolution sol = analytic_dispatch(f.scenario);
    json j{{"command", "dispatch"}, {"lambda_star", sol.lambda_star}, {"p", sol.p}, {"total_cost", sol.total_cost}};
    if (cfg.oracle) {
        if (f.scenario.size() > 4) throw UsageError("--oracle supports at most 4 generators");
        if (!(cfg.grid_step > 0.0)) throw UsageError("--grid-step must be > 0");
        const DispatchSolution bf = brute_force_dispatch(f.scenario, cfg.grid_step);
        double gap = 0.0;
        for (std::size_t i = 0; i < sol.p.size(); ++i) gap = std::max(gap, std::abs(sol.p[i] - bf.p[i]));
        j["oracle"] = {{"grid_step", cfg.grid_step},
                       {"p", bf.p},
                       {"lambda", bf.lambda_star},
                       {"total_cost", bf.total_cost},
                       {"max_gap", gap}};
    }
    out << j.dump(2) << '\n';
    return kExitOk;
}

inline int cmd_iterate(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    const bool dual = cfg.method == "dual";
    if (dual && cfg.rho) throw UsageError("--rho applies to --method mom");
    if (!dual && cfg.alpha) throw UsageError("--alpha applies to --method dual");
    const SolveOptions opt = solve_options(f, cfg);
    const double step = dual ? alpha_of(f, cfg) : rho_of(f, cfg);
    const IterationTrace trace = dual ? dual_ascent_solve(f.scenario, step, opt) : mom_solve(f.scenario, step, opt);
    const double predicted = dual ? dual_contraction_factor(f.scenario, step) : mom_contraction_factor(f.scenario, step);

    write_csv(cfg.out_csv, [&](std::ostream& os) { write_trace_csv(trace, os); });
    const IterState& last = trace.last();
    out << json{{"command", "iterate"},
                {"method", cfg.method},
                {dual ? "alpha" : "rho", step},
                {"stop_reason", to_string(trace.stop_reason)},
                {"converged", trace.converged},
                {"iterations", trace.iterations()},
                {"lambda", number_or_null(last.lambda)},
                {"p", last.p},
                {"imbalance", number_or_null(last.imbalance)},
                {"delta_f", number_or_null(last.delta_f)},
                {"empirical_ratio", number_or_null(empirical_contraction_ratio(trace, opt.tol))},
                {"predicted_ratio", predicted}}
               .dump(2)
        << '\n';
    return trace.stop_reason == StopReason::Diverged ? kExitDiverged : kExitOk;
}

inline int cmd_simulate(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    std::optional<ControllerKind> kind;
    if (!cfg.controller.empty()) kind = detail::parse_controller(cfg.controller);
    else if (f.simulation) kind = f.simulation->controller;
    if (!kind) throw UsageError("--controller is required (integral|pi) when the scenario file names none");

    StepStudy st = step_study(f, cfg);
    // A bare simulate run uses only the file's events; no default load step.
    const bool has_events = f.simulation && !f.simulation->events.empty();
    st = resolve(st, f.scenario);
    if (!has_events) st.events.clear();

    const SimulationTrace trace =
        simulate(f.scenario, controller_for(f.scenario, *kind), st.model, st.h, st.t_end, st.events, st.integrator);
    write_csv(cfg.out_csv, [&](std::ostream& os) { write_trace_csv(trace, f.scenario, os); });

    const SimState& fin = trace.samples.back();
    out << json{{"command", "simulate"},
                {"controller", *kind == ControllerKind::Integral ? "integral" : "pi"},
                {"model", trace.model.is_quasi_static() ? "quasi_static" : "inertial"},
                {"integrator", to_string(st.integrator)},
                {"h", st.h},
                {"t_end", fin.t},
                {"samples", trace.samples.size()},
                {"p", fin.p},
                {"delta_f", fin.delta_f},
                {"settling_time", number_or_null(settling_time(trace, st.eps))},
                {"settling_eps", st.eps},
                {"steady_state", to_json(verify_steady_state_optimality(trace, f.scenario, cfg.steady_tol))}}
               .dump(2)
        << '\n';
    return kExitOk;
}

inline int cmd_compare(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    const ConvergenceReport r =
        compare_convergence(f.scenario, alpha_of(f, cfg), rho_of(f, cfg), solve_options(f, cfg), step_study(f, cfg));
    json j = to_json(r);
    j["command"] = "compare";
    out << j.dump(2) << '\n';
    return kExitOk;
}

inline int cmd_sweep(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    SweepParameter param = SweepParameter::Alpha;
    if (cfg.param == "rho") param = SweepParameter::Rho;
    else if (cfg.param == "K") param = SweepParameter::K;
    else if (cfg.param == "tau") param = SweepParameter::Tau;
    for (double v : cfg.values)
        if (!(v > 0.0)) throw UsageError("--values must all be > 0");

    const auto rows = sweep(f.scenario, param, cfg.values, solve_options(f, cfg), step_study(f, cfg));
    write_csv(cfg.out_csv, [&](std::ostream& os) { write_sweep_csv(param, rows, os); });
    json arr = json::array();
    for (const auto& row : rows) {
        json j{{"value", row.value}};
        if (row.report) j["report"] = to_json(*row.report);
        if (!row.error.empty()) j["error"] = row.error;
        arr.push_back(j);
    }
    out << json{{"command", "sweep"}, {"param", to_string(param)}, {"rows", arr}}.dump(2) << '\n';
    return kExitOk;
}

inline int cmd_equivalence(const Settings& cfg, std::ostream& out) {
    const ScenarioFile f = load(cfg.file);
    const EquivalencePair pair = cfg.pair == "dual-integral" ? EquivalencePair::DualVsIntegral : EquivalencePair::MomVsPI;
    if (cfg.steps < 1) throw UsageError("--steps must be >= 1");
    std::optional<double> lambda0 = cfg.lambda0;
    if (!lambda0 && f.solver) lambda0 = f.solver->lambda0;
    const EquivalenceReport r = check_euler_equivalence(f.scenario, pair, cfg.steps, lambda0);
    out << json{{"command", "equivalence"},
                {"pair", to_string(r.method)},
                {"steps", r.steps},
                {"max_abs_deviation", r.max_abs_deviation}}
               .dump(2)
        << '\n';
    return kExitOk;
}

}  // namespace cli_detail

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Economic dispatch and cost-tuned secondary frequency control"};
    app.require_subcommand(1);
    Settings cfg;

    auto add_file = [&](CLI::App* sub) { sub->add_option("file", cfg.file, "scenario JSON file")->required(); };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--tol", cfg.tol, "imbalance tolerance (MW)");
        sub->add_option("--max-iter", cfg.max_iter, "iteration limit");
        sub->add_option("--lambda0", cfg.lambda0, "initial price ($/MWh)");
    };
    auto add_study = [&](CLI::App* sub) {
        sub->add_option("--step", cfg.h, "integration step (s)");
        sub->add_option("--t-end", cfg.t_end, "simulation horizon (s)");
        sub->add_option("--eps", cfg.eps, "settling band on |df| (Hz)");
        sub->add_option("--integrator", cfg.integrator)->check(CLI::IsMember({"euler", "rk4"}));
    };

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    add_file(validate);

    auto* dispatch = app.add_subcommand("dispatch", "closed-form economic dispatch");
    add_file(dispatch);
    dispatch->add_flag("--oracle", cfg.oracle, "also run the exhaustive grid search");
    dispatch->add_option("--grid-step", cfg.grid_step, "oracle grid resolution (MW)");

    auto* iterate = app.add_subcommand("iterate", "run dual ascent or the method of multipliers");
    add_file(iterate);
    iterate->add_option("--method", cfg.method)->required()->check(CLI::IsMember({"dual", "mom"}));
    auto* alpha_opt = iterate->add_option("--alpha", cfg.alpha, "dual ascent step");
    iterate->add_option("--rho", cfg.rho, "augmented Lagrangian penalty")->excludes(alpha_opt);
    add_solver(iterate);
    iterate->add_option("--out-csv", cfg.out_csv, "write the iteration trace");

    auto* simulate_cmd = app.add_subcommand("simulate", "closed-loop frequency control simulation");
    add_file(simulate_cmd);
    simulate_cmd->add_option("--controller", cfg.controller)->check(CLI::IsMember({"integral", "pi"}));
    add_study(simulate_cmd);
    simulate_cmd->add_option("--steady-tol", cfg.steady_tol, "tolerance for the steady-state checks");
    simulate_cmd->add_option("--out-csv", cfg.out_csv, "write the simulation trace");

    auto* compare = app.add_subcommand("compare", "discrete and continuous convergence comparison");
    add_file(compare);
    compare->add_option("--alpha", cfg.alpha, "dual ascent step (default K/beta)");
    compare->add_option("--rho", cfg.rho, "augmented Lagrangian penalty (default K/beta)");
    add_solver(compare);
    add_study(compare);

    auto* sweep_cmd = app.add_subcommand("sweep", "convergence records over a parameter range");
    add_file(sweep_cmd);
    sweep_cmd->add_option("--param", cfg.param)->required()->check(CLI::IsMember({"alpha", "rho", "K", "tau"}));
    sweep_cmd->add_option("--values", cfg.values)->required()->expected(1, -1);
    add_solver(sweep_cmd);
    add_study(sweep_cmd);
    sweep_cmd->add_option("--out-csv", cfg.out_csv, "write the sweep table");

    auto* equivalence = app.add_subcommand("equivalence", "Euler integration vs discrete iteration");
    add_file(equivalence);
    equivalence->add_option("--pair", cfg.pair)->required()->check(CLI::IsMember({"dual-integral", "mom-pi"}));
    equivalence->add_option("--steps", cfg.steps, "number of iterations and Euler steps");
    equivalence->add_option("--lambda0", cfg.lambda0, "initial price ($/MWh)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*validate) return cmd_validate(cfg, out);
        if (*dispatch) return cmd_dispatch(cfg, out);
        if (*iterate) return cmd_iterate(cfg, out);
        if (*simulate_cmd) return cmd_simulate(cfg, out);
        if (*compare) return cmd_compare(cfg, out);
        if (*sweep_cmd) return cmd_sweep(cfg, out);
        if (*equivalence) return cmd_equivalence(cfg, out);
    } catch (const ScenarioFileError& e) {
        err << "invalid scenario:\n" << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("econfreq");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace econfreq

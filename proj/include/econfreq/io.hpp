/**
 * @brief Scenario file (JSON, format_version 1) and CSV trace formats.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "econfreq/dispatch.hpp"
#include "econfreq/dynamics.hpp"
#include "econfreq/experiments.hpp"
#include "econfreq/model.hpp"

namespace econfreq {

inline constexpr int kScenarioFormatVersion = 1;

struct SolverBlock {
    std::optional<double> alpha;
    std::optional<double> rho;
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    std::optional<double> lambda0;

    friend bool operator==(const SolverBlock&, const SolverBlock&) = default;
};

struct SimulationBlock {
    std::optional<ControllerKind> controller;
    std::optional<double> h;
    std::optional<double> t_end;
    std::optional<double> settling_eps;
    std::optional<Integrator> integrator;
    std::optional<FrequencyModel> model;  ///< absent means QuasiStatic with the scenario's beta
    std::vector<LoadEvent> events;

    friend bool operator==(const SimulationBlock&, const SimulationBlock&) = default;
};

struct ScenarioFile {
    int format_version = kScenarioFormatVersion;
    Scenario scenario;
    std::optional<SolverBlock> solver;
    std::optional<SimulationBlock> simulation;

    friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

struct FileIssue {
    std::string path;
    std::string message;
};

/// Raised by parse_scenario_file; every issue names the offending field path.
class ScenarioFileError : public std::runtime_error {
public:
    explicit ScenarioFileError(std::vector<FileIssue> issues)
        : std::runtime_error(render(issues)), issues_(std::move(issues)) {}

    const std::vector<FileIssue>& issues() const { return issues_; }

private:
    static std::string render(const std::vector<FileIssue>& issues) {
        std::string out;
        for (const auto& i : issues) {
            if (!out.empty()) out += "\n";
            out += i.path + ": " + i.message;
        }
        return out;
    }
    std::vector<FileIssue> issues_;
};

namespace detail {

using nlohmann::json;

class Reader {
public:
    std::vector<FileIssue> issues;

    void fail(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }

    bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        const std::set<std::string_view> keys(allowed);
        for (const auto& [key, _] : j.items())
            if (!keys.contains(key)) fail(join(path, key), "unknown key");
        return true;
    }

    std::optional<double> number(const json& obj, const std::string& path, const char* key, bool required) {
        const auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(join(path, key), "missing required number");
            return std::nullopt;
        }
        if (!it->is_number()) {
            fail(join(path, key), "expected a number");
            return std::nullopt;
        }
        return it->get<double>();
    }

    std::optional<std::string> string(const json& obj, const std::string& path, const char* key, bool required) {
        const auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(join(path, key), "missing required string");
            return std::nullopt;
        }
        if (!it->is_string()) {
            fail(join(path, key), "expected a string");
            return std::nullopt;
        }
        return it->get<std::string>();
    }

    std::vector<double> numbers(const json& obj, const std::string& path, const char* key) {
        std::vector<double> out;
        const auto it = obj.find(key);
        if (it == obj.end()) {
            fail(join(path, key), "missing required array");
            return out;
        }
        if (!it->is_array()) {
            fail(join(path, key), "expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& v = (*it)[i];
            if (!v.is_number()) fail(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
            else out.push_back(v.get<double>());
        }
        return out;
    }

    static std::string join(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : path + "." + std::string(key);
    }
};

inline void positive(Reader& rd, const std::optional<double>& v, const std::string& path) {
    if (v && !(*v > 0.0)) rd.fail(path, "must be > 0");
}

inline Scenario read_scenario(Reader& rd, const json& j) {
    Scenario s;
    const std::string path = "scenario";
    if (!rd.object(j, path, {"generators", "loads", "gain_K", "beta", "tau"})) return s;

    const auto gens = j.find("generators");
    if (gens == j.end()) rd.fail(path + ".generators", "missing required array");
    else if (!gens->is_array()) rd.fail(path + ".generators", "expected an array of generator objects");
    else {
        for (std::size_t i = 0; i < gens->size(); ++i) {
            const auto& g = (*gens)[i];
            const std::string gp = path + ".generators[" + std::to_string(i) + "]";
            if (!rd.object(g, gp, {"id", "a", "b", "c", "p_init"})) continue;
            Generator gen;
            gen.id = rd.string(g, gp, "id", true).value_or("");
            gen.cost.a = rd.number(g, gp, "a", true).value_or(1.0);
            gen.cost.b = rd.number(g, gp, "b", true).value_or(0.0);
            gen.cost.c = rd.number(g, gp, "c", false).value_or(0.0);
            gen.p_init = rd.number(g, gp, "p_init", true).value_or(0.0);
            s.generators.push_back(std::move(gen));
        }
    }
    s.loads = rd.numbers(j, path, "loads");
    s.gain_K = rd.number(j, path, "gain_K", true).value_or(1.0);
    s.beta = rd.number(j, path, "beta", true).value_or(1.0);
    s.tau = rd.number(j, path, "tau", true).value_or(1.0);
    return s;
}

inline SolverBlock read_solver(Reader& rd, const json& j) {
    SolverBlock b;
    const std::string path = "solver";
    if (!rd.object(j, path, {"alpha", "rho", "tol", "max_iter", "lambda0"})) return b;
    b.alpha = rd.number(j, path, "alpha", false);
    b.rho = rd.number(j, path, "rho", false);
    b.tol = rd.number(j, path, "tol", false);
    b.lambda0 = rd.number(j, path, "lambda0", false);
    positive(rd, b.alpha, path + ".alpha");
    positive(rd, b.rho, path + ".rho");
    positive(rd, b.tol, path + ".tol");
    if (const auto it = j.find("max_iter"); it != j.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1) rd.fail(path + ".max_iter", "expected an integer >= 1");
        else b.max_iter = it->get<std::size_t>();
    }
    return b;
}

inline std::optional<ControllerKind> parse_controller(std::string_view v) {
    if (v == "integral") return ControllerKind::Integral;
    if (v == "pi") return ControllerKind::ProportionalIntegral;
    return std::nullopt;
}

inline std::optional<Integrator> parse_integrator(std::string_view v) {
    if (v == "euler") return Integrator::Euler;
    if (v == "rk4") return Integrator::RK4;
    return std::nullopt;
}

inline SimulationBlock read_simulation(Reader& rd, const json& j) {
    SimulationBlock b;
    const std::string path = "simulation";
    if (!rd.object(j, path, {"controller", "h", "t_end", "settling_eps", "integrator", "model", "events"})) return b;

    if (auto c = rd.string(j, path, "controller", false)) {
        b.controller = parse_controller(*c);
        if (!b.controller) rd.fail(path + ".controller", "expected \"integral\" or \"pi\"");
    }
    if (auto c = rd.string(j, path, "integrator", false)) {
        b.integrator = parse_integrator(*c);
        if (!b.integrator) rd.fail(path + ".integrator", "expected \"euler\" or \"rk4\"");
    }
    b.h = rd.number(j, path, "h", false);
    b.t_end = rd.number(j, path, "t_end", false);
    b.settling_eps = rd.number(j, path, "settling_eps", false);
    positive(rd, b.h, path + ".h");
    positive(rd, b.t_end, path + ".t_end");
    positive(rd, b.settling_eps, path + ".settling_eps");
    if (b.h && b.t_end && *b.h > 0.0 && !(*b.t_end > *b.h)) rd.fail(path + ".t_end", "must be > h");

    if (const auto m = j.find("model"); m != j.end()) {
        const std::string mp = path + ".model";
        if (rd.object(*m, mp, {"kind", "beta", "m_inertia", "d_damp"})) {
            const auto kind = rd.string(*m, mp, "kind", true);
            if (kind == "quasi_static") {
                if (m->contains("m_inertia") || m->contains("d_damp"))
                    rd.fail(mp, "m_inertia/d_damp only apply to kind \"inertial\"");
                const auto beta = rd.number(*m, mp, "beta", true);
                positive(rd, beta, mp + ".beta");
                if (beta) b.model = FrequencyModel::quasi_static(*beta);
            } else if (kind == "inertial") {
                if (m->contains("beta")) rd.fail(mp + ".beta", "beta only applies to kind \"quasi_static\"");
                const auto mi = rd.number(*m, mp, "m_inertia", true);
                const auto dd = rd.number(*m, mp, "d_damp", true);
                positive(rd, mi, mp + ".m_inertia");
                if (dd && !(*dd >= 0.0)) rd.fail(mp + ".d_damp", "must be >= 0");
                if (mi && dd) b.model = FrequencyModel::inertial(*mi, *dd);
            } else if (kind) {
                rd.fail(mp + ".kind", "expected \"quasi_static\" or \"inertial\"");
            }
        }
    }

    if (const auto ev = j.find("events"); ev != j.end()) {
        if (!ev->is_array()) rd.fail(path + ".events", "expected an array");
        else {
            for (std::size_t i = 0; i < ev->size(); ++i) {
                const std::string ep = path + ".events[" + std::to_string(i) + "]";
                if (!rd.object((*ev)[i], ep, {"time", "loads"})) continue;
                LoadEvent e;
                const auto t = rd.number((*ev)[i], ep, "time", true);
                e.time = t.value_or(0.0);
                if (t && *t < 0.0) rd.fail(ep + ".time", "must be >= 0");
                e.loads = rd.numbers((*ev)[i], ep, "loads");
                if (e.loads.empty()) rd.fail(ep + ".loads", "must be non-empty");
                if (!b.events.empty() && e.time < b.events.back().time)
                    rd.fail(ep + ".time", "events must be sorted by time");
                b.events.push_back(std::move(e));
            }
        }
    }
    return b;
}

inline std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Strict parse: syntax, unknown keys, types and every scenario invariant.
inline ScenarioFile parse_scenario_file(std::string_view text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ScenarioFileError({{detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1), e.what()}});
    }

    detail::Reader rd;
    ScenarioFile file;
    if (!rd.object(root, "", {"format_version", "scenario", "solver", "simulation"})) throw ScenarioFileError(rd.issues);

    const auto ver = root.find("format_version");
    if (ver == root.end()) rd.fail("format_version", "missing required integer");
    else if (!ver->is_number_integer()) rd.fail("format_version", "expected an integer");
    else if (ver->get<long long>() != kScenarioFormatVersion)
        throw ScenarioFileError({{"format_version", "unsupported format version " + std::to_string(ver->get<long long>()) +
                                                        " (supported: 1)"}});

    if (const auto sc = root.find("scenario"); sc == root.end()) rd.fail("scenario", "missing required object");
    else file.scenario = detail::read_scenario(rd, *sc);
    if (const auto sv = root.find("solver"); sv != root.end()) file.solver = detail::read_solver(rd, *sv);
    if (const auto sm = root.find("simulation"); sm != root.end()) file.simulation = detail::read_simulation(rd, *sm);

    if (rd.issues.empty())
        for (const auto& v : validate_scenario(file.scenario)) rd.fail("scenario." + v.field, v.message);
    if (!rd.issues.empty()) throw ScenarioFileError(rd.issues);
    return file;
}

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& g : s.generators)
        gens.push_back({{"id", g.id}, {"a", g.cost.a}, {"b", g.cost.b}, {"c", g.cost.c}, {"p_init", g.p_init}});
    return {{"generators", gens}, {"loads", s.loads}, {"gain_K", s.gain_K}, {"beta", s.beta}, {"tau", s.tau}};
}

inline nlohmann::json to_json(const ScenarioFile& f) {
    nlohmann::json j{{"format_version", f.format_version}, {"scenario", to_json(f.scenario)}};
    if (f.solver) {
        nlohmann::json b = nlohmann::json::object();
        if (f.solver->alpha) b["alpha"] = *f.solver->alpha;
        if (f.solver->rho) b["rho"] = *f.solver->rho;
        if (f.solver->tol) b["tol"] = *f.solver->tol;
        if (f.solver->max_iter) b["max_iter"] = *f.solver->max_iter;
        if (f.solver->lambda0) b["lambda0"] = *f.solver->lambda0;
        j["solver"] = b;
    }
    if (f.simulation) {
        const auto& sim = *f.simulation;
        nlohmann::json b = nlohmann::json::object();
        if (sim.controller) b["controller"] = *sim.controller == ControllerKind::Integral ? "integral" : "pi";
        if (sim.h) b["h"] = *sim.h;
        if (sim.t_end) b["t_end"] = *sim.t_end;
        if (sim.settling_eps) b["settling_eps"] = *sim.settling_eps;
        if (sim.integrator) b["integrator"] = std::string(to_string(*sim.integrator));
        if (sim.model) {
            if (sim.model->is_quasi_static()) b["model"] = {{"kind", "quasi_static"}, {"beta", sim.model->beta}};
            else
                b["model"] = {{"kind", "inertial"}, {"m_inertia", sim.model->m_inertia}, {"d_damp", sim.model->d_damp}};
        }
        if (!sim.events.empty()) {
            nlohmann::json ev = nlohmann::json::array();
            for (const auto& e : sim.events) ev.push_back({{"time", e.time}, {"loads", e.loads}});
            b["events"] = ev;
        }
        j["simulation"] = b;
    }
    return j;
}

/// Shortest form is not used: traces always carry 17 significant digits.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace detail {

inline void check_sink(std::ostream& out) {
    if (!out) throw std::runtime_error("failed writing CSV trace");
}

}  // namespace detail

/// Columns: k, lambda, p_1..p_N, imbalance, delta_f.
inline void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
    const std::size_t n = trace.states.empty() ? 0 : trace.states.front().p.size();
    out << "k,lambda";
    for (std::size_t i = 1; i <= n; ++i) out << ",p_" << i;
    out << ",imbalance,delta_f\n";
    for (const auto& st : trace.states) {
        out << st.k << ',' << format_number(st.lambda);
        for (double p : st.p) out << ',' << format_number(p);
        out << ',' << format_number(st.imbalance) << ',' << format_number(st.delta_f) << '\n';
    }
    out.flush();
    detail::check_sink(out);
}

/// Columns: t, p_1..p_N, delta_f, marginal_cost_1..N.
inline void write_trace_csv(const SimulationTrace& trace, const Scenario& s, std::ostream& out) {
    const std::size_t n = s.size();
    out << 't';
    for (std::size_t i = 1; i <= n; ++i) out << ",p_" << i;
    out << ",delta_f";
    for (std::size_t i = 1; i <= n; ++i) out << ",marginal_cost_" << i;
    out << '\n';
    for (const auto& st : trace.samples) {
        out << format_number(st.t);
        for (double p : st.p) out << ',' << format_number(p);
        out << ',' << format_number(st.delta_f);
        for (std::size_t i = 0; i < n; ++i) out << ',' << format_number(marginal_cost(s.generators[i].cost, st.p[i]));
        out << '\n';
    }
    out.flush();
    detail::check_sink(out);
}

/// Columns: param, value, then per-method outcome and both settling times.
inline void write_sweep_csv(SweepParameter param, const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "param,value,dual_stop,dual_iterations,dual_empirical_ratio,dual_predicted_ratio,"
           "mom_stop,mom_iterations,mom_empirical_ratio,mom_predicted_ratio,integral_settling,pi_settling,error\n";
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& row : rows) {
        out << to_string(param) << ',' << format_number(row.value);
        if (row.report) {
            const auto& r = *row.report;
            out << ',' << to_string(r.dual.stop_reason) << ',' << r.dual.iterations << ',' << opt(r.dual.empirical_ratio)
                << ',' << format_number(r.dual.predicted_ratio) << ',' << to_string(r.mom.stop_reason) << ','
                << r.mom.iterations << ',' << opt(r.mom.empirical_ratio) << ',' << format_number(r.mom.predicted_ratio)
                << ',' << format_number(r.integral_settling) << ',' << format_number(r.pi_settling) << ',';
        } else {
            out << ",,,,,,,,,,,";
        }
        out << '"' << row.error << "\"\n";
    }
    out.flush();
    detail::check_sink(out);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads an all-numeric CSV written by write_trace_csv.
inline CsvTable read_csv_table(std::istream& in) {
    CsvTable table;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    if (!std::getline(in, line)) return table;
    table.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line)) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                throw std::runtime_error("read_csv_table: not a number: '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != table.header.size()) throw std::runtime_error("read_csv_table: ragged row");
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace econfreq

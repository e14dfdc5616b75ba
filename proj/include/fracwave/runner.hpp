#pragma once

// Experiment configuration (JSON) and orchestration of the CLI commands.

#include "fracwave/analysis.hpp"
#include "fracwave/coefficients.hpp"
#include "fracwave/expression.hpp"
#include "fracwave/problems.hpp"
#include "fracwave/scheme.hpp"
#include "fracwave/soe_kernel.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { solve, temporal_study, spatial_study, compare_backends, coeff_check, soe_check };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::temporal_study: return "temporal-study";
        case Command::spatial_study: return "spatial-study";
        case Command::compare_backends: return "compare-backends";
        case Command::coeff_check: return "coeff-check";
        case Command::soe_check: return "soe-check";
    }
    return "solve";
}

inline Command parse_command(const std::string& s) {
    for (Command c : {Command::solve, Command::temporal_study, Command::spatial_study, Command::compare_backends,
                      Command::coeff_check, Command::soe_check})
        if (s == to_string(c)) return c;
    throw ConfigError("command: unknown command '" + s + "'");
}

/// Per-order SOE tolerance rule.
struct EpsRule {
    enum class Kind { table1, tau4, fixed } kind = Kind::table1;
    double value = 0.0;  // for fixed

    [[nodiscard]] std::vector<double> eps(const MultiTermOrders& orders, double tau) const {
        switch (kind) {
            case Kind::table1: return eps_tau_power(orders, tau, 1e-3);
            case Kind::tau4: return eps_tau_power(orders, tau, 1.0);
            case Kind::fixed: return std::vector<double>(orders.size(), value);
        }
        return {};
    }

    [[nodiscard]] std::string str() const {
        switch (kind) {
            case Kind::table1: return "table1";
            case Kind::tau4: return "tau4";
            case Kind::fixed: {
                std::ostringstream os;
                os << "fixed:" << value;
                return os.str();
            }
        }
        return "table1";
    }
};

inline EpsRule parse_eps_rule(const std::string& s) {
    EpsRule r;
    if (s == "table1") return r;
    if (s == "tau4") {
        r.kind = EpsRule::Kind::tau4;
        return r;
    }
    if (s.rfind("fixed:", 0) == 0) {
        r.kind = EpsRule::Kind::fixed;
        const std::string v = s.substr(6);
        std::size_t used = 0;
        try {
            r.value = std::stod(v, &used);
        } catch (const std::exception&) {
            throw ConfigError("eps_rule: cannot parse tolerance in '" + s + "'");
        }
        if (used != v.size() || !(r.value > 0.0)) throw ConfigError("eps_rule: tolerance must be a positive number");
        return r;
    }
    throw ConfigError("eps_rule: expected \"table1\", \"tau4\" or \"fixed:<value>\", got '" + s + "'");
}

struct CustomProblem {
    std::string f = "0";
    std::string p = "0";
    std::string phi = "0";
    std::string psi = "0";
    std::string exact;   // optional
    std::string phi_xx;  // optional
    std::string psi_xx;  // optional
};

enum class BackendChoice { fast, direct, both };

struct ExperimentConfig {
    Command command = Command::solve;
    std::string problem = "case1";  // case1 | case2 | case3 | custom
    CustomProblem custom;
    MultiTermOrders orders;
    double x_left = 0.0;
    double x_right = 1.0;
    double t_final = 1.0;
    std::vector<int> M;   // single value or ladder
    std::vector<long> N;  // single value or ladder
    EpsRule eps_rule;
    BackendChoice backend = BackendChoice::fast;
    bool strict_validation = false;
    ErrorNorm error_norm = ErrorNorm::h1;
    ManufacturedOptions manufactured;
    bool shared_soe = true;  // compare-backends: one SOE per order for the whole N ladder
    int repetitions = 1;     // compare-backends: best-of wall time
    bool csv_timing = true;
    std::string output;
    std::vector<std::string> notes;  // messages produced while parsing
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field + ": expected a number");
    return j.get<double>();
}

inline long get_positive_int(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long>() < 1) throw ConfigError(field + ": expected a positive integer");
    return j.get<long>();
}

inline std::string get_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field + ": expected a string");
    return j.get<std::string>();
}

inline bool get_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) throw ConfigError(field + ": expected true or false");
    return j.get<bool>();
}

/// M value or alias. "paper-h-proxy" stands for h = pi/1000 and
/// "paper-h-proxy-coarse" for h = pi/50 on the unit interval.
inline int parse_m(const json& j, const std::string& field, std::vector<std::string>& notes) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "paper-h-proxy") {
            notes.push_back(field + ": paper-h-proxy -> M = 1000 (h = pi/1000 does not divide (0,1))");
            return 1000;
        }
        if (s == "paper-h-proxy-coarse") {
            notes.push_back(field + ": paper-h-proxy-coarse -> M = 16 (h = pi/50 does not divide (0,1))");
            return 16;
        }
        throw ConfigError(field + ": unknown alias '" + s + "'");
    }
    const long m = get_positive_int(j, field);
    if (m < 2) throw ConfigError(field + ": M must be >= 2");
    return static_cast<int>(m);
}

template <class T>
void check_doubling(const std::vector<T>& v, const std::string& field) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] != 2 * v[k - 1]) throw ConfigError(field + ": ladder entries must double successively");
}

}  // namespace detail

/// Strict parse; unknown keys and malformed values are rejected with the field name.
/// A requested command (from the command line) must agree with the file, if the file names one.
inline ExperimentConfig parse_config(const std::string& text, std::optional<Command> requested = std::nullopt) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
    detail::reject_unknown(doc,
                           {"command", "problem", "custom", "orders", "domain", "t_final", "grid", "eps_rule",
                            "backend", "strict_validation", "error_norm", "forcing", "nonlinear_sign", "shared_soe",
                            "repetitions", "csv_timing", "output"},
                           "config");
    ExperimentConfig cfg;
    if (doc.contains("command")) cfg.command = parse_command(detail::get_string(doc["command"], "command"));
    if (requested) {
        if (doc.contains("command") && cfg.command != *requested)
            throw ConfigError(std::string("command: config says '") + to_string(cfg.command) + "' but '" +
                              to_string(*requested) + "' was requested");
        cfg.command = *requested;
    }

    if (doc.contains("problem")) {
        cfg.problem = detail::get_string(doc["problem"], "problem");
        if (cfg.problem != "case1" && cfg.problem != "case2" && cfg.problem != "case3" && cfg.problem != "custom")
            throw ConfigError("problem: expected case1, case2, case3 or custom");
    }
    if (doc.contains("custom")) {
        const auto& c = doc["custom"];
        if (!c.is_object()) throw ConfigError("custom: expected an object");
        detail::reject_unknown(c, {"f", "p", "phi", "psi", "exact", "phi_xx", "psi_xx"}, "custom");
        auto take = [&](const char* key, std::string& dst) {
            if (c.contains(key)) dst = detail::get_string(c[key], std::string("custom.") + key);
        };
        take("f", cfg.custom.f);
        take("p", cfg.custom.p);
        take("phi", cfg.custom.phi);
        take("psi", cfg.custom.psi);
        take("exact", cfg.custom.exact);
        take("phi_xx", cfg.custom.phi_xx);
        take("psi_xx", cfg.custom.psi_xx);
        if (cfg.problem != "custom") throw ConfigError("custom: only valid with problem = \"custom\"");
    }

    if (!doc.contains("orders")) throw ConfigError("orders: required");
    {
        const auto& o = doc["orders"];
        if (!o.is_array() || o.empty()) throw ConfigError("orders: expected a non-empty array");
        std::vector<FractionalTerm> terms;
        for (std::size_t r = 0; r < o.size(); ++r) {
            const std::string field = "orders[" + std::to_string(r) + "]";
            const auto& t = o[r];
            if (!t.is_object()) throw ConfigError(field + ": expected {\"alpha\": .., \"lambda\": ..}");
            detail::reject_unknown(t, {"alpha", "lambda"}, field);
            if (!t.contains("alpha") || !t.contains("lambda"))
                throw ConfigError(field + ": alpha and lambda are required");
            terms.push_back({detail::get_number(t["alpha"], field + ".alpha"),
                             detail::get_number(t["lambda"], field + ".lambda")});
        }
        try {
            cfg.orders = MultiTermOrders(terms);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    if (doc.contains("domain")) {
        const auto& d = doc["domain"];
        if (!d.is_array() || d.size() != 2) throw ConfigError("domain: expected [x_left, x_right]");
        cfg.x_left = detail::get_number(d[0], "domain[0]");
        cfg.x_right = detail::get_number(d[1], "domain[1]");
        if (!(cfg.x_right > cfg.x_left)) throw ConfigError("domain: need x_left < x_right");
    }
    if (doc.contains("t_final")) {
        cfg.t_final = detail::get_number(doc["t_final"], "t_final");
        if (!(cfg.t_final > 0.0)) throw ConfigError("t_final: must be positive");
    }

    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (!g.is_object()) throw ConfigError("grid: expected an object");
        detail::reject_unknown(g, {"M", "N", "M_ladder", "N_ladder"}, "grid");
        if (g.contains("M") && g.contains("M_ladder")) throw ConfigError("grid: give M or M_ladder, not both");
        if (g.contains("N") && g.contains("N_ladder")) throw ConfigError("grid: give N or N_ladder, not both");
        if (g.contains("M")) cfg.M.push_back(detail::parse_m(g["M"], "grid.M", cfg.notes));
        if (g.contains("N")) cfg.N.push_back(detail::get_positive_int(g["N"], "grid.N"));
        if (g.contains("M_ladder")) {
            if (!g["M_ladder"].is_array() || g["M_ladder"].empty())
                throw ConfigError("grid.M_ladder: expected a non-empty array");
            for (std::size_t k = 0; k < g["M_ladder"].size(); ++k)
                cfg.M.push_back(detail::parse_m(g["M_ladder"][k], "grid.M_ladder[" + std::to_string(k) + "]",
                                                cfg.notes));
            detail::check_doubling(cfg.M, "grid.M_ladder");
        }
        if (g.contains("N_ladder")) {
            if (!g["N_ladder"].is_array() || g["N_ladder"].empty())
                throw ConfigError("grid.N_ladder: expected a non-empty array");
            for (std::size_t k = 0; k < g["N_ladder"].size(); ++k)
                cfg.N.push_back(
                    detail::get_positive_int(g["N_ladder"][k], "grid.N_ladder[" + std::to_string(k) + "]"));
        }
    }
    if (cfg.M.empty()) cfg.M.push_back(100);
    if (cfg.N.empty()) cfg.N.push_back(100);

    if (doc.contains("eps_rule")) cfg.eps_rule = parse_eps_rule(detail::get_string(doc["eps_rule"], "eps_rule"));
    if (doc.contains("backend")) {
        const auto b = detail::get_string(doc["backend"], "backend");
        if (b == "fast") {
            cfg.backend = BackendChoice::fast;
        } else if (b == "direct") {
            cfg.backend = BackendChoice::direct;
        } else if (b == "both") {
            cfg.backend = BackendChoice::both;
        } else {
            throw ConfigError("backend: expected fast, direct or both");
        }
    }
    if (doc.contains("strict_validation"))
        cfg.strict_validation = detail::get_bool(doc["strict_validation"], "strict_validation");
    if (doc.contains("error_norm")) {
        try {
            cfg.error_norm = parse_error_norm(detail::get_string(doc["error_norm"], "error_norm"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("error_norm: ") + e.what());
        }
    }
    if (doc.contains("forcing")) {
        const auto f = detail::get_string(doc["forcing"], "forcing");
        if (f == "caputo-identity") {
            cfg.manufactured.forcing = ForcingVariant::caputo_identity;
        } else if (f == "printed") {
            cfg.manufactured.forcing = ForcingVariant::printed;
        } else {
            throw ConfigError("forcing: expected caputo-identity or printed");
        }
    }
    if (doc.contains("nonlinear_sign")) {
        const auto s = detail::get_string(doc["nonlinear_sign"], "nonlinear_sign");
        if (s == "table") {
            cfg.manufactured.sign = NonlinearSign::table;
        } else if (s == "equation") {
            cfg.manufactured.sign = NonlinearSign::equation;
        } else {
            throw ConfigError("nonlinear_sign: expected table or equation");
        }
    }
    if (doc.contains("shared_soe")) cfg.shared_soe = detail::get_bool(doc["shared_soe"], "shared_soe");
    if (doc.contains("repetitions"))
        cfg.repetitions = static_cast<int>(detail::get_positive_int(doc["repetitions"], "repetitions"));
    if (doc.contains("csv_timing")) cfg.csv_timing = detail::get_bool(doc["csv_timing"], "csv_timing");
    if (doc.contains("output")) cfg.output = detail::get_string(doc["output"], "output");

    switch (cfg.command) {
        case Command::temporal_study:
        case Command::compare_backends:
            detail::check_doubling(cfg.N, "grid.N_ladder");
            if (cfg.M.size() != 1) throw ConfigError("grid: " + std::string(to_string(cfg.command)) + " needs one M");
            break;
        case Command::spatial_study:
            if (cfg.N.size() != 1) throw ConfigError("grid: spatial-study needs one N");
            break;
        case Command::solve:
            if (cfg.M.size() != 1 || cfg.N.size() != 1) throw ConfigError("grid: solve needs one M and one N");
            break;
        default: break;
    }
    if (cfg.command == Command::compare_backends && cfg.N.size() < 3)
        throw ConfigError("grid.N_ladder: compare-backends needs at least three entries");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path, std::optional<Command> requested = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), requested);
}

/// Problem selected by the config.
inline ProblemSpec make_problem(const ExperimentConfig& cfg) {
    ProblemSpec p;
    if (cfg.problem == "custom") {
        const auto& c = cfg.custom;
        Expression f, src, phi, psi, exact, phi_xx, psi_xx;
        try {
            f = Expression(c.f);
            src = Expression(c.p);
            phi = Expression(c.phi);
            psi = Expression(c.psi);
            if (!c.exact.empty()) exact = Expression(c.exact);
            if (!c.phi_xx.empty()) phi_xx = Expression(c.phi_xx);
            if (!c.psi_xx.empty()) psi_xx = Expression(c.psi_xx);
        } catch (const ExpressionError& e) {
            throw ConfigError(std::string("custom: ") + e.what());
        }
        p.name = "custom";
        p.orders = cfg.orders;
        p.f = [f](double u) { return f({0.0, 0.0, u}); };
        p.p = [src](double x, double t) { return src({x, t, 0.0}); };
        p.phi = [phi](double x) { return phi({x, 0.0, 0.0}); };
        p.psi = [psi](double x) { return psi({x, 0.0, 0.0}); };
        if (!c.exact.empty()) p.exact = [exact](double x, double t) { return exact({x, t, 0.0}); };
        if (!c.phi_xx.empty()) p.phi_xx = [phi_xx](double x) { return phi_xx({x, 0.0, 0.0}); };
        if (!c.psi_xx.empty()) p.psi_xx = [psi_xx](double x) { return psi_xx({x, 0.0, 0.0}); };
    } else {
        p = manufactured_problem(cfg.orders, cfg.problem.back() - '0', cfg.manufactured);
    }
    p.x_left = cfg.x_left;
    p.x_right = cfg.x_right;
    p.t_final = cfg.t_final;
    return p;
}

inline std::vector<Backend> backends(BackendChoice c) {
    switch (c) {
        case BackendChoice::fast: return {Backend::fast};
        case BackendChoice::direct: return {Backend::direct};
        case BackendChoice::both: return {Backend::fast, Backend::direct};
    }
    return {Backend::fast};
}

struct RunOptions {
    std::string out_dir;  // empty: no files
    bool strict = false;  // overrides config strict_validation when true
};

/// Exit codes of run_config.
enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_validation = 2 };

namespace detail {

inline Discretization make_disc(const ExperimentConfig& cfg, bool strict, int M, long N, Backend b) {
    Discretization d;
    d.M = M;
    d.N = N;
    d.backend = b;
    d.validation = strict ? Validation::strict : Validation::warn;
    if (b == Backend::fast) d.eps = cfg.eps_rule.eps(cfg.orders, cfg.t_final / static_cast<double>(N));
    return d;
}

inline void emit_warnings(std::ostream& log, const RunResult& r, const std::string& tag) {
    for (const auto& w : r.warnings) log << "warning [" << tag << "]: " << w << '\n';
    if (r.validation_failures > 5)
        log << "warning [" << tag << "]: " << r.validation_failures << " coefficient check failures in total\n";
}

class Outputs {
public:
    Outputs(std::string dir, std::ostream& log) : dir_(std::move(dir)), log_(log) {
        if (!dir_.empty()) std::filesystem::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        if (dir_.empty()) return;
        const auto path = std::filesystem::path(dir_) / name;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        log_ << "wrote " << path.string() << '\n';
    }

private:
    std::string dir_;
    std::ostream& log_;
};

inline std::string tag(const ExperimentConfig& cfg, int M, long N, Backend b) {
    return cfg.problem + " M=" + std::to_string(M) + " N=" + std::to_string(N) + " " + to_string(b);
}

}  // namespace detail

/// Convergence study along the N ladder (temporal) or M ladder (spatial).
inline std::vector<ConvergenceReport> run_study(const ExperimentConfig& cfg, Direction dir, bool strict,
                                                std::ostream& log, long* validation_failures = nullptr) {
    const auto problem = make_problem(cfg);
    if (!problem.has_exact()) throw ConfigError("problem: convergence studies need an exact solution");
    std::vector<ConvergenceReport> out;
    for (Backend b : backends(cfg.backend)) {
        ConvergenceReport rep;
        rep.direction = dir;
        rep.case_name = cfg.problem;
        rep.orders = cfg.orders;
        rep.eps_rule = b == Backend::fast ? cfg.eps_rule.str() : "";
        rep.norm = cfg.error_norm;
        const std::size_t count = dir == Direction::temporal ? cfg.N.size() : cfg.M.size();
        for (std::size_t k = 0; k < count; ++k) {
            const int M = dir == Direction::temporal ? cfg.M.front() : cfg.M[k];
            const long N = dir == Direction::temporal ? cfg.N[k] : cfg.N.front();
            const auto res = run_solver(problem, detail::make_disc(cfg, strict, M, N, b));
            detail::emit_warnings(log, res, detail::tag(cfg, M, N, b));
            if (validation_failures) *validation_failures += res.validation_failures;
            LadderEntry e;
            e.tau = res.tau;
            e.h = res.h;
            e.e1 = select_error(res, cfg.error_norm);
            e.backend = to_string(b);
            e.n_exp_total = res.counters.n_exp_total;
            e.stored_reals = res.counters.stored_reals;
            e.wall_ms = res.counters.wall_ms;
            rep.entries.push_back(e);
        }
        rep.compute_rates();
        out.push_back(std::move(rep));
    }
    return out;
}

namespace detail {

inline int run_config_impl(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    const bool strict = opt.strict || cfg.strict_validation;
    detail::Outputs files(opt.out_dir.empty() ? cfg.output : opt.out_dir, log);
    for (const auto& n : cfg.notes) log << "note: " << n << '\n';
    const std::string stem = to_string(cfg.command);
    std::ostringstream csv, text;

    switch (cfg.command) {
        case Command::solve: {
            const auto problem = make_problem(cfg);
            write_csv_header(csv);
            for (Backend b : backends(cfg.backend)) {
                const int M = cfg.M.front();
                const long N = cfg.N.front();
                const auto res = run_solver(problem, detail::make_disc(cfg, strict, M, N, b));
                detail::emit_warnings(log, res, detail::tag(cfg, M, N, b));
                ConvergenceReport rep;
                rep.case_name = cfg.problem;
                rep.orders = cfg.orders;
                rep.norm = cfg.error_norm;
                LadderEntry e;
                e.tau = res.tau;
                e.h = res.h;
                e.e1 = problem.has_exact() ? select_error(res, cfg.error_norm)
                                           : std::numeric_limits<double>::quiet_NaN();
                e.backend = to_string(b);
                e.n_exp_total = res.counters.n_exp_total;
                e.stored_reals = res.counters.stored_reals;
                e.wall_ms = res.counters.wall_ms;
                rep.entries.push_back(e);
                write_csv_rows(csv, rep, cfg.csv_timing);
                text << "solve " << detail::tag(cfg, M, N, b) << ": sigma=" << res.sigma << " tau=" << sci5(res.tau)
                     << " h=" << sci5(res.h);
                if (problem.has_exact()) text << " E1(" << to_string(cfg.error_norm) << ")=" << sci5(e.e1);
                text << " n_exp=" << res.counters.n_exp_total << " stored_reals=" << res.counters.stored_reals
                     << " wall_ms=" << sci5(res.counters.wall_ms) << '\n';
                std::ostringstream sol;
                sol << "x,u\n";
                const Grid1D g(problem.x_left, problem.x_right, M);
                for (int i = 0; i <= M; ++i) sol << sci5(g.x(i)) << ',' << sci5(res.u_final[i]) << '\n';
                files.write(std::string("solution_") + to_string(b) + ".csv", sol.str());
                if (res.validation_failures > 0) text << "coefficient check failures: " << res.validation_failures << '\n';
            }
            break;
        }
        case Command::temporal_study:
        case Command::spatial_study: {
            const auto dir = cfg.command == Command::temporal_study ? Direction::temporal : Direction::spatial;
            long failures = 0;
            const auto reps = run_study(cfg, dir, strict, log, &failures);
            write_csv_header(csv);
            for (const auto& r : reps) {
                write_csv_rows(csv, r, cfg.csv_timing);
                write_text_table(text, r);
            }
            if (failures > 0) text << "coefficient check failures: " << failures << '\n';
            break;
        }
        case Command::compare_backends: {
            const auto problem = make_problem(cfg);
            const int M = cfg.M.front();
            const long n_max = *std::max_element(cfg.N.begin(), cfg.N.end());
            double shared_tau_hat = 0.0;
            std::vector<double> shared_eps;
            if (cfg.shared_soe) {
                const double tau_min = cfg.t_final / static_cast<double>(n_max);
                shared_tau_hat = solve_sigma(cfg.orders, tau_min).sigma * tau_min;
                shared_eps = cfg.eps_rule.eps(cfg.orders, tau_min);
            }
            write_csv_header(csv);
            std::vector<ScalingPoint> pts;
            for (long N : cfg.N) {
                for (Backend b : {Backend::fast, Backend::direct}) {
                    auto disc = detail::make_disc(cfg, strict, M, N, b);
                    if (b == Backend::fast && cfg.shared_soe) {
                        disc.eps = shared_eps;
                        disc.soe_tau_hat = shared_tau_hat;
                    }
                    RunResult best;
                    for (int rep = 0; rep < cfg.repetitions; ++rep) {
                        auto res = run_solver(problem, disc);
                        if (rep == 0 || res.counters.wall_ms < best.counters.wall_ms) best = std::move(res);
                    }
                    detail::emit_warnings(log, best, detail::tag(cfg, M, N, b));
                    ScalingPoint p{N, b, best.counters.wall_ms, best.counters.stored_reals, best.counters.flops,
                                   best.counters.n_exp_total};
                    pts.push_back(p);
                    ConvergenceReport rep;
                    rep.direction = Direction::temporal;
                    rep.case_name = cfg.problem;
                    rep.orders = cfg.orders;
                    LadderEntry e;
                    e.tau = best.tau;
                    e.h = best.h;
                    e.e1 = problem.has_exact() ? select_error(best, cfg.error_norm)
                                               : std::numeric_limits<double>::quiet_NaN();
                    e.backend = to_string(b);
                    e.n_exp_total = best.counters.n_exp_total;
                    e.stored_reals = best.counters.stored_reals;
                    e.wall_ms = best.counters.wall_ms;
                    rep.entries.push_back(e);
                    write_csv_rows(csv, rep, cfg.csv_timing);
                }
            }
            const auto sr = scaling_report(pts);
            text << "compare-backends " << cfg.problem << " alpha=(" << join_alphas(cfg.orders) << ") lambda=("
                 << join_lambdas(cfg.orders) << ") M=" << M << " eps=" << cfg.eps_rule.str()
                 << (cfg.shared_soe ? " (shared SOE at the finest tau)" : "") << '\n';
            write_scaling_table(text, sr);
            text << "  speedup per N:";
            for (long N : cfg.N) {
                double tf = 0.0, td = 0.0;
                for (const auto& p : pts)
                    if (p.N == N) (p.backend == Backend::fast ? tf : td) = p.wall_ms;
                char b[32];
                std::snprintf(b, sizeof b, " %ld:%.2f", N, td / tf);
                text << b;
            }
            text << '\n';
            break;
        }
        case Command::coeff_check: {
            bool ok = true;
            for (long N : cfg.N) {
                const double tau = cfg.t_final / static_cast<double>(N);
                const auto sv = solve_sigma(cfg.orders, tau);
                const bool fast = cfg.backend != BackendChoice::direct;
                auto eps = cfg.eps_rule.eps(cfg.orders, tau);
                for (std::size_t r = 0; r < eps.size(); ++r)
                    eps[r] = std::max(eps[r], soe_eps_floor(cfg.orders.beta(r), sv.sigma * tau));
                auto engine = fast ? CoefficientEngine::fast(cfg.orders, tau, sv,
                                                             build_order_soes(cfg.orders, sv.sigma, tau, cfg.t_final, eps))
                                   : CoefficientEngine::direct(cfg.orders, tau, sv);
                const auto rep = coeff_property_check(engine, std::max(1L, N - 1));
                std::ostringstream c;
                c << "n,g0,gn,monotone_ok,sign_ok,bn_ratio\n";
                for (const auto& r : rep.rows)
                    c << r.n << ',' << sci5(r.g0) << ',' << sci5(r.gn) << ',' << (r.monotone_ok ? 1 : 0) << ','
                      << (r.sign_ok ? 1 : 0) << ',' << sci5(r.bn_ratio) << '\n';
                files.write("coeff_check_N" + std::to_string(N) + ".csv", c.str());
                if (cfg.N.size() == 1) csv << c.str();
                text << "coeff-check N=" << N << " " << (fast ? "fast" : "direct") << " sigma=" << sv.sigma
                     << ": monotone=" << rep.monotone_ok << " sign=" << rep.sign_ok << " b_n=" << rep.bn_ok
                     << " b1>0=" << rep.b1_positive << " worst_bn_ratio=" << sci5(rep.worst_bn_ratio)
                     << " worst_sign_margin=" << sci5(rep.worst_sign_margin) << " C(g1/g0)=" << sci5(rep.g1_over_g0_max)
                     << " g0_slope=" << rep.g0_slope << '\n';
                ok = ok && rep.all_ok();
            }
            log << text.str();
            if (cfg.N.size() == 1) log << csv.str();
            return ok ? exit_ok : exit_validation;
        }
        case Command::soe_check: {
            bool ok = true;
            csv << "N,order,beta,eps,tau_hat,n_exp,eps_achieved,scan10_max,ok\n";
            for (long N : cfg.N) {
                const double tau = cfg.t_final / static_cast<double>(N);
                const double sigma = solve_sigma(cfg.orders, tau).sigma;
                const auto eps = cfg.eps_rule.eps(cfg.orders, tau);
                for (std::size_t r = 0; r < cfg.orders.size(); ++r) {
                    const double beta = cfg.orders.beta(r);
                    double e = eps[r];
                    const double floor = soe_eps_floor(beta, sigma * tau);
                    if (e < floor) {
                        log << "warning: eps[" << r << "] = " << e << " below the double-precision floor " << floor
                            << "; using the floor\n";
                        e = floor;
                    }
                    const auto soe = build_soe(beta, e, sigma * tau, cfg.t_final);
                    const auto scan = soe_error_scan(soe, 10 * soe_certification_samples(soe.n_exp()));
                    const bool pass = scan.max_abs_error <= e;
                    ok = ok && pass;
                    csv << N << ',' << r << ',' << beta << ',' << sci5(e) << ',' << sci5(sigma * tau) << ','
                        << soe.n_exp() << ',' << sci5(soe.eps_achieved) << ',' << sci5(scan.max_abs_error) << ','
                        << (pass ? 1 : 0) << '\n';
                    std::ostringstream nodes;
                    write_soe_csv(nodes, soe);
                    files.write("soe_nodes_N" + std::to_string(N) + "_r" + std::to_string(r) + ".csv", nodes.str());
                }
            }
            text << csv.str();
            files.write(stem + ".csv", csv.str());
            log << text.str();
            return ok ? exit_ok : exit_validation;
        }
    }

    files.write(stem + ".csv", csv.str());
    files.write(stem + ".txt", text.str());
    log << text.str();
    return exit_ok;
}

}  // namespace detail

/// Run one command. Returns an ExitCode; config problems throw ConfigError.
inline int run_config(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    try {
        return detail::run_config_impl(cfg, opt, log);
    } catch (const CoefficientValidationError& e) {
        log << "validation failure: " << e.what() << '\n';
        return exit_validation;
    }
}

}  // namespace fracwave

#pragma once

// Error norms, refinement rates, CSV/text emission and scaling fits.

#include "fracwave/coefficients.hpp"
#include "fracwave/grid.hpp"
#include "fracwave/scheme.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

/// Which max-over-time error a study reports as E1.
enum class ErrorNorm {
    h1,           // ||e||_{H1}, the discrete H1 norm
    l2,           // ||e||
    h1_unscaled,  // h1_unscaled(e), difference sum without 1/h
};

inline const char* to_string(ErrorNorm n) {
    switch (n) {
        case ErrorNorm::h1: return "h1";
        case ErrorNorm::l2: return "l2";
        case ErrorNorm::h1_unscaled: return "h1_unscaled";
    }
    return "h1";
}

inline ErrorNorm parse_error_norm(const std::string& s) {
    if (s == "h1") return ErrorNorm::h1;
    if (s == "l2") return ErrorNorm::l2;
    if (s == "h1_unscaled") return ErrorNorm::h1_unscaled;
    throw std::invalid_argument("unknown error norm '" + s + "' (expected h1, l2 or h1_unscaled)");
}

inline double select_error(const RunResult& r, ErrorNorm n) {
    switch (n) {
        case ErrorNorm::h1: return r.e1;
        case ErrorNorm::l2: return r.e_l2;
        case ErrorNorm::h1_unscaled: return r.e_h1_unscaled;
    }
    return r.e1;
}

/// rate_k = log2(E_{k-1} / E_k), k = 1..size-1.
inline std::vector<double> rate_ladder(const std::vector<double>& errors) {
    if (errors.size() < 2) throw std::invalid_argument("rate_ladder: need at least two entries");
    for (double e : errors)
        if (!(e > 0.0)) throw std::invalid_argument("rate_ladder: error entries must be positive");
    std::vector<double> out;
    for (std::size_t k = 1; k < errors.size(); ++k) out.push_back(std::log2(errors[k - 1] / errors[k]));
    return out;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need matching pairs");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: entries must be positive");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return detail::lsq_slope(lx, ly);
}

enum class Direction { temporal, spatial };

inline const char* to_string(Direction d) { return d == Direction::temporal ? "temporal" : "spatial"; }

struct LadderEntry {
    double tau = 0.0;
    double h = 0.0;
    double e1 = 0.0;
    double rate = std::numeric_limits<double>::quiet_NaN();  // NaN for the first entry
    std::string backend;
    std::size_t n_exp_total = 0;
    std::size_t stored_reals = 0;
    double wall_ms = 0.0;
};

struct ConvergenceReport {
    Direction direction = Direction::temporal;
    std::string case_name;
    MultiTermOrders orders;
    std::string eps_rule;
    ErrorNorm norm = ErrorNorm::h1;
    std::vector<LadderEntry> entries;

    /// Fill entries[k].rate from the E1 column.
    void compute_rates() {
        if (entries.empty()) return;
        entries[0].rate = std::numeric_limits<double>::quiet_NaN();
        if (entries.size() < 2) return;
        std::vector<double> e;
        for (const auto& x : entries) e.push_back(x.e1);
        const auto r = rate_ladder(e);
        for (std::size_t k = 1; k < entries.size(); ++k) entries[k].rate = r[k - 1];
    }
};

/// 5 significant digits in e-notation.
inline std::string sci5(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4e", v);
    return buf;
}

inline std::string join_alphas(const MultiTermOrders& o) {
    std::ostringstream os;
    for (std::size_t r = 0; r < o.size(); ++r) os << (r ? ";" : "") << o.alpha(r);
    return os.str();
}

inline std::string join_lambdas(const MultiTermOrders& o) {
    std::ostringstream os;
    for (std::size_t r = 0; r < o.size(); ++r) os << (r ? ";" : "") << o.lambda(r);
    return os.str();
}

inline constexpr const char* kCsvHeader =
    "direction,case,alphas,lambdas,tau,h,E1,rate,backend,n_exp_total,stored_reals,wall_ms";

inline void write_csv_header(std::ostream& os) { os << kCsvHeader << '\n'; }

/// One CSV row per ladder entry; the first rate is left empty.
inline void write_csv_rows(std::ostream& os, const ConvergenceReport& rep, bool with_timing = true) {
    for (const auto& e : rep.entries) {
        os << to_string(rep.direction) << ',' << rep.case_name << ',' << join_alphas(rep.orders) << ','
           << join_lambdas(rep.orders) << ',' << sci5(e.tau) << ',' << sci5(e.h) << ',' << sci5(e.e1) << ','
           << (std::isnan(e.rate) ? std::string() : sci5(e.rate)) << ',' << e.backend << ',' << e.n_exp_total
           << ',' << e.stored_reals << ',' << (with_timing ? sci5(e.wall_ms) : std::string()) << '\n';
    }
}

/// Aligned text table: step, E1, rate ("*" for the first entry).
inline void write_text_table(std::ostream& os, const ConvergenceReport& rep) {
    const bool temporal = rep.direction == Direction::temporal;
    os << rep.case_name << "  alpha=(" << join_alphas(rep.orders) << ")  lambda=(" << join_lambdas(rep.orders)
       << ")  norm=" << to_string(rep.norm);
    if (!rep.eps_rule.empty()) os << "  eps=" << rep.eps_rule;
    os << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "  %-12s %-12s %-12s %-8s\n", temporal ? "tau" : "h", "E1",
                  temporal ? "Rate1" : "Rate2", "backend");
    os << line;
    for (const auto& e : rep.entries) {
        const std::string rate = std::isnan(e.rate) ? "*" : [&] {
            char b[16];
            std::snprintf(b, sizeof b, "%.4f", e.rate);
            return std::string(b);
        }();
        std::snprintf(line, sizeof line, "  %-12s %-12s %-12s %-8s\n", sci5(temporal ? e.tau : e.h).c_str(),
                      sci5(e.e1).c_str(), rate.c_str(), e.backend.c_str());
        os << line;
    }
}

struct CsvRow {
    std::string direction, case_name, alphas, lambdas;
    double tau = 0.0, h = 0.0, e1 = 0.0;
    double rate = std::numeric_limits<double>::quiet_NaN();
    std::string backend;
    std::size_t n_exp_total = 0, stored_reals = 0;
    double wall_ms = 0.0;
};

/// Parse CSV produced by write_csv_header/write_csv_rows.
inline std::vector<CsvRow> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw std::runtime_error("read_csv: unexpected header");
    std::vector<CsvRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 12) throw std::runtime_error("read_csv: expected 12 fields in '" + line + "'");
        CsvRow r;
        r.direction = f[0];
        r.case_name = f[1];
        r.alphas = f[2];
        r.lambdas = f[3];
        r.tau = std::stod(f[4]);
        r.h = std::stod(f[5]);
        r.e1 = std::stod(f[6]);
        if (!f[7].empty()) r.rate = std::stod(f[7]);
        r.backend = f[8];
        r.n_exp_total = std::stoul(f[9]);
        r.stored_reals = std::stoul(f[10]);
        if (!f[11].empty()) r.wall_ms = std::stod(f[11]);
        rows.push_back(r);
    }
    return rows;
}

struct ScalingPoint {
    long N = 0;
    Backend backend = Backend::fast;
    double wall_ms = 0.0;
    std::size_t stored_reals = 0;
    double flops = 0.0;
    std::size_t n_exp_total = 0;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double direct_work_exponent = std::numeric_limits<double>::quiet_NaN();
    double fast_work_exponent = std::numeric_limits<double>::quiet_NaN();
    double direct_time_exponent = std::numeric_limits<double>::quiet_NaN();
    double fast_time_exponent = std::numeric_limits<double>::quiet_NaN();
    bool fast_stored_constant = false;
    double speedup_at_max_n = std::numeric_limits<double>::quiet_NaN();  // direct / fast wall time
};

/// Fitted work and time exponents per backend over the N ladder.
inline ScalingReport scaling_report(std::vector<ScalingPoint> points) {
    ScalingReport rep;
    rep.points = std::move(points);
    std::vector<double> nf, wf, tf, nd, wd, td;
    std::vector<std::size_t> stored;
    long n_max = 0;
    for (const auto& p : rep.points) {
        if (p.backend == Backend::fast) {
            nf.push_back(static_cast<double>(p.N));
            wf.push_back(p.flops);
            tf.push_back(p.wall_ms);
            stored.push_back(p.stored_reals);
        } else {
            nd.push_back(static_cast<double>(p.N));
            wd.push_back(p.flops);
            td.push_back(p.wall_ms);
        }
        n_max = std::max(n_max, p.N);
    }
    if (nf.size() >= 2) {
        rep.fast_work_exponent = loglog_slope(nf, wf);
        rep.fast_time_exponent = loglog_slope(nf, tf);
    }
    if (nd.size() >= 2) {
        rep.direct_work_exponent = loglog_slope(nd, wd);
        rep.direct_time_exponent = loglog_slope(nd, td);
    }
    rep.fast_stored_constant = !stored.empty();
    for (auto s : stored) rep.fast_stored_constant = rep.fast_stored_constant && s == stored.front();
    double t_fast = 0.0, t_direct = 0.0;
    for (const auto& p : rep.points) {
        if (p.N != n_max) continue;
        (p.backend == Backend::fast ? t_fast : t_direct) = p.wall_ms;
    }
    if (t_fast > 0.0 && t_direct > 0.0) rep.speedup_at_max_n = t_direct / t_fast;
    return rep;
}

inline void write_scaling_table(std::ostream& os, const ScalingReport& rep) {
    char line[200];
    std::snprintf(line, sizeof line, "  %-8s %-8s %-12s %-12s %-12s %-8s\n", "N", "backend", "wall_ms", "flops",
                  "stored_reals", "n_exp");
    os << line;
    for (const auto& p : rep.points) {
        std::snprintf(line, sizeof line, "  %-8ld %-8s %-12s %-12s %-12zu %-8zu\n", p.N, to_string(p.backend),
                      sci5(p.wall_ms).c_str(), sci5(p.flops).c_str(), p.stored_reals, p.n_exp_total);
        os << line;
    }
    std::snprintf(line, sizeof line,
                  "  work exponent: direct %.3f, fast %.3f; fast stored_reals constant: %s; speedup at max N: %.2f\n",
                  rep.direct_work_exponent, rep.fast_work_exponent, rep.fast_stored_constant ? "yes" : "no",
                  rep.speedup_at_max_n);
    os << line;
}

}  // namespace fracwave

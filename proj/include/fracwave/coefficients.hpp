#pragma once

// Discrete coefficients of the weighted L2-1sigma approximation of the
// multi-term Caputo derivative, in its direct form (hat g) and in its fast
// sum-of-exponentials form (F hat g), plus the refined coefficients bold-g
// used by the time-stepping scheme.
//
// For n >= 1 both forms share one structure:
//
//     row^{(n+1)}_0 = Z(n),   row^{(n+1)}_k = G(n-k)  (1 <= k <= n),
//     b_n = B(n),
//
// so the shift identities row^{(n+1)}_k = row^{(n)}_{k-1} (k >= 2) and
// row^{(n+1)}_1 = row^{(n)}_0 + b_n reduce to relations between Z, G, B.
// The engine caches these scalar sequences and extends them one step at a
// time; the explicit per-entry formulas are kept separately for checking.

#include "fracwave/multi_term.hpp"
#include "fracwave/soe_kernel.hpp"
#include "fracwave/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fracwave {

/// L2-1sigma weight a_l = (l+sigma)^{1-beta} - (l-1+sigma)^{1-beta}, a_0 = sigma^{1-beta}.
inline double l21s_a(long l, double beta, double sigma) {
    const double g = 1.0 - beta;
    if (l == 0) return std::pow(sigma, g);
    const double x = static_cast<double>(l) + sigma;
    // x^g (1 - (1 - 1/x)^g) without cancellation
    return -std::pow(x, g) * std::expm1(g * std::log1p(-1.0 / x));
}

/// L2-1sigma weight
/// b_l = [(l+s)^{2-beta} - (l-1+s)^{2-beta}]/(2-beta) - [(l+s)^{1-beta} + (l-1+s)^{1-beta}]/2,
/// i.e. minus the trapezoidal error of s^{1-beta} over [l-1+sigma, l+sigma].
/// b_0 is defined as 0.
inline double l21s_b(long l, double beta, double sigma) {
    if (l == 0) return 0.0;
    const double g = 1.0 - beta;
    const double x = static_cast<double>(l) + sigma;
    if (x < 8.0) {
        const double y = x - 1.0;
        return (std::pow(x, g + 1.0) - std::pow(y, g + 1.0)) / (g + 1.0) - 0.5 * (std::pow(x, g) + std::pow(y, g));
    }
    // x^{g+1} sum_{k>=3} (-1)^{k+1} C(g,k-1) (1/k - 1/2) e^k with e = 1/x
    const double e = 1.0 / x;
    double sum = 0.0;
    double c = binomial(g, 2);  // C(g, k-1) for k = 3
    double ek = e * e * e;
    double sign = 1.0;
    for (int k = 3; k < 60; ++k) {
        const double term = sign * c * (1.0 / k - 0.5) * ek;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
        c *= (g - (k - 1)) / k;
        ek *= e;
        sign = -sign;
    }
    return std::pow(x, g + 1.0) * sum;
}

struct HistoryWeights {
    double a;  // int_0^1 (3/2 - s) exp(-x (sigma + 1 - s)) ds
    double b;  // int_0^1 (s - 1/2) exp(-x (sigma + 1 - s)) ds
};

/// Closed form of the A_j, B_j integrals for x = s_j tau; Taylor series
/// below x = 1 where the closed form cancels.
inline HistoryWeights history_weights(double x, double sigma) {
    double p;  // (1 - e^{-x}) / x
    double q;  // (1 - (1 + x) e^{-x}) / x^2
    if (x < 1.0) {
        p = 0.0;
        q = 0.0;
        double xk = 1.0;        // (-x)^k
        double inv_fact = 1.0;  // 1/(k+1)!
        for (int k = 0; k < 40; ++k) {
            inv_fact /= (k + 1.0);
            const double tp = xk * inv_fact;           // (-x)^k/(k+1)!
            const double tq = xk * inv_fact / (k + 2.0) * (k + 1.0);  // (-x)^k (k+1)/(k+2)!
            p += tp;
            q += tq;
            if (std::abs(tp) < 1e-18) break;
            xk *= -x;
        }
    } else {
        const double em = std::exp(-x);
        p = -std::expm1(-x) / x;
        q = (1.0 - (1.0 + x) * em) / (x * x);
    }
    const double d = std::exp(-x * sigma);
    return {d * (0.5 * p + q), d * (0.5 * p - q)};
}

/// Per-node data of one order's SOE kernel, scaled for the scheme.
struct SoeNodeCoefficients {
    double omega_hat;  // w_j / Gamma(1 - beta)
    double decay;      // exp(-s_j tau)
    double a;          // A_j
    double b;          // B_j
};

struct RefinedRow {
    std::vector<double> row;  // bold-g_k^{(n+1)}, k = 0..n
    double b_tilde = 0.0;     // (3 sigma - 1) b_n / (2 (1 - sigma) bold-g_0), 0 for n = 0
    double b_n = 0.0;
};

/// Incremental coefficient checks for one step n >= 1 (positive margin = holds).
struct StepCheck {
    long n = 0;
    double g0 = 0.0;
    double g1 = 0.0;
    double gn = 0.0;
    double b_n = 0.0;
    double positivity_margin = 0.0;  // bold-g_0
    double monotone_margin = 0.0;    // min over the new chain links
    double sign_margin = 0.0;        // (2 sigma - 1) bold-g_n - sigma bold-g_{n-1}
    double bn_margin = 0.0;          // 2 bold-g_0 - b_n
    [[nodiscard]] bool monotone_ok() const { return positivity_margin > 0.0 && monotone_margin > 0.0; }
    [[nodiscard]] bool sign_ok() const { return sign_margin > 0.0; }
    [[nodiscard]] bool bn_ok() const { return bn_margin > 0.0 && b_n > 0.0; }
    [[nodiscard]] bool ok() const { return monotone_ok() && sign_ok() && bn_ok(); }
};

class CoefficientEngine {
public:
    static CoefficientEngine direct(MultiTermOrders orders, double tau, SigmaValue sigma) {
        return CoefficientEngine(std::move(orders), tau, sigma, {});
    }

    static CoefficientEngine fast(MultiTermOrders orders, double tau, SigmaValue sigma, std::vector<SoeApprox> soes) {
        if (soes.size() != orders.size())
            throw std::invalid_argument("CoefficientEngine: one SOE approximation per order is required");
        return CoefficientEngine(std::move(orders), tau, sigma, std::move(soes));
    }

    [[nodiscard]] bool is_fast() const noexcept { return !soes_.empty(); }
    [[nodiscard]] const MultiTermOrders& orders() const noexcept { return orders_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_.sigma; }
    [[nodiscard]] const SigmaValue& sigma_value() const noexcept { return sigma_; }
    [[nodiscard]] const std::vector<SoeApprox>& soes() const noexcept { return soes_; }

    /// mu^{(beta_r)} = tau^{-beta_r} / Gamma(2 - beta_r)
    [[nodiscard]] double mu(std::size_t r) const { return mu_.at(r); }

    /// sum_r lambda_r mu^{(beta_r)} a_0^{(beta_r)}
    [[nodiscard]] double a0_agg() const noexcept { return a0_agg_; }

    /// A_j, B_j and scaled weights for order r (fast mode only).
    [[nodiscard]] const std::vector<SoeNodeCoefficients>& fast_ab(std::size_t r) const {
        require_fast("fast_ab");
        return nodes_.at(r);
    }

    [[nodiscard]] std::size_t n_exp_total() const noexcept {
        std::size_t n = 0;
        for (const auto& s : soes_) n += s.n_exp();
        return n;
    }

    // ---- explicit per-entry formulas --------------------------------------

    /// g_k^{(n+1, beta_r)}, k = 0..n, for a single order (L2-1sigma).
    [[nodiscard]] std::vector<double> direct_g_row(std::size_t r, long n) const {
        const double b = orders_.beta(r);
        const double s = sigma();
        const double m = mu(r);
        if (n == 0) return {m * l21s_a(0, b, s)};
        std::vector<double> row(static_cast<std::size_t>(n + 1));
        row[0] = m * (l21s_a(n, b, s) - l21s_b(n, b, s));
        for (long k = 1; k <= n - 1; ++k)
            row[k] = m * (l21s_a(n - k, b, s) + l21s_b(n - k + 1, b, s) - l21s_b(n - k, b, s));
        row[n] = m * (l21s_a(0, b, s) + l21s_b(1, b, s));
        return row;
    }

    /// hat g_k^{(n+1)} = sum_r lambda_r g_k^{(n+1, beta_r)}.
    [[nodiscard]] std::vector<double> multiterm_direct_row(long n) const {
        std::vector<double> row(static_cast<std::size_t>(n + 1), 0.0);
        for (std::size_t r = 0; r < orders_.size(); ++r) {
            const auto gr = direct_g_row(r, n);
            for (std::size_t k = 0; k < row.size(); ++k) row[k] += orders_.lambda(r) * gr[k];
        }
        return row;
    }

    /// F hat g_k^{(n+1)} from the three-branch SOE formula (fast mode only).
    [[nodiscard]] std::vector<double> fast_g_row(long n) const {
        require_fast("fast_g_row");
        if (n == 0) return {a0_agg_};
        std::vector<double> row(static_cast<std::size_t>(n + 1), 0.0);
        for (std::size_t r = 0; r < orders_.size(); ++r) {
            const double lam = orders_.lambda(r);
            const double x_scale = tau_;
            for (std::size_t j = 0; j < nodes_[r].size(); ++j) {
                const auto& c = nodes_[r][j];
                const double x = soes_[r].nodes[j] * x_scale;
                row[0] += lam * c.omega_hat * std::exp(-(n - 1) * x) * c.a;
                for (long k = 1; k <= n - 1; ++k)
                    row[k] += lam * c.omega_hat * (std::exp(-(n - k - 1) * x) * c.a + std::exp(-(n - k) * x) * c.b);
                row[n] += lam * c.omega_hat * c.b;
            }
        }
        row[n] += a0_agg_;
        return row;
    }

    // ---- cached sequences (mode dependent) --------------------------------

    /// Leading entry of the unrefined row^{(n+1)}.
    double head(long n) {
        extend(n + 1);
        return z_[n];
    }

    /// row^{(n+1)}_k = tail(n - k) for 1 <= k <= n.
    double tail(long l) {
        extend(l + 1);
        return g_[l];
    }

    /// b_n for n >= 1.
    double bn(long n) {
        if (n < 1) throw std::invalid_argument("bn: n must be >= 1");
        extend(n + 1);
        return b_[n];
    }

    /// Unrefined row (hat g in direct mode, F hat g in fast mode).
    std::vector<double> base_row(long n) {
        extend(n + 1);
        std::vector<double> row(static_cast<std::size_t>(n + 1));
        row[0] = z_[n];
        for (long k = 1; k <= n; ++k) row[k] = g_[n - k];
        return row;
    }

    /// bold-g^{(n+1)} together with b_n and b_tilde.
    RefinedRow refined_g_row(long n) {
        RefinedRow out;
        if (n == 0) {
            out.row = {g_first()};
            return out;
        }
        out.row = base_row(n);
        out.b_n = b_[n];
        out.row[0] -= 0.5 * out.b_n;
        out.b_tilde = (3.0 * sigma() - 1.0) * out.b_n / (2.0 * (1.0 - sigma()) * out.row[0]);
        return out;
    }

    /// bold-g_0^{(1)} = F hat g_0^{(1)} / (1 - sigma).
    [[nodiscard]] double g_first() const noexcept { return a0_agg_ / (1.0 - sigma()); }

    /// bold-g_n^{(n+1)} for n >= 1 (independent of n).
    double g_diagonal() { return tail(0); }

    /// Checks of the chain bold-g_n > ... > bold-g_0 > 0, the sign condition and
    /// b_n < 2 bold-g_0 that are new at step n, given that step n-1 passed.
    StepCheck check_step(long n) {
        if (n < 1) throw std::invalid_argument("check_step: n must be >= 1");
        extend(n + 1);
        const double s = sigma();
        StepCheck c;
        c.n = n;
        c.b_n = b_[n];
        c.g0 = z_[n] - 0.5 * c.b_n;
        c.g1 = g_[n - 1];
        c.gn = g_[0];
        c.positivity_margin = c.g0;
        c.monotone_margin = c.g1 - c.g0;
        if (n >= 2) c.monotone_margin = std::min(c.monotone_margin, g_[n - 2] - c.g1);
        const double g_nm1 = n >= 2 ? g_[1] : c.g0;
        c.sign_margin = (2.0 * s - 1.0) * c.gn - s * g_nm1;
        c.bn_margin = 2.0 * c.g0 - c.b_n;
        return c;
    }

    /// Precompute the cached sequences for rows up to n_max + 1.
    void reserve(long n_max) { extend(n_max + 1); }

private:
    CoefficientEngine(MultiTermOrders orders, double tau, SigmaValue sigma, std::vector<SoeApprox> soes)
        : orders_(std::move(orders)), tau_(tau), sigma_(sigma), soes_(std::move(soes)) {
        if (!(tau_ > 0.0)) throw std::invalid_argument("CoefficientEngine: tau must be positive");
        const double s = sigma_.sigma;
        if (!(s > 0.5 && s < 1.0)) throw std::invalid_argument("CoefficientEngine: sigma must lie in (1/2, 1)");
        for (std::size_t r = 0; r < orders_.size(); ++r) {
            const double b = orders_.beta(r);
            mu_.push_back(std::pow(tau_, -b) / gamma_fn(2.0 - b));
            a0_agg_ += orders_.lambda(r) * mu_.back() * l21s_a(0, b, s);
        }
        if (is_fast()) {
            nodes_.resize(orders_.size());
            for (std::size_t r = 0; r < orders_.size(); ++r) {
                const double b = orders_.beta(r);
                if (std::abs(soes_[r].beta - b) > 1e-12)
                    throw std::invalid_argument("CoefficientEngine: SOE kernel exponent does not match beta_r");
                const double inv_g = 1.0 / gamma_fn(1.0 - b);
                for (std::size_t j = 0; j < soes_[r].n_exp(); ++j) {
                    const double x = soes_[r].nodes[j] * tau_;
                    const auto ab = history_weights(x, s);
                    nodes_[r].push_back({soes_[r].weights[j] * inv_g, std::exp(-x), ab.a, ab.b});
                    flat_weight_.push_back(orders_.lambda(r) * soes_[r].weights[j] * inv_g);
                    flat_decay_.push_back(std::exp(-x));
                    flat_a_.push_back(ab.a);
                    flat_b_.push_back(ab.b);
                }
            }
            flat_power_.assign(flat_weight_.size(), 1.0);
        }
        z_.push_back(a0_agg_);
        b_.push_back(0.0);
    }

    void require_fast(const char* what) const {
        if (!is_fast()) throw std::logic_error(std::string(what) + " requires a fast (SOE) engine");
    }

    // Ensure z_, b_ hold indices [0, n] and g_ holds [0, n-1].
    void extend(long n) {
        if (is_fast()) {
            // phi_/psi_ hold sum lambda w_hat e^{-l x} A (resp. B) for l = 0, 1, ...
            while (static_cast<long>(phi_.size()) < n + 1) {
                double phi = 0.0;
                double psi = 0.0;
                for (std::size_t j = 0; j < flat_weight_.size(); ++j) {
                    const double c = flat_weight_[j] * flat_power_[j];
                    phi += c * flat_a_[j];
                    psi += c * flat_b_[j];
                    flat_power_[j] *= flat_decay_[j];
                }
                phi_.push_back(phi);
                psi_.push_back(psi);
            }
            while (static_cast<long>(z_.size()) < n + 1) {
                const long k = static_cast<long>(z_.size());
                z_.push_back(phi_[k - 1]);
                b_.push_back(psi_[k - 1]);
            }
            while (static_cast<long>(g_.size()) < n) {
                const long l = static_cast<long>(g_.size());
                g_.push_back(l == 0 ? psi_[0] + a0_agg_ : phi_[l - 1] + psi_[l]);
            }
        } else {
            const double s = sigma();
            while (static_cast<long>(za_.size()) < n + 2) {
                const long l = static_cast<long>(za_.size());
                double za = 0.0;
                double ba = 0.0;
                for (std::size_t r = 0; r < orders_.size(); ++r) {
                    const double w = orders_.lambda(r) * mu_[r];
                    za += w * l21s_a(l, orders_.beta(r), s);
                    ba += w * l21s_b(l, orders_.beta(r), s);
                }
                za_.push_back(za);
                ba_.push_back(ba);
            }
            while (static_cast<long>(z_.size()) < n + 1) {
                const long k = static_cast<long>(z_.size());
                z_.push_back(za_[k] - ba_[k]);
                b_.push_back(ba_[k]);
            }
            while (static_cast<long>(g_.size()) < n) {
                const long l = static_cast<long>(g_.size());
                g_.push_back(za_[l] + ba_[l + 1] - ba_[l]);
            }
        }
    }

    MultiTermOrders orders_;
    double tau_;
    SigmaValue sigma_;
    std::vector<SoeApprox> soes_;
    std::vector<double> mu_;
    double a0_agg_ = 0.0;
    std::vector<std::vector<SoeNodeCoefficients>> nodes_;

    // flattened fast-mode node data across orders
    std::vector<double> flat_weight_, flat_decay_, flat_a_, flat_b_, flat_power_;
    std::vector<double> phi_, psi_;
    // direct-mode aggregated a_l, b_l
    std::vector<double> za_, ba_;
    // shared sequences
    std::vector<double> z_, g_, b_;
};

/// Cut-off tau_hat = sigma tau; one SOE per order with its own tolerance.
inline std::vector<SoeApprox> build_order_soes(const MultiTermOrders& orders, double sigma, double tau,
                                               double t_final, const std::vector<double>& eps) {
    if (eps.size() != orders.size()) throw std::invalid_argument("build_order_soes: one tolerance per order");
    std::vector<SoeApprox> out;
    for (std::size_t r = 0; r < orders.size(); ++r)
        out.push_back(build_soe(orders.beta(r), eps[r], sigma * tau, t_final));
    return out;
}

// ---- full-row property report ----------------------------------------------

struct CoefficientRowReport {
    long n = 0;
    double g0 = 0.0;
    double gn = 0.0;
    bool monotone_ok = false;  // bold-g_n > ... > bold-g_0 > 0
    bool sign_ok = false;      // (2 sigma - 1) bold-g_n - sigma bold-g_{n-1} > 0
    bool bn_ok = false;        // 0 < b_n < 2 bold-g_0
    double bn_ratio = 0.0;     // b_n / (2 bold-g_0)
    double sign_margin = 0.0;
};

struct CoefficientReport {
    std::vector<CoefficientRowReport> rows;
    bool monotone_ok = true;
    bool sign_ok = true;
    bool bn_ok = true;
    bool b1_positive = false;
    double worst_monotone_gap = std::numeric_limits<double>::infinity();  // min relative gap in the chain
    double worst_sign_margin = std::numeric_limits<double>::infinity();
    double worst_bn_ratio = 0.0;
    double g1_over_g0_max = 0.0;   // empirical C in bold-g_1 <= C bold-g_0
    double g0_slope = 0.0;         // LSQ slope of log bold-g_0^{(n+1)} vs log t_{n+sigma}, n in [8, n_max]
    double inv_sum_slope = 0.0;    // LSQ slope of log(tau sum_k 1/bold-g_k) vs log t_{n+sigma}
    double inv_sum_const = 0.0;    // max tau sum_k 1/bold-g_k / t_{n+sigma}^{inv_sum_slope}
    [[nodiscard]] bool all_ok() const { return monotone_ok && sign_ok && bn_ok && b1_positive; }
};

namespace detail {
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return 0.0;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}
}  // namespace detail

/// Full-row evaluation of the coefficient inequalities for n = 1..n_max.
inline CoefficientReport coeff_property_check(CoefficientEngine& engine, long n_max) {
    if (n_max < 1) throw std::invalid_argument("coeff_property_check: n_max must be >= 1");
    engine.reserve(n_max);
    const double s = engine.sigma();
    const double tau = engine.tau();
    CoefficientReport rep;
    std::vector<double> lx, lg0, linv;
    for (long n = 1; n <= n_max; ++n) {
        const auto refined = engine.refined_g_row(n);
        const auto& g = refined.row;
        CoefficientRowReport row;
        row.n = n;
        row.g0 = g[0];
        row.gn = g[n];
        row.monotone_ok = g[0] > 0.0;
        for (long k = 1; k <= n; ++k) {
            const double gap = (g[k] - g[k - 1]) / g[k];
            rep.worst_monotone_gap = std::min(rep.worst_monotone_gap, gap);
            if (!(g[k] > g[k - 1])) row.monotone_ok = false;
        }
        row.sign_margin = (2.0 * s - 1.0) * g[n] - s * g[n - 1];
        row.sign_ok = row.sign_margin > 0.0;
        row.bn_ratio = refined.b_n / (2.0 * g[0]);
        row.bn_ok = refined.b_n > 0.0 && refined.b_n < 2.0 * g[0];
        if (n == 1) rep.b1_positive = refined.b_n > 0.0;

        rep.monotone_ok = rep.monotone_ok && row.monotone_ok;
        rep.sign_ok = rep.sign_ok && row.sign_ok;
        rep.bn_ok = rep.bn_ok && row.bn_ok;
        rep.worst_sign_margin = std::min(rep.worst_sign_margin, row.sign_margin / g[n]);
        rep.worst_bn_ratio = std::max(rep.worst_bn_ratio, row.bn_ratio);
        rep.g1_over_g0_max = std::max(rep.g1_over_g0_max, g[1] / g[0]);

        double inv_sum = 0.0;
        for (double gk : g) inv_sum += 1.0 / gk;
        inv_sum *= tau;
        const double t = (n + s) * tau;
        if (n >= 8) {
            lx.push_back(std::log(t));
            lg0.push_back(std::log(g[0]));
            linv.push_back(std::log(inv_sum));
        }
        rep.rows.push_back(row);
    }
    rep.g0_slope = detail::lsq_slope(lx, lg0);
    rep.inv_sum_slope = detail::lsq_slope(lx, linv);
    for (std::size_t i = 0; i < lx.size(); ++i)
        rep.inv_sum_const = std::max(rep.inv_sum_const, std::exp(linv[i] - rep.inv_sum_slope * lx[i]));
    return rep;
}

}  // namespace fracwave

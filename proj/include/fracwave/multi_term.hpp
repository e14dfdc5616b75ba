#pragma once

// Multi-term fractional orders and the offset sigma of the weighted
// L2-1sigma discretization.

#include "fracwave/special.hpp"

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

struct FractionalTerm {
    double alpha;   // order in (1, 2)
    double lambda;  // positive weight
};

/// Ordered terms with 1 < alpha_m < ... < alpha_0 < 2 and lambda_r > 0.
class MultiTermOrders {
public:
    MultiTermOrders() = default;

    explicit MultiTermOrders(std::vector<FractionalTerm> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw std::invalid_argument("orders: at least one term is required");
        for (std::size_t r = 0; r < terms_.size(); ++r) {
            const auto& t = terms_[r];
            if (!(t.alpha > 1.0 && t.alpha < 2.0))
                throw std::invalid_argument("orders: alpha[" + std::to_string(r) + "] must lie in (1,2)");
            if (!(t.lambda > 0.0) || !std::isfinite(t.lambda))
                throw std::invalid_argument("orders: lambda[" + std::to_string(r) + "] must be positive and finite");
            if (r > 0 && !(t.alpha < terms_[r - 1].alpha))
                throw std::invalid_argument("orders: alphas must be strictly decreasing (alpha[" +
                                            std::to_string(r) + "])");
        }
    }

    MultiTermOrders(std::initializer_list<FractionalTerm> terms)
        : MultiTermOrders(std::vector<FractionalTerm>(terms)) {}

    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] double alpha(std::size_t r) const { return terms_.at(r).alpha; }
    [[nodiscard]] double lambda(std::size_t r) const { return terms_.at(r).lambda; }
    [[nodiscard]] double beta(std::size_t r) const { return terms_.at(r).alpha - 1.0; }
    [[nodiscard]] const std::vector<FractionalTerm>& terms() const noexcept { return terms_; }

private:
    std::vector<FractionalTerm> terms_;
};

struct SigmaValue {
    double sigma = 0.0;
    double bracket_lo = 0.0;  // 1 - beta_0 / 2
    double bracket_hi = 0.0;  // 1 - beta_m / 2
    double residual = 0.0;    // F(sigma)
};

/// F(sigma) = sum_r lambda_r sigma^{1-beta_r} / Gamma(3-beta_r) [sigma - (1 - beta_r/2)] tau^{2-beta_r}.
inline double sigma_equation(const MultiTermOrders& orders, double tau, double sigma) {
    double f = 0.0;
    for (std::size_t r = 0; r < orders.size(); ++r) {
        const double b = orders.beta(r);
        f += orders.lambda(r) * std::pow(sigma, 1.0 - b) / gamma_fn(3.0 - b) * (sigma - (1.0 - 0.5 * b)) *
             std::pow(tau, 2.0 - b);
    }
    return f;
}

inline double sigma_equation_derivative(const MultiTermOrders& orders, double tau, double sigma) {
    double d = 0.0;
    for (std::size_t r = 0; r < orders.size(); ++r) {
        const double b = orders.beta(r);
        const double c = orders.lambda(r) / gamma_fn(3.0 - b) * std::pow(tau, 2.0 - b);
        // d/ds [s^{1-b} (s - k)] = (2-b) s^{1-b} - (1-b) k s^{-b}
        const double k = 1.0 - 0.5 * b;
        d += c * ((2.0 - b) * std::pow(sigma, 1.0 - b) - (1.0 - b) * k * std::pow(sigma, -b));
    }
    return d;
}

/// Root of F on [1 - beta_0/2, 1 - beta_m/2]: Newton from the bracket
/// midpoint, falling back to bisection whenever a step leaves the bracket.
inline SigmaValue solve_sigma(const MultiTermOrders& orders, double tau) {
    if (orders.size() == 0) throw std::invalid_argument("solve_sigma: empty orders");
    if (!(tau > 0.0)) throw std::invalid_argument("solve_sigma: tau must be positive");
    SigmaValue out;
    out.bracket_lo = 1.0 - 0.5 * orders.beta(0);
    out.bracket_hi = 1.0 - 0.5 * orders.beta(orders.size() - 1);
    if (orders.size() == 1) {
        out.sigma = out.bracket_lo;
        out.residual = sigma_equation(orders, tau, out.sigma);
        return out;
    }

    double scale = 0.0;
    for (std::size_t r = 0; r < orders.size(); ++r) {
        const double b = orders.beta(r);
        scale += orders.lambda(r) / gamma_fn(3.0 - b) * std::pow(tau, 2.0 - b);
    }

    double lo = out.bracket_lo;
    double hi = out.bracket_hi;
    double f_lo = sigma_equation(orders, tau, lo);
    double f_hi = sigma_equation(orders, tau, hi);
    if (f_lo == 0.0 || f_hi == 0.0) {
        out.sigma = f_lo == 0.0 ? lo : hi;
        return out;
    }
    if ((f_lo > 0.0) == (f_hi > 0.0)) throw std::logic_error("solve_sigma: no sign change on the bracket");

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fx = sigma_equation(orders, tau, x);
        if (std::abs(fx) <= 1e-16 * scale) break;
        if ((fx > 0.0) == (f_lo > 0.0)) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        const double dfx = sigma_equation_derivative(orders, tau, x);
        double next = x - fx / dfx;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * x) {
            x = next;
            break;
        }
        x = next;
    }
    out.sigma = x;
    out.residual = sigma_equation(orders, tau, x);
    return out;
}

}  // namespace fracwave

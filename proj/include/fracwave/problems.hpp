#pragma once

// Problem data: orders, nonlinearity, forcing, initial data and an optional
// exact solution. The manufactured family has exact solution sin(pi x) t^4.
//
// ProblemSpec::f is the term added on the right-hand side of the equation,
//     sum_r lambda_r D^{alpha_r} u = u_xx + f(u) + p.

#include "fracwave/multi_term.hpp"
#include "fracwave/special.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracwave {

struct ProblemSpec {
    std::string name = "custom";
    double x_left = 0.0;
    double x_right = 1.0;
    double t_final = 1.0;
    MultiTermOrders orders;
    std::function<double(double)> f;               // nonlinearity f(u)
    std::function<double(double, double)> p;       // forcing p(x, t)
    std::function<double(double)> phi;             // u(x, 0)
    std::function<double(double)> psi;             // u_t(x, 0)
    std::function<double(double, double)> exact;   // optional
    std::function<double(double)> phi_xx;          // optional analytic second derivatives
    std::function<double(double)> psi_xx;

    [[nodiscard]] bool has_exact() const { return static_cast<bool>(exact); }
};

/// Case 1: 2u^3, case 2: sin(u), case 3: sqrt(u^2 + 5).
inline double nonlinearity(int which, double u) {
    switch (which) {
        case 1: return 2.0 * u * u * u;
        case 2: return std::sin(u);
        case 3: return std::sqrt(u * u + 5.0);
        default: throw std::invalid_argument("nonlinearity: case must be 1, 2 or 3");
    }
}

/// Which Gamma factor divides 24 t^{4-alpha} in the manufactured forcing.
enum class ForcingVariant {
    caputo_identity,  // 24 t^{4-alpha}/Gamma(5-alpha), the Caputo derivative of t^4
    printed,          // 24 t^{4-alpha}/Gamma(4-alpha)
};

/// Sign with which the case nonlinearity enters the equation. The forcing
/// always carries the compensating term so that sin(pi x) t^4 stays exact
/// under the identity forcing.
enum class NonlinearSign {
    table,     // equation term -f(u), forcing term +f(u_exact)
    equation,  // equation term +f(u), forcing term -f(u_exact)
};

inline const char* to_string(ForcingVariant v) {
    return v == ForcingVariant::printed ? "printed" : "caputo-identity";
}

inline const char* to_string(NonlinearSign s) { return s == NonlinearSign::table ? "table" : "equation"; }

struct ManufacturedOptions {
    ForcingVariant forcing = ForcingVariant::caputo_identity;
    NonlinearSign sign = NonlinearSign::table;
};

/// sum_r lambda_r 24 t^{4-alpha_r}/Gamma(k - alpha_r), k = 5 (identity) or 4 (printed).
inline double manufactured_time_part(double t, const MultiTermOrders& orders, ForcingVariant variant) {
    const double k = variant == ForcingVariant::printed ? 4.0 : 5.0;
    double s = 0.0;
    for (std::size_t r = 0; r < orders.size(); ++r) {
        const double a = orders.alpha(r);
        s += 24.0 * orders.lambda(r) * std::pow(t, 4.0 - a) / gamma_fn(k - a);
    }
    return s;
}

/// [sum_r 24 lambda_r t^{4-alpha_r}/Gamma(.) + pi^2 t^4] sin(pi x) +- f(sin(pi x) t^4).
inline double manufactured_forcing(double x, double t, const MultiTermOrders& orders, int which,
                                   ManufacturedOptions opt = {}) {
    constexpr double pi = std::numbers::pi;
    const double sx = std::sin(pi * x);
    const double t4 = t * t * t * t;
    const double fu = nonlinearity(which, sx * t4);
    return (manufactured_time_part(t, orders, opt.forcing) + pi * pi * t4) * sx +
           (opt.sign == NonlinearSign::table ? fu : -fu);
}

/// Exact solution sin(pi x) t^4 with phi = psi = 0.
inline ProblemSpec manufactured_problem(const MultiTermOrders& orders, int which, ManufacturedOptions opt = {}) {
    if (which < 1 || which > 3) throw std::invalid_argument("manufactured_problem: case must be 1, 2 or 3");
    ProblemSpec p;
    p.name = "case" + std::to_string(which);
    p.orders = orders;
    if (opt.sign == NonlinearSign::table) {
        p.f = [which](double u) { return -nonlinearity(which, u); };
    } else {
        p.f = [which](double u) { return nonlinearity(which, u); };
    }
    p.p = [orders, which, opt](double x, double t) { return manufactured_forcing(x, t, orders, which, opt); };
    p.phi = [](double) { return 0.0; };
    p.psi = [](double) { return 0.0; };
    p.phi_xx = [](double) { return 0.0; };
    p.psi_xx = [](double) { return 0.0; };
    p.exact = [](double x, double t) { return std::sin(std::numbers::pi * x) * t * t * t * t; };
    return p;
}

}  // namespace fracwave

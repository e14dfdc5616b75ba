#pragma once

// Uniform 1D grid, the second difference, discrete norms and the
// tridiagonal solver used by the implicit step.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

using GridFunction = std::vector<double>;  // nodes 0..M

struct Grid1D {
    double x_left = 0.0;
    double x_right = 1.0;
    int M = 2;
    double h = 0.5;

    Grid1D() = default;
    Grid1D(double xl, double xr, int m) : x_left(xl), x_right(xr), M(m), h((xr - xl) / m) {
        if (m < 2) throw std::invalid_argument("Grid1D: M must be >= 2");
        if (!(xr > xl)) throw std::invalid_argument("Grid1D: need x_left < x_right");
    }

    [[nodiscard]] double x(int i) const noexcept { return x_left + i * h; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(M) + 1; }
};

/// Values fn(x_i) at all nodes; boundary slots set to zero when dirichlet is true.
inline GridFunction sample(const Grid1D& g, const std::function<double(double)>& fn, bool dirichlet = true) {
    GridFunction out(g.size());
    for (int i = 0; i <= g.M; ++i) out[i] = fn(g.x(i));
    if (dirichlet) {
        out.front() = 0.0;
        out.back() = 0.0;
    }
    return out;
}

/// (u_{i+1} - 2u_i + u_{i-1}) / h^2 at interior nodes, 0 at the boundary slots.
inline GridFunction delta_x2(const Grid1D& g, const GridFunction& u) {
    if (u.size() != g.size()) throw std::invalid_argument("delta_x2: grid size mismatch");
    GridFunction out(u.size(), 0.0);
    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int i = 1; i < g.M; ++i) out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
    return out;
}

struct NormTriple {
    double l2 = 0.0;
    double semi_h1 = 0.0;
    double h1 = 0.0;
};

/// ||v||^2 = h sum_{i=1}^{M-1} v_i^2, |v|_1^2 = h sum_{i=1}^{M} ((v_i - v_{i-1})/h)^2.
inline NormTriple norms(const Grid1D& g, const GridFunction& v) {
    if (v.size() != g.size()) throw std::invalid_argument("norms: grid size mismatch");
    double s0 = 0.0;
    for (int i = 1; i < g.M; ++i) s0 += v[i] * v[i];
    double s1 = 0.0;
    for (int i = 1; i <= g.M; ++i) {
        const double d = v[i] - v[i - 1];
        s1 += d * d;
    }
    NormTriple n;
    n.l2 = std::sqrt(g.h * s0);
    n.semi_h1 = std::sqrt(s1 / g.h);
    n.h1 = std::sqrt(n.l2 * n.l2 + n.semi_h1 * n.semi_h1);
    return n;
}

/// sqrt(||v||^2 + sum_{i=1}^{M} (v_i - v_{i-1})^2): the difference sum without
/// the 1/h factor. Diagnostic only; it is not a norm of the discrete H1 family.
inline double h1_unscaled(const Grid1D& g, const GridFunction& v) {
    const auto n = norms(g, v);
    const double s1 = n.semi_h1 * n.semi_h1 * g.h;
    return std::sqrt(n.l2 * n.l2 + s1);
}

struct TridiagonalSystem {
    std::vector<double> sub;    // sub[i] multiplies x[i-1]; sub[0] unused
    std::vector<double> diag;
    std::vector<double> super;  // super[i] multiplies x[i+1]; last unused
    std::vector<double> rhs;

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }
};

/// Smallest diag_i - |sub_i| - |super_i| over the rows.
inline double dominance_margin(const TridiagonalSystem& s) {
    const std::size_t n = s.size();
    double m = INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = i > 0 ? std::abs(s.sub[i]) : 0.0;
        const double hi = i + 1 < n ? std::abs(s.super[i]) : 0.0;
        m = std::min(m, std::abs(s.diag[i]) - lo - hi);
    }
    return m;
}

/// Thomas algorithm; requires strict diagonal dominance.
inline std::vector<double> thomas_solve(const TridiagonalSystem& s) {
    const std::size_t n = s.size();
    if (n == 0) return {};
    if (s.sub.size() != n || s.super.size() != n || s.rhs.size() != n)
        throw std::invalid_argument("thomas_solve: inconsistent array sizes");
    if (!(dominance_margin(s) > 0.0))
        throw std::domain_error("thomas_solve: system is not strictly diagonally dominant");
    std::vector<double> c(n), d(n);
    c[0] = s.super[0] / s.diag[0];
    d[0] = s.rhs[0] / s.diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = s.diag[i] - s.sub[i] * c[i - 1];
        c[i] = s.super[i] / denom;
        d[i] = (s.rhs[i] - s.sub[i] * d[i - 1]) / denom;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

}  // namespace fracwave

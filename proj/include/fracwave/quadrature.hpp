#pragma once

// Gaussian quadrature rules on [-1, 1]: Gauss-Legendre and Gauss-Jacobi.
//
// Nodes of the Jacobi rule come from the Golub-Welsch eigenvalue problem and
// are then polished by Newton steps on the three-term recurrence, so both
// rules deliver nodes and weights to near machine precision.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fracwave {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

namespace detail {

// Jacobi polynomial P_n^{(a,b)}(x) together with P_{n-1}^{(a,b)}(x).
struct JacobiPair {
    double pn;
    double pnm1;
};

inline JacobiPair jacobi_eval(int n, double a, double b, double x) {
    double p0 = 1.0;
    if (n == 0) return {p0, 0.0};
    double p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    for (int k = 2; k <= n; ++k) {
        const double s = 2.0 * k + a + b;
        const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        const double c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        const double p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    return {p1, p0};
}

// d/dx P_n^{(a,b)} from P_n and P_{n-1}; valid for |x| < 1.
inline double jacobi_derivative(int n, double a, double b, double x, const JacobiPair& p) {
    const double s = 2.0 * n + a + b;
    return (n * (a - b - s * x) * p.pn + 2.0 * (n + a) * (n + b) * p.pnm1) /
           (s * (1.0 - x * x));
}

}  // namespace detail

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1, 1], a, b > -1.
/// Nodes are returned in increasing order.
inline QuadratureRule gauss_jacobi(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be >= 1");
    if (!(a > -1.0) || !(b > -1.0)) throw std::invalid_argument("gauss_jacobi: a, b must exceed -1");

    // Golub-Welsch: symmetric tridiagonal Jacobi matrix of the orthonormal recurrence.
    Eigen::VectorXd diag(n);
    Eigen::VectorXd off(std::max(n - 1, 1));
    const double ab = a + b;
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        if (k == 0) {
            diag(k) = (b - a) / (ab + 2.0);
        } else {
            diag(k) = (b * b - a * a) / (s * (s + 2.0));
        }
        if (k >= 1) {
            const double num = 4.0 * k * (k + a) * (k + b) * (k + ab);
            const double den = s * s * (s + 1.0) * (s - 1.0);
            off(k - 1) = std::sqrt(num / den);
        }
    }
    std::vector<double> x(n);
    if (n == 1) {
        x[0] = diag(0);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(diag, off.head(n - 1), Eigen::EigenvaluesOnly);
        for (int i = 0; i < n; ++i) x[i] = eig.eigenvalues()(i);
    }

    // log of Gamma(n+a+1) Gamma(n+b+1) 2^{a+b+1} / (Gamma(n+a+b+1) n!)
    const double log_c = std::lgamma(n + a + 1.0) + std::lgamma(n + b + 1.0) -
                         std::lgamma(n + ab + 1.0) - std::lgamma(n + 1.0) +
                         (ab + 1.0) * std::numbers::ln2;

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double xi = x[i];
        for (int it = 0; it < 8; ++it) {
            const auto p = detail::jacobi_eval(n, a, b, xi);
            const double dp = detail::jacobi_derivative(n, a, b, xi, p);
            const double dx = p.pn / dp;
            xi -= dx;
            if (std::abs(dx) <= 1e-17 * std::max(1.0, std::abs(xi))) break;
        }
        const auto p = detail::jacobi_eval(n, a, b, xi);
        const double dp = detail::jacobi_derivative(n, a, b, xi, p);
        rule.nodes[i] = xi;
        rule.weights[i] = std::exp(log_c) / ((1.0 - xi * xi) * dp * dp);
    }
    return rule;
}

/// Gauss-Legendre rule on [-1, 1], nodes in increasing order.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) <= 1e-16) {
                // one more evaluation at the converged node for the weight
                p1 = 1.0;
                p2 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * k - 1.0) * z * p2 - (k - 1.0) * p3) / k;
                }
                dp = n * (z * p1 - p2) / (z * z - 1.0);
                break;
            }
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace fracwave

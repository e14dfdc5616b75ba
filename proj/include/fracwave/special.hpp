#pragma once

#include <cmath>

namespace fracwave {

/// Gamma function for real, non-pole arguments.
inline double gamma_fn(double x) { return std::tgamma(x); }

/// Generalized binomial coefficient C(g, k) for real g and integer k >= 0.
inline double binomial(double g, int k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c *= (g - i) / (i + 1.0);
    return c;
}

}  // namespace fracwave

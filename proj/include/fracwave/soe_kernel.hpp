#pragma once

// Sum-of-exponentials (SOE) approximation of the power-law kernel t^{-beta}
// on [tau_hat, T]:
//
//     t^{-beta} ~= sum_j w_j exp(-s_j t),   |error| <= eps.
//
// The construction discretizes
//
//     t^{-beta} = 1/Gamma(beta) * int_0^inf exp(-t s) s^{beta-1} ds
//
// with a Gauss-Jacobi rule on [0, P] (absorbing the s^{beta-1} endpoint
// singularity) followed by Gauss-Legendre rules on the dyadic intervals
// [P 2^k, P 2^{k+1}] up to a cut-off S where the tail is below eps. Node
// counts per interval are chosen adaptively and the result is certified by
// a log-spaced scan of the error.

#include "fracwave/quadrature.hpp"
#include "fracwave/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

struct SoeApprox {
    double beta = 0.5;
    double eps_target = 0.0;
    double tau_hat = 0.0;
    double t_final = 0.0;
    std::vector<double> nodes;    // s_j, strictly increasing
    std::vector<double> weights;  // w_j > 0
    double eps_achieved = 0.0;

    [[nodiscard]] std::size_t n_exp() const noexcept { return nodes.size(); }
};

struct SoeScan {
    double max_abs_error = 0.0;
    double argmax_t = 0.0;
};

class SoeConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sum of w_j exp(-s_j t). Outside [tau_hat, t_final] the value carries no
/// accuracy guarantee, but it is still evaluated.
inline double eval_soe(const SoeApprox& soe, double t) {
    double s = 0.0;
    for (std::size_t j = 0; j < soe.nodes.size(); ++j) s += soe.weights[j] * std::exp(-soe.nodes[j] * t);
    return s;
}

/// Points t_i = tau_hat * (T/tau_hat)^{i/(n-1)}, i = 0..n-1.
inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> t(static_cast<std::size_t>(n));
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < n; ++i) t[i] = lo * std::exp(ratio * i / (n - 1));
    t.front() = lo;
    t.back() = hi;
    return t;
}

/// Maximum of |t^{-beta} - eval_soe(t)| over n_samples log-spaced points of
/// [tau_hat, t_final].
inline SoeScan soe_error_scan(const SoeApprox& soe, int n_samples) {
    if (n_samples < 2) throw std::invalid_argument("soe_error_scan: n_samples must be >= 2");
    SoeScan out;
    const double hi = std::max(soe.t_final, soe.tau_hat);
    for (double t : log_spaced(soe.tau_hat, hi, n_samples)) {
        const double err = std::abs(std::pow(t, -soe.beta) - eval_soe(soe, t));
        if (err > out.max_abs_error) {
            out.max_abs_error = err;
            out.argmax_t = t;
        }
    }
    return out;
}

/// Number of scan points used to certify an SOE with n_exp terms.
inline int soe_certification_samples(std::size_t n_exp) { return std::max<int>(2000, static_cast<int>(10 * n_exp)); }

namespace detail {

struct SoePiece {
    double lo;
    double hi;
    bool jacobi;  // leftmost piece [0, hi] carries the s^{beta-1} weight exactly
};

// Nodes/weights of one piece with q quadrature points, kernel weight folded in.
inline void soe_piece_rule(const SoePiece& piece, double beta, int q, std::vector<double>& s,
                           std::vector<double>& w) {
    s.clear();
    w.clear();
    const double inv_gamma = 1.0 / gamma_fn(beta);
    const double half = 0.5 * (piece.hi - piece.lo);
    if (piece.jacobi) {
        const auto rule = gauss_jacobi(q, 0.0, beta - 1.0);
        const double scale = std::pow(half, beta) * inv_gamma;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            s.push_back(half * (1.0 + rule.nodes[i]));
            w.push_back(rule.weights[i] * scale);
        }
    } else {
        const auto rule = gauss_legendre(q);
        const double mid = 0.5 * (piece.hi + piece.lo);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double si = mid + half * rule.nodes[i];
            s.push_back(si);
            w.push_back(rule.weights[i] * half * std::pow(si, beta - 1.0) * inv_gamma);
        }
    }
}

inline double soe_partial_sum(std::span<const double> s, std::span<const double> w, double t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += w[j] * std::exp(-s[j] * t);
    return acc;
}

}  // namespace detail

/// Build a certified SOE approximation of t^{-beta} on [tau_hat, t_final].
///
/// Throws std::invalid_argument on bad parameters and SoeConstructionError
/// when the certification scan cannot be met within the refinement budget.
inline SoeApprox build_soe(double beta, double eps, double tau_hat, double t_final) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("build_soe: beta must lie in (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("build_soe: eps must be positive");
    if (!(tau_hat > 0.0) || !(t_final >= tau_hat))
        throw std::invalid_argument("build_soe: need 0 < tau_hat <= t_final");

    const double g_beta = gamma_fn(beta);
    // Left piece [0, P] with P * T <= 1, so exp(-t s) is smooth there.
    const double p0 = std::exp2(std::floor(std::log2(1.0 / t_final)));

    // Tail bound: int_S^inf e^{-tau_hat s} s^{beta-1} ds <= S^{beta-1} e^{-tau_hat S} / tau_hat.
    const double tail_target = 0.125 * eps * g_beta;
    double upper = 2.0 * p0;
    while (std::pow(upper, beta - 1.0) * std::exp(-tau_hat * upper) / tau_hat > tail_target) upper *= 2.0;

    std::vector<detail::SoePiece> pieces;
    pieces.push_back({0.0, p0, true});
    for (double lo = p0; lo < upper; lo *= 2.0) pieces.push_back({lo, 2.0 * lo, false});

    // Check grid for the per-piece convergence test.
    const auto check_t = log_spaced(tau_hat, t_final, 400);

    constexpr int max_depth = 8;
    constexpr int q_max = 96;
    double safety = 0.25;
    std::vector<double> s_q, w_q, s_r, w_r;
    for (int depth = 0; depth < max_depth; ++depth) {
        const double piece_tol = safety * eps / static_cast<double>(pieces.size());
        SoeApprox soe;
        soe.beta = beta;
        soe.eps_target = eps;
        soe.tau_hat = tau_hat;
        soe.t_final = t_final;
        for (const auto& piece : pieces) {
            int q = 2;
            for (;; ++q) {
                detail::soe_piece_rule(piece, beta, q, s_q, w_q);
                detail::soe_piece_rule(piece, beta, q + 4, s_r, w_r);
                double diff = 0.0;
                for (double t : check_t) {
                    diff = std::max(diff, std::abs(detail::soe_partial_sum(s_q, w_q, t) -
                                                   detail::soe_partial_sum(s_r, w_r, t)));
                }
                if (diff <= piece_tol || q >= q_max) break;
            }
            soe.nodes.insert(soe.nodes.end(), s_q.begin(), s_q.end());
            soe.weights.insert(soe.weights.end(), w_q.begin(), w_q.end());
        }
        // Pieces are disjoint and visited left to right, so nodes are increasing.
        const auto scan = soe_error_scan(soe, soe_certification_samples(soe.n_exp()));
        soe.eps_achieved = scan.max_abs_error;
        if (soe.eps_achieved <= eps) return soe;
        safety *= 0.25;
    }
    throw SoeConstructionError("build_soe: certification failed for beta=" + std::to_string(beta) +
                               ", eps=" + std::to_string(eps) + ", tau_hat=" + std::to_string(tau_hat));
}

/// CSV dump of the exponential nodes: columns node, weight.
inline void write_soe_csv(std::ostream& os, const SoeApprox& soe) {
    const auto old_precision = os.precision(17);
    os << "node,weight\n";
    for (std::size_t j = 0; j < soe.n_exp(); ++j) os << soe.nodes[j] << ',' << soe.weights[j] << '\n';
    os.precision(old_precision);
}

}  // namespace fracwave

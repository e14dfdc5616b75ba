#pragma once

// History of the discrete fractional operator.
//
// FastHistory keeps one interior grid function V_j per exponential node and
// advances it by the recursion
//
//     V_j^{n-sigma} = e^{-s_j tau} V_j^{n-1-sigma} + A_j d_{n-1} + B_j d_n,
//     d_k = vhat^{k+1-sigma} - vhat^{k-sigma},
//
// seeded at n = 1 from the reconstructed auxiliary values v^0, v^1, v^2.
// VhatSequence stores every vhat level and evaluates the bold-g sum directly.

#include "fracwave/coefficients.hpp"
#include "fracwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracwave {

class FastHistory {
public:
    /// History for grid functions with M + 1 nodes (M - 1 interior).
    FastHistory(const CoefficientEngine& engine, int M) : m_(M - 1) {
        if (!engine.is_fast()) throw std::invalid_argument("FastHistory: engine must be in fast mode");
        if (M < 2) throw std::invalid_argument("FastHistory: M must be >= 2");
        for (std::size_t r = 0; r < engine.orders().size(); ++r) {
            for (const auto& c : engine.fast_ab(r)) {
                weight_.push_back(engine.orders().lambda(r) * c.omega_hat);
                decay_.push_back(c.decay);
                a_.push_back(c.a);
                b_.push_back(c.b);
            }
        }
        nq_ = weight_.size();
        for (std::size_t q = 0; q < nq_; ++q) psi0_ += weight_[q] * b_[q];
        v_.assign(nq_ * static_cast<std::size_t>(m_), 0.0);
        sum_.assign(static_cast<std::size_t>(m_), 0.0);
        pending_.assign(static_cast<std::size_t>(m_), 0.0);
    }

    [[nodiscard]] std::size_t n_nodes() const noexcept { return nq_; }
    [[nodiscard]] int interior_size() const noexcept { return m_; }
    [[nodiscard]] bool seeded() const noexcept { return seeded_; }
    [[nodiscard]] long steps() const noexcept { return steps_; }

    /// Reals held by the state: V arrays, the cached sum, the pending
    /// correction and the per-node scalars.
    [[nodiscard]] std::size_t stored_reals() const noexcept {
        return v_.size() + sum_.size() + pending_.size() + 4 * nq_;
    }

    /// Kernel-sum multiplies performed so far.
    [[nodiscard]] double flops() const noexcept { return flops_; }

    /// V_j = (1 - sigma) [A_j (v1 - v0) + B_j (v2 - v1)].
    void seed(double sigma, const GridFunction& v0, const GridFunction& v1, const GridFunction& v2) {
        check_size(v0);
        check_size(v1);
        check_size(v2);
        const double w = 1.0 - sigma;
        for (int i = 0; i < m_; ++i) {
            const double d1 = w * (v1[i + 1] - v0[i + 1]);
            const double d2 = w * (v2[i + 1] - v1[i + 1]);
            double* vi = &v_[static_cast<std::size_t>(i) * nq_];
            double s = 0.0;
#pragma omp simd reduction(+ : s)
            for (std::size_t q = 0; q < nq_; ++q) {
                vi[q] = a_[q] * d1 + b_[q] * d2;
                s += weight_[q] * vi[q];
            }
            sum_[i] = s;
            pending_[i] = 0.0;
        }
        flops_ += 3.0 * static_cast<double>(v_.size());
        seeded_ = true;
        steps_ = 1;
    }

    /// V_j <- e^{-s_j tau} V_j + A_j dv_prev + B_j dv_next.
    void advance(const GridFunction& dv_prev, const GridFunction& dv_next) {
        if (!seeded_) throw std::logic_error("FastHistory: advance before seed");
        check_size(dv_prev);
        check_size(dv_next);
        for (int i = 0; i < m_; ++i) {
            const double dp = dv_prev[i + 1];
            const double dn = dv_next[i + 1];
            const double pend = pending_[i];
            double* vi = &v_[static_cast<std::size_t>(i) * nq_];
            double s = 0.0;
#pragma omp simd reduction(+ : s)
            for (std::size_t q = 0; q < nq_; ++q) {
                const double v = decay_[q] * (vi[q] + b_[q] * pend) + a_[q] * dp + b_[q] * dn;
                vi[q] = v;
                s += weight_[q] * v;
            }
            sum_[i] = s;
            pending_[i] = 0.0;
        }
        flops_ += 5.0 * static_cast<double>(v_.size());
        ++steps_;
    }

    /// V_j += B_j * delta, for revising the newest increment after the solve.
    /// The node arrays are updated lazily by the next advance; the weighted
    /// sum is updated at once.
    void correct_last_increment(const GridFunction& delta) {
        check_size(delta);
        for (int i = 0; i < m_; ++i) {
            pending_[i] += delta[i + 1];
            sum_[i] += psi0_ * delta[i + 1];
        }
    }

    /// sum_r lambda_r sum_j omega_hat_j V_j, with zero boundary slots.
    [[nodiscard]] GridFunction weighted_sum() const {
        GridFunction out(static_cast<std::size_t>(m_) + 2, 0.0);
        for (int i = 0; i < m_; ++i) out[i + 1] = sum_[i];
        return out;
    }

    /// V_j values of node q at the interior points, pending corrections included.
    [[nodiscard]] std::vector<double> node_state(std::size_t q) const {
        std::vector<double> out(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) out[i] = v_[static_cast<std::size_t>(i) * nq_ + q] + b_[q] * pending_[i];
        return out;
    }

    [[nodiscard]] double max_abs() const noexcept {
        double m = 0.0;
        for (int i = 0; i < m_; ++i)
            for (std::size_t q = 0; q < nq_; ++q)
                m = std::max(m, std::abs(v_[static_cast<std::size_t>(i) * nq_ + q] + b_[q] * pending_[i]));
        return m;
    }

private:
    void check_size(const GridFunction& g) const {
        if (static_cast<int>(g.size()) != m_ + 2) throw std::invalid_argument("FastHistory: grid size mismatch");
    }

    int m_;
    std::size_t nq_ = 0;
    std::vector<double> weight_, decay_, a_, b_;
    double psi0_ = 0.0;             // sum_q weight_q B_q
    std::vector<double> v_;         // point-major: nq_ entries per interior point
    std::vector<double> sum_;       // cached weighted sum per interior point
    std::vector<double> pending_;   // correction not yet folded into v_
    bool seeded_ = false;
    long steps_ = 0;
    double flops_ = 0.0;
};

/// Stored vhat^{k+1-sigma}, k = 0..n, together with psi = u_t^0.
class VhatSequence {
public:
    explicit VhatSequence(GridFunction psi) : psi_(std::move(psi)) {}

    void push(GridFunction vhat) {
        if (vhat.size() != psi_.size()) throw std::invalid_argument("VhatSequence: grid size mismatch");
        levels_.push_back(std::move(vhat));
    }

    /// Replace the newest level.
    void replace_last(GridFunction vhat) {
        if (levels_.empty()) throw std::logic_error("VhatSequence: empty");
        if (vhat.size() != psi_.size()) throw std::invalid_argument("VhatSequence: grid size mismatch");
        levels_.back() = std::move(vhat);
    }

    /// vhat^{k+1-sigma}
    [[nodiscard]] const GridFunction& level(std::size_t k) const { return levels_.at(k); }
    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] const GridFunction& psi() const noexcept { return psi_; }

    [[nodiscard]] std::size_t stored_reals() const noexcept { return (levels_.size() + 1) * psi_.size(); }

private:
    GridFunction psi_;
    std::vector<GridFunction> levels_;
};

/// sum_{k=0}^n bold-g_k^{(n+1)} (vhat^{k+1-sigma} - vhat^{k-sigma}), with
/// vhat^{-sigma} = b_tilde_n (vhat^{1-sigma} - psi) + psi. For n = 0 this is
/// bold-g_0^{(1)} (vhat^{1-sigma} - psi). Requires levels 0..n of seq.
inline GridFunction direct_history_apply(const VhatSequence& seq, CoefficientEngine& engine, long n,
                                         double* flops = nullptr) {
    if (n < 0 || static_cast<long>(seq.size()) < n + 1)
        throw std::invalid_argument("direct_history_apply: incomplete vhat sequence");
    const auto& psi = seq.psi();
    const std::size_t len = psi.size();
    GridFunction out(len, 0.0);
    if (n == 0) {
        const double g = engine.g_first();
        const auto& v1 = seq.level(0);
        for (std::size_t i = 1; i + 1 < len; ++i) out[i] = g * (v1[i] - psi[i]);
        return out;
    }
    const auto refined = engine.refined_g_row(n);
    const auto& g = refined.row;
    // k = 0: vhat^{1-sigma} - vhat^{-sigma} = (1 - b_tilde)(vhat^{1-sigma} - psi)
    const double g0 = g[0] * (1.0 - refined.b_tilde);
    const auto& v1 = seq.level(0);
    for (std::size_t i = 1; i + 1 < len; ++i) out[i] = g0 * (v1[i] - psi[i]);
    for (long k = 1; k <= n; ++k) {
        const auto& hi = seq.level(static_cast<std::size_t>(k));
        const auto& lo = seq.level(static_cast<std::size_t>(k - 1));
        const double gk = g[k];
        for (std::size_t i = 1; i + 1 < len; ++i) out[i] += gk * (hi[i] - lo[i]);
    }
    if (flops) *flops += static_cast<double>(n + 1) * static_cast<double>(len - 2);
    return out;
}

/// Auxiliary values v^0 = psi, v^{k+1} = (vhat^{k+1-sigma} - sigma v^k) / (1 - sigma).
inline GridFunction reconstruct_v(const GridFunction& vhat, const GridFunction& v_prev, double sigma) {
    GridFunction out(vhat.size());
    for (std::size_t i = 0; i < vhat.size(); ++i) out[i] = (vhat[i] - sigma * v_prev[i]) / (1.0 - sigma);
    return out;
}

}  // namespace fracwave

#pragma once

// Linearized time stepping for the multi-term fractional wave equation.
//
// Level 1 is explicit. Every later level solves
//
//     c1 u - c2 delta_x^2 u = known,
//     c1 = bold-g_n (3 - 2 sigma) / (2 tau),  c2 = (3/2 - sigma) sigma / 2,
//
// where the known part collects the history of the fractional operator
// (evaluated with u^{n+1} = 0), the explicit part of the w-average, the
// lagged nonlinearity f(u^n) and p(x, t_n).

#include "fracwave/coefficients.hpp"
#include "fracwave/grid.hpp"
#include "fracwave/history.hpp"
#include "fracwave/problems.hpp"

#include <chrono>
#include <cfloat>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

enum class Backend { fast, direct };
enum class Validation { warn, strict };

inline const char* to_string(Backend b) { return b == Backend::fast ? "fast" : "direct"; }

struct Discretization {
    int M = 100;
    long N = 100;
    Backend backend = Backend::fast;
    std::vector<double> eps;      // one SOE tolerance per order (fast backend)
    double soe_tau_hat = 0.0;     // SOE cut-off; 0 selects sigma * tau
    Validation validation = Validation::warn;
    bool keep_trajectory = false;
};

class CoefficientValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunCounters {
    double flops = 0.0;           // kernel-sum multiplies
    std::size_t stored_reals = 0; // peak live grid-function and history reals
    double wall_ms = 0.0;
    std::size_t n_exp_total = 0;
};

struct RunResult {
    double sigma = 0.0;
    double tau = 0.0;
    double h = 0.0;
    double e1 = 0.0;                  // max_n ||e^n||_{H1}, n = 0..N (when exact is known)
    double e_l2 = 0.0;                // max_n ||e^n||
    double e_h1_unscaled = 0.0;       // max_n h1_unscaled(e^n)
    double first_step_semi_h1 = 0.0;  // |e^1|_1
    double first_step_h1 = 0.0;
    GridFunction u_final;
    std::vector<GridFunction> trajectory;  // levels 0..N when requested
    std::vector<double> h1_errors;         // per level when requested
    RunCounters counters;
    long validation_failures = 0;
    std::vector<std::string> warnings;
    std::vector<double> eps_used;
};

/// Smallest SOE tolerance the construction certifies reliably in double precision:
/// a part relative to the largest kernel value plus an absolute part that grows
/// as beta -> 0 (measured, with a factor-two margin).
inline double soe_eps_floor(double beta, double tau_hat) {
    return DBL_EPSILON * (64.0 * std::pow(tau_hat, -beta) + 32.0 / (beta * beta) + 256.0);
}

/// Two-level combination w^n from u^n, u^{n-1}, u^{n-2}.
inline GridFunction build_w(double sigma, const GridFunction& u_n, const GridFunction& u_nm1,
                            const GridFunction& u_nm2) {
    const double c0 = (1.5 - sigma) * sigma;
    const double c1 = (1.5 - sigma) * (1.0 - sigma) + (sigma - 0.5) * sigma;
    const double c2 = (sigma - 0.5) * (1.0 - sigma);
    GridFunction w(u_n.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = c0 * u_n[i] + c1 * u_nm1[i] + c2 * u_nm2[i];
    return w;
}

/// w^1, with u^1 - 2 tau psi in place of u^{-1}.
inline GridFunction build_w1(double sigma, double tau, const GridFunction& u1, const GridFunction& u0,
                             const GridFunction& psi) {
    GridFunction ghost(u1.size());
    for (std::size_t i = 0; i < ghost.size(); ++i) ghost[i] = u1[i] - 2.0 * tau * psi[i];
    return build_w(sigma, u1, u0, ghost);
}

/// vhat^{k+1-sigma} = (2-2sigma)(u^{k+1}-u^k)/tau + (2sigma-1)(u^{k+1}-u^{k-1})/(2tau).
inline GridFunction vhat_level(double sigma, double tau, const GridFunction& u_next, const GridFunction& u_k,
                               const GridFunction& u_prev) {
    GridFunction v(u_k.size());
    const double a = (2.0 - 2.0 * sigma) / tau;
    const double b = (2.0 * sigma - 1.0) / (2.0 * tau);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * (u_next[i] - u_k[i]) + b * (u_next[i] - u_prev[i]);
    return v;
}

class Solver {
public:
    Solver(const ProblemSpec& problem, const Discretization& disc)
        : problem_(problem), disc_(disc), grid_(problem.x_left, problem.x_right, disc.M) {
        if (disc.N < 1) throw std::invalid_argument("Solver: N must be >= 1");
        if (!problem.f || !problem.p || !problem.phi || !problem.psi)
            throw std::invalid_argument("Solver: problem must define f, p, phi and psi");
        tau_ = problem.t_final / static_cast<double>(disc.N);
        const auto& orders = problem.orders;
        const auto sv = solve_sigma(orders, tau_);
        sigma_ = sv.sigma;

        const double s2 = sigma_ * sigma_;
        if (!(tau_ < std::min(sigma_, std::max(s2, problem.t_final * s2)))) {
            warn("tau = " + std::to_string(tau_) + " violates tau < min{sigma, max{sigma^2, T sigma^2}}");
        }

        if (disc.backend == Backend::fast) {
            if (disc.eps.size() != orders.size())
                throw std::invalid_argument("Solver: fast backend needs one eps per order");
            double tau_hat = sigma_ * tau_;
            if (disc.soe_tau_hat > 0.0) {
                if (disc.soe_tau_hat > tau_hat) {
                    warn("soe_tau_hat exceeds sigma * tau; the SOE does not cover the history range");
                }
                tau_hat = disc.soe_tau_hat;
            }
            std::vector<SoeApprox> soes;
            for (std::size_t r = 0; r < orders.size(); ++r) {
                double eps = disc.eps[r];
                const double floor = soe_eps_floor(orders.beta(r), tau_hat);
                if (eps < floor) {
                    std::ostringstream os;
                    os << "eps[" << r << "] = " << eps << " is below the double-precision floor " << floor
                       << "; using the floor";
                    warn(os.str());
                    eps = floor;
                }
                eps_used_.push_back(eps);
                soes.push_back(build_soe(orders.beta(r), eps, tau_hat, problem.t_final));
            }
            engine_ = std::make_unique<CoefficientEngine>(CoefficientEngine::fast(orders, tau_, sv, std::move(soes)));
            history_ = std::make_unique<FastHistory>(*engine_, disc.M);
        } else {
            engine_ = std::make_unique<CoefficientEngine>(CoefficientEngine::direct(orders, tau_, sv));
        }

        u_curr_ = sample(grid_, problem.phi);
        psi_ = sample(grid_, problem.psi);
        if (disc.backend == Backend::direct) vhat_seq_ = std::make_unique<VhatSequence>(psi_);
    }

    [[nodiscard]] long level() const noexcept { return n_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] double time() const noexcept { return n_ * tau_; }
    [[nodiscard]] const Grid1D& grid() const noexcept { return grid_; }
    [[nodiscard]] const GridFunction& u() const noexcept { return u_curr_; }
    [[nodiscard]] const GridFunction& psi() const noexcept { return psi_; }
    [[nodiscard]] CoefficientEngine& engine() noexcept { return *engine_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    [[nodiscard]] long validation_failures() const noexcept { return validation_failures_; }
    [[nodiscard]] const std::vector<double>& eps_used() const noexcept { return eps_used_; }
    [[nodiscard]] double flops() const noexcept { return history_ ? history_->flops() : direct_flops_; }
    [[nodiscard]] const FastHistory* fast_history() const noexcept { return history_.get(); }

    /// Live reals: solution levels, psi, vhat levels kept for stepping, plus history storage.
    [[nodiscard]] std::size_t stored_reals() const noexcept {
        std::size_t r = 6 * grid_.size();
        if (history_) r += history_->stored_reals();
        if (vhat_seq_) r += vhat_seq_->stored_reals();
        return r;
    }

    /// Right-hand side of the level-1 update at interior nodes.
    [[nodiscard]] GridFunction first_step_rhs() const {
        const double st = sigma_ * tau_;
        GridFunction phi_xx, psi_xx;
        if (problem_.phi_xx) {
            phi_xx = sample(grid_, problem_.phi_xx);
        } else {
            phi_xx = delta_x2(grid_, u_curr_);
        }
        if (problem_.psi_xx) {
            psi_xx = sample(grid_, problem_.psi_xx);
        } else {
            psi_xx = delta_x2(grid_, psi_);
        }
        GridFunction rhs(grid_.size(), 0.0);
        for (int i = 1; i < grid_.M; ++i) {
            rhs[i] = phi_xx[i] + st * psi_xx[i] + problem_.f(u_curr_[i] + st * psi_[i]) + problem_.p(grid_.x(i), st);
        }
        return rhs;
    }

    /// u^1 from bold-g_0^{(1)} (vhat^{1-sigma} - psi) = rhs.
    void first_step() {
        if (n_ != 0) throw std::logic_error("Solver: first_step called twice");
        const double g = engine_->g_first();
        if (!(g > 0.0)) throw std::logic_error("Solver: nonpositive first-level coefficient");
        const auto rhs = first_step_rhs();
        GridFunction u1(grid_.size(), 0.0);
        const double scale = tau_ / ((2.0 - 2.0 * sigma_) * g);
        for (int i = 1; i < grid_.M; ++i) u1[i] = u_curr_[i] + tau_ * psi_[i] + scale * rhs[i];

        vhat_ = GridFunction(grid_.size());
        for (std::size_t i = 0; i < vhat_.size(); ++i)
            vhat_[i] = (2.0 - 2.0 * sigma_) * (u1[i] - u_curr_[i]) / tau_ + (2.0 * sigma_ - 1.0) * psi_[i];
        if (vhat_seq_) vhat_seq_->push(vhat_);

        u_prev2_ = u_prev_;
        u_prev_ = u_curr_;
        u_curr_ = std::move(u1);
        n_ = 1;
    }

    /// u^{n+1} from u^n, u^{n-1} (and u^{n-2}) for the current level n >= 1.
    void step() {
        if (n_ < 1) throw std::logic_error("Solver: step requires the first level");
        const long n = n_;
        const double s = sigma_;
        const double c_unknown = (3.0 - 2.0 * s) / (2.0 * tau_);

        const auto check = engine_->check_step(n);
        if (!check.ok()) {
            ++validation_failures_;
            std::ostringstream os;
            os << "coefficient check failed at n=" << n << " (monotone=" << check.monotone_ok()
               << ", sign=" << check.sign_ok() << ", b_n=" << check.bn_ok() << ")";
            if (disc_.validation == Validation::strict) throw CoefficientValidationError(os.str());
            if (validation_failures_ <= 5) warn(os.str());
        }

        // vhat^{n+1-sigma} with u^{n+1} = 0
        const GridFunction zero(grid_.size(), 0.0);
        GridFunction vhat_trial = vhat_level(s, tau_, zero, u_curr_, u_prev_);

        GridFunction known_op;
        if (history_) {
            if (n == 1) {
                const GridFunction& v0 = psi_;
                const auto v1 = reconstruct_v(vhat_, v0, s);
                const auto v2 = reconstruct_v(vhat_trial, v1, s);
                history_->seed(s, v0, v1, v2);
            } else {
                GridFunction d_prev(grid_.size()), d_next(grid_.size());
                for (std::size_t i = 0; i < d_prev.size(); ++i) {
                    d_prev[i] = vhat_[i] - vhat_prev_[i];
                    d_next[i] = vhat_trial[i] - vhat_[i];
                }
                history_->advance(d_prev, d_next);
            }
            known_op = history_->weighted_sum();
            const double a0 = engine_->a0_agg();
            for (int i = 1; i < grid_.M; ++i) known_op[i] += a0 * (vhat_trial[i] - vhat_[i]);
        } else {
            vhat_seq_->push(vhat_trial);
            known_op = direct_history_apply(*vhat_seq_, *engine_, n, &direct_flops_);
        }

        // explicit parts of (w^{n+1} + w^n)/2
        const GridFunction w_n = n == 1 ? build_w1(s, tau_, u_curr_, u_prev_, psi_) : build_w(s, u_curr_, u_prev_, u_prev2_);
        const GridFunction w_next_known = build_w(s, zero, u_curr_, u_prev_);
        GridFunction avg(grid_.size());
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (w_next_known[i] + w_n[i]);
        const auto lap = delta_x2(grid_, avg);

        const double c1 = engine_->g_diagonal() * c_unknown;
        const double c2 = 0.5 * (1.5 - s) * s;
        const double t_n = n * tau_;
        const int m = grid_.M - 1;
        const double inv_h2 = 1.0 / (grid_.h * grid_.h);
        TridiagonalSystem sys;
        sys.sub.assign(m, -c2 * inv_h2);
        sys.super.assign(m, -c2 * inv_h2);
        sys.diag.assign(m, c1 + 2.0 * c2 * inv_h2);
        sys.rhs.resize(m);
        for (int i = 1; i <= m; ++i) {
            sys.rhs[i - 1] = lap[i] + problem_.f(u_curr_[i]) + problem_.p(grid_.x(i), t_n) - known_op[i];
        }
        const auto sol = thomas_solve(sys);

        GridFunction u_next(grid_.size(), 0.0);
        for (int i = 1; i <= m; ++i) u_next[i] = sol[i - 1];

        GridFunction delta(grid_.size());
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] = c_unknown * u_next[i];
            vhat_trial[i] += delta[i];
        }
        if (history_) {
            history_->correct_last_increment(delta);
        } else {
            vhat_seq_->replace_last(vhat_trial);
        }

        vhat_prev_ = std::move(vhat_);
        vhat_ = std::move(vhat_trial);
        u_prev2_ = std::move(u_prev_);
        u_prev_ = std::move(u_curr_);
        u_curr_ = std::move(u_next);
        n_ = n + 1;
    }

    /// Advance one level (first step or implicit step).
    void advance() {
        if (n_ == 0) {
            first_step();
        } else {
            step();
        }
    }

private:
    void warn(std::string msg) { warnings_.push_back(std::move(msg)); }

    ProblemSpec problem_;
    Discretization disc_;
    Grid1D grid_;
    double tau_ = 0.0;
    double sigma_ = 0.0;
    std::unique_ptr<CoefficientEngine> engine_;
    std::unique_ptr<FastHistory> history_;
    std::unique_ptr<VhatSequence> vhat_seq_;
    long n_ = 0;
    GridFunction u_curr_, u_prev_, u_prev2_, psi_;
    GridFunction vhat_, vhat_prev_;  // vhat^{n-sigma}, vhat^{n-1-sigma}
    double direct_flops_ = 0.0;
    long validation_failures_ = 0;
    std::vector<std::string> warnings_;
    std::vector<double> eps_used_;
};

/// Run all N levels; E1 is accumulated online when the exact solution is known.
inline RunResult run_solver(const ProblemSpec& problem, const Discretization& disc) {
    const auto t0 = std::chrono::steady_clock::now();
    Solver solver(problem, disc);
    const auto& grid = solver.grid();
    RunResult res;
    res.sigma = solver.sigma();
    res.tau = solver.tau();
    res.h = grid.h;
    res.counters.n_exp_total = solver.engine().n_exp_total();
    res.eps_used = solver.eps_used();

    GridFunction err(grid.size());
    auto record = [&]() {
        if (disc.keep_trajectory) res.trajectory.push_back(solver.u());
        if (!problem.has_exact()) return NormTriple{};
        const double t = solver.time();
        const auto& u = solver.u();
        for (int i = 0; i <= grid.M; ++i) err[i] = u[i] - problem.exact(grid.x(i), t);
        err.front() = 0.0;
        err.back() = 0.0;
        const auto nt = norms(grid, err);
        res.e1 = std::max(res.e1, nt.h1);
        res.e_l2 = std::max(res.e_l2, nt.l2);
        res.e_h1_unscaled = std::max(res.e_h1_unscaled, h1_unscaled(grid, err));
        if (disc.keep_trajectory) res.h1_errors.push_back(nt.h1);
        return nt;
    };

    record();
    for (long n = 0; n < disc.N; ++n) {
        solver.advance();
        const auto nt = record();
        if (n == 0) {
            res.first_step_semi_h1 = nt.semi_h1;
            res.first_step_h1 = nt.h1;
        }
        res.counters.stored_reals = std::max(res.counters.stored_reals, solver.stored_reals());
    }
    res.u_final = solver.u();
    res.counters.flops = solver.flops();
    res.validation_failures = solver.validation_failures();
    res.warnings = solver.warnings();
    res.counters.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// Per-order tolerances tau^{4 - alpha_r} * factor (factor = 1e-3 reproduces the table runs).
inline std::vector<double> eps_tau_power(const MultiTermOrders& orders, double tau, double factor) {
    std::vector<double> eps;
    for (std::size_t r = 0; r < orders.size(); ++r) eps.push_back(std::pow(tau, 4.0 - orders.alpha(r)) * factor);
    return eps;
}

}  // namespace fracwave

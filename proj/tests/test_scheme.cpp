#include "fracwave/scheme.hpp"
#include "test_util.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fracwave;

namespace {

constexpr double kPi = std::numbers::pi;
const MultiTermOrders kOrders{{1.9, 3.0}, {1.5, 2.0}, {1.2, 1.0}};

Discretization disc_for(const MultiTermOrders& o, int M, long N, Backend b) {
    Discretization d;
    d.M = M;
    d.N = N;
    d.backend = b;
    if (b == Backend::fast) d.eps = eps_tau_power(o, 1.0 / static_cast<double>(N), 1e-3);
    return d;
}

ProblemSpec linear_problem(std::function<double(double, double)> p, std::function<double(double)> phi,
                           std::function<double(double)> psi) {
    ProblemSpec s;
    s.orders = kOrders;
    s.f = [](double) { return 0.0; };
    s.p = std::move(p);
    s.phi = std::move(phi);
    s.psi = std::move(psi);
    return s;
}

}  // namespace

TEST(DeltaX2, ExactOnQuadratics) {
    const Grid1D g(0.0, 1.0, 10);
    const auto u = sample(g, [](double x) { return x * x; }, false);
    const auto d = delta_x2(g, u);
    EXPECT_EQ(d.front(), 0.0);
    EXPECT_EQ(d.back(), 0.0);
    for (int i = 1; i < 10; ++i) EXPECT_NEAR(d[i], 2.0, 1e-10);
}

TEST(DeltaX2, SineTruncationBound) {
    for (int M : {8, 16, 32}) {
        const Grid1D g(0.0, 1.0, M);
        const auto u = sample(g, [](double x) { return std::sin(kPi * x); });
        const auto d = delta_x2(g, u);
        const double bound = std::pow(kPi, 4) * g.h * g.h / 12.0;
        for (int i = 1; i < M; ++i) EXPECT_LE(std::abs(d[i] + kPi * kPi * u[i]), bound);
    }
}

TEST(DeltaX2, SizeMismatchRejected) {
    EXPECT_THROW(delta_x2(Grid1D(0.0, 1.0, 4), GridFunction(3)), std::invalid_argument);
}

TEST(Thomas, IdentitySystem) {
    TridiagonalSystem s{{0, 0, 0}, {1, 1, 1}, {0, 0, 0}, {4, 5, 6}};
    const auto x = thomas_solve(s);
    EXPECT_EQ(x, (std::vector<double>{4, 5, 6}));
}

TEST(Thomas, ThreeByThreeHandCase) {
    TridiagonalSystem s{{0, -1, -1}, {3, 3, 3}, {-1, -1, 0}, {2, 1, 2}};
    const auto x = thomas_solve(s);
    for (double v : x) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Thomas, MatchesDenseLu) {
    const int n = 50;
    TridiagonalSystem s;
    s.sub.resize(n);
    s.diag.resize(n);
    s.super.resize(n);
    s.rhs.resize(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        s.sub[i] = testutil::uniform(-1.0, 1.0);
        s.super[i] = testutil::uniform(-1.0, 1.0);
        s.diag[i] = std::abs(s.sub[i]) + std::abs(s.super[i]) + testutil::uniform(0.1, 2.0);
        s.rhs[i] = testutil::uniform(-5.0, 5.0);
        A(i, i) = s.diag[i];
        if (i > 0) A(i, i - 1) = s.sub[i];
        if (i + 1 < n) A(i, i + 1) = s.super[i];
        b[i] = s.rhs[i];
    }
    const Eigen::VectorXd ref = A.partialPivLu().solve(b);
    const auto x = thomas_solve(s);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(x[i], ref[i], 1e-12 * (1.0 + std::abs(ref[i])));
}

TEST(Thomas, RejectsNonDominant) {
    TridiagonalSystem s{{0, 1}, {1, 1}, {1, 0}, {1, 1}};
    EXPECT_THROW(thomas_solve(s), std::domain_error);
    TridiagonalSystem bad{{0}, {1, 1}, {0, 0}, {1, 1}};
    EXPECT_THROW(thomas_solve(bad), std::invalid_argument);
}

TEST(WCombination, ReproducesConstantsAndMidpoint) {
    for (double s : {0.5, 0.7, 0.93}) {
        const auto w = build_w(s, GridFunction(3, 2.5), GridFunction(3, 2.5), GridFunction(3, 2.5));
        for (double v : w) EXPECT_NEAR(v, 2.5, 1e-14);
    }
    const auto w = build_w(0.5, GridFunction(1, 4.0), GridFunction(1, 2.0), GridFunction(1, 100.0));
    EXPECT_NEAR(w[0], 3.0, 1e-15);
}

TEST(WCombination, SecondOrderAtShiftedPoint) {
    // (w^{n+1} + w^n)/2 for a quadratic in t matches its value at t_n up to O(tau^2)
    const double s = 0.8;
    auto q = [](double t) { return 1.0 + 2.0 * t + 3.0 * t * t; };
    std::vector<double> err;
    for (double tau : {0.1, 0.05, 0.025}) {
        const double tn = 1.0;
        const auto w1 = build_w(s, GridFunction(1, q(tn + tau)), GridFunction(1, q(tn)), GridFunction(1, q(tn - tau)));
        const auto w0 = build_w(s, GridFunction(1, q(tn)), GridFunction(1, q(tn - tau)), GridFunction(1, q(tn - 2 * tau)));
        err.push_back(std::abs(0.5 * (w1[0] + w0[0]) - q(tn)));
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.05);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.05);
}

TEST(FirstStep, ClosedFormForConstantSource) {
    ProblemSpec p;
    p.orders = kOrders;
    p.f = [](double u) { return std::sqrt(u * u + 5.0); };
    p.p = [](double, double) { return 0.0; };
    p.phi = [](double) { return 0.0; };
    p.psi = [](double) { return 0.0; };
    for (Backend b : {Backend::fast, Backend::direct}) {
        Solver solver(p, disc_for(kOrders, 10, 20, b));
        solver.first_step();
        const double ref = solver.tau() * std::sqrt(5.0) / ((2.0 - 2.0 * solver.sigma()) * solver.engine().g_first());
        for (int i = 1; i < 10; ++i) EXPECT_NEAR(solver.u()[i], ref, 1e-15);
        EXPECT_EQ(solver.u().front(), 0.0);
        EXPECT_EQ(solver.u().back(), 0.0);
    }
}

TEST(Solver, ZeroDataStaysZero) {
    auto p = linear_problem([](double, double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; });
    for (Backend b : {Backend::fast, Backend::direct}) {
        const auto r = run_solver(p, disc_for(kOrders, 12, 30, b));
        for (double v : r.u_final) EXPECT_EQ(v, 0.0);
    }
}

TEST(Solver, SuperpositionForLinearProblems) {
    auto p1 = linear_problem([](double x, double t) { return std::sin(kPi * x) * t; },
                             [](double x) { return x * (1.0 - x); }, [](double) { return 0.0; });
    auto p2 = linear_problem([](double x, double t) { return x * x * std::cos(t); }, [](double) { return 0.0; },
                             [](double x) { return std::sin(2.0 * kPi * x); });
    auto p12 = linear_problem([&](double x, double t) { return p1.p(x, t) + p2.p(x, t); },
                              [&](double x) { return p1.phi(x) + p2.phi(x); },
                              [&](double x) { return p1.psi(x) + p2.psi(x); });
    for (Backend b : {Backend::fast, Backend::direct}) {
        const auto d = disc_for(kOrders, 16, 40, b);
        const auto r1 = run_solver(p1, d), r2 = run_solver(p2, d), r12 = run_solver(p12, d);
        for (int i = 0; i <= 16; ++i)
            EXPECT_NEAR(r12.u_final[i], r1.u_final[i] + r2.u_final[i], 1e-12 * (1.0 + std::abs(r12.u_final[i])));
        EXPECT_EQ(r12.u_final.front(), 0.0);
        EXPECT_EQ(r12.u_final.back(), 0.0);
    }
}

// Each computed level satisfies the discrete equation assembled from the trajectory.
TEST(Solver, StepsSatisfyAssembledEquation) {
    const auto prob = manufactured_problem(kOrders, 1);
    for (Backend b : {Backend::fast, Backend::direct}) {
        auto d = disc_for(kOrders, 4, 12, b);
        Solver solver(prob, d);
        std::vector<GridFunction> u{solver.u()};
        for (int k = 0; k < 12; ++k) {
            solver.advance();
            u.push_back(solver.u());
        }
        const double s = solver.sigma(), tau = solver.tau();
        const auto& g = solver.grid();
        const auto& psi = solver.psi();
        VhatSequence seq(psi);
        GridFunction v1(g.size());
        for (std::size_t i = 0; i < v1.size(); ++i)
            v1[i] = (2.0 - 2.0 * s) * (u[1][i] - u[0][i]) / tau + (2.0 * s - 1.0) * psi[i];
        seq.push(v1);
        for (long n = 1; n < 12; ++n) {
            seq.push(vhat_level(s, tau, u[n + 1], u[n], u[n - 1]));
            const auto op = direct_history_apply(seq, solver.engine(), n);
            const auto w_next = build_w(s, u[n + 1], u[n], u[n - 1]);
            const auto w_n = n == 1 ? build_w1(s, tau, u[1], u[0], psi) : build_w(s, u[n], u[n - 1], u[n - 2]);
            GridFunction avg(g.size());
            for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (w_next[i] + w_n[i]);
            const auto lap = delta_x2(g, avg);
            for (int i = 1; i < g.M; ++i) {
                const double rhs = lap[i] + prob.f(u[n][i]) + prob.p(g.x(i), n * tau);
                EXPECT_NEAR(op[i], rhs, 1e-9 * (1.0 + std::abs(rhs))) << to_string(b) << " n=" << n << " i=" << i;
            }
        }
    }
}

TEST(Solver, SingleLevelRun) {
    const auto prob = manufactured_problem(kOrders, 1);
    const auto r = run_solver(prob, disc_for(kOrders, 20, 1, Backend::direct));
    EXPECT_GT(r.e1, 0.0);
    EXPECT_EQ(r.first_step_h1, r.e1);
    EXPECT_THROW(run_solver(prob, disc_for(kOrders, 20, 0, Backend::direct)), std::invalid_argument);
}

TEST(Solver, FastMatchesDirectWithinKernelTolerance) {
    const auto prob = manufactured_problem(kOrders, 1);
    const auto df = disc_for(kOrders, 20, 40, Backend::fast);
    const auto rf = run_solver(prob, df);
    const auto rd = run_solver(prob, disc_for(kOrders, 20, 40, Backend::direct));
    double eps_agg = 0.0;
    for (std::size_t r = 0; r < kOrders.size(); ++r) eps_agg += kOrders.lambda(r) * rf.eps_used[r];
    EXPECT_LE(std::abs(rf.e1 - rd.e1), std::max(10.0 * eps_agg, 1e-10));
    for (int i = 0; i <= 20; ++i) EXPECT_NEAR(rf.u_final[i], rd.u_final[i], std::max(10.0 * eps_agg, 1e-10));
}

TEST(Solver, FastStoredRealsIndependentOfN) {
    const auto prob = manufactured_problem(kOrders, 2);
    auto d1 = disc_for(kOrders, 16, 200, Backend::fast);
    auto d2 = disc_for(kOrders, 16, 400, Backend::fast);
    d1.eps = d2.eps;
    d1.soe_tau_hat = d2.soe_tau_hat = solve_sigma(kOrders, 1.0 / 400.0).sigma / 400.0;
    const auto r1 = run_solver(prob, d1), r2 = run_solver(prob, d2);
    EXPECT_EQ(r1.counters.stored_reals, r2.counters.stored_reals);
    const auto rd1 = run_solver(prob, disc_for(kOrders, 16, 200, Backend::direct));
    const auto rd2 = run_solver(prob, disc_for(kOrders, 16, 400, Backend::direct));
    EXPECT_GT(rd2.counters.stored_reals, rd1.counters.stored_reals);
    EXPECT_NEAR(rd2.counters.flops / rd1.counters.flops, 4.0, 0.1);
}

TEST(Solver, DirectReferenceRow) {
    const auto prob = manufactured_problem(kOrders, 1);
    const auto r = run_solver(prob, disc_for(kOrders, 1000, 40, Backend::direct));
    EXPECT_NEAR(r.e_l2, 6.8271e-04, 0.02 * 6.8271e-04);
}

TEST(Solver, FastReferenceRow) {
    const auto prob = manufactured_problem(kOrders, 1);
    const auto r = run_solver(prob, disc_for(kOrders, 1000, 20, Backend::fast));
    EXPECT_NEAR(r.e_l2, 2.7876e-03, 0.02 * 2.7876e-03);
}

TEST(Solver, EpsBelowFloorIsClamped) {
    const auto prob = manufactured_problem(kOrders, 1);
    auto d = disc_for(kOrders, 8, 20, Backend::fast);
    d.eps = {1e-30, 1e-30, 1e-30};
    Solver solver(prob, d);
    EXPECT_EQ(solver.warnings().size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_GT(solver.eps_used()[r], 1e-30);
}

TEST(Solver, StrictModeStopsOnCoefficientFailure) {
    // a nearly-first-order term with a large weight breaks the coefficient checks at coarse tau
    const MultiTermOrders o{{1.99, 1.0}, {1.01, 100.0}};
    const auto prob = manufactured_problem(o, 1);
    auto d = disc_for(o, 8, 10, Backend::direct);
    const auto warn = run_solver(prob, d);
    ASSERT_GT(warn.validation_failures, 0);
    EXPECT_FALSE(warn.warnings.empty());
    d.validation = Validation::strict;
    EXPECT_THROW(run_solver(prob, d), CoefficientValidationError);
}

TEST(Solver, ProblemWithoutDataRejected) {
    ProblemSpec p;
    p.orders = kOrders;
    EXPECT_THROW(Solver(p, disc_for(kOrders, 8, 8, Backend::direct)), std::invalid_argument);
    auto d = disc_for(kOrders, 8, 8, Backend::fast);
    d.eps.pop_back();
    EXPECT_THROW(Solver(manufactured_problem(kOrders, 1), d), std::invalid_argument);
}

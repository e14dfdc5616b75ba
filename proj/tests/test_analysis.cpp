#include "fracwave/analysis.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace fracwave;

namespace {

constexpr double kPi = std::numbers::pi;

GridFunction random_boundary_zero(int M) { return testutil::random_interior(M - 1, -2.0, 2.0); }

Discretization disc(int M, long N, Backend b, const MultiTermOrders& o) {
    Discretization d;
    d.M = M;
    d.N = N;
    d.backend = b;
    if (b == Backend::fast) d.eps = eps_tau_power(o, 1.0 / static_cast<double>(N), 1e-3);
    return d;
}

}  // namespace

TEST(Norms, ZeroVector) {
    const Grid1D g(0.0, 1.0, 8);
    const auto n = norms(g, GridFunction(9, 0.0));
    EXPECT_EQ(n.l2, 0.0);
    EXPECT_EQ(n.semi_h1, 0.0);
    EXPECT_EQ(n.h1, 0.0);
}

TEST(Norms, SineOnFourIntervals) {
    const Grid1D g(0.0, 1.0, 4);
    const auto v = sample(g, [](double x) { return std::sin(kPi * x); });
    EXPECT_NEAR(norms(g, v).l2, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(norms(g, v).l2, 0.7071068, 1e-7);
}

TEST(Norms, SemiNormHandValue) {
    const Grid1D g(0.0, 1.0, 4);
    const GridFunction v{0.0, 1.0, 0.0, -1.0, 0.0};
    // four differences of magnitude 1 over h = 1/4: |v|_1^2 = h * 4 * 16 = 16
    EXPECT_NEAR(norms(g, v).semi_h1, 4.0, 1e-14);
    EXPECT_NEAR(norms(g, v).h1, std::sqrt(0.5 + 16.0), 1e-14);
    EXPECT_NEAR(h1_unscaled(g, v), std::sqrt(0.5 + 4.0), 1e-14);
}

TEST(NormProperties, PoincareInequality) {
    for (int trial = 0; trial < 100; ++trial) {
        const double a = testutil::uniform(-2.0, 0.0), b = a + testutil::uniform(0.5, 3.0);
        const int M = 4 + static_cast<int>(testutil::uniform(0.0, 60.0));
        const Grid1D g(a, b, M);
        const auto n = norms(g, random_boundary_zero(M));
        EXPECT_LE(n.l2, (b - a) / std::sqrt(6.0) * n.semi_h1 * (1.0 + 1e-14));
        EXPECT_LE(n.h1, std::sqrt(1.0 + (b - a) * (b - a) / 6.0) * n.semi_h1 * (1.0 + 1e-14));
    }
}

TEST(NormProperties, HomogeneityAndTriangle) {
    for (int trial = 0; trial < 50; ++trial) {
        const int M = 8 + trial;
        const Grid1D g(0.0, 1.0, M);
        const auto u = random_boundary_zero(M), v = random_boundary_zero(M);
        const double c = testutil::uniform(-3.0, 3.0);
        GridFunction cu(u.size()), sum(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            cu[i] = c * u[i];
            sum[i] = u[i] + v[i];
        }
        const auto nu = norms(g, u), ncu = norms(g, cu);
        EXPECT_NEAR(ncu.l2, std::abs(c) * nu.l2, 1e-13 * (1.0 + nu.l2));
        EXPECT_NEAR(ncu.semi_h1, std::abs(c) * nu.semi_h1, 1e-13 * (1.0 + nu.semi_h1));
        EXPECT_NEAR(ncu.h1, std::abs(c) * nu.h1, 1e-13 * (1.0 + nu.h1));
        EXPECT_LE(norms(g, sum).h1, nu.h1 + norms(g, v).h1 + 1e-13);
    }
}

TEST(NormProperties, SizeMismatchRejected) { EXPECT_THROW(norms(Grid1D(0.0, 1.0, 4), GridFunction(3)), std::invalid_argument); }

TEST(Rates, HandExamples) {
    EXPECT_DOUBLE_EQ(rate_ladder({4e-4, 1e-4})[0], 2.0);
    EXPECT_NEAR(rate_ladder({2.7876e-03, 6.8270e-04})[0], 2.0297, 5e-5);
    EXPECT_EQ(rate_ladder({3e-3, 3e-3, 3e-3}), (std::vector<double>{0.0, 0.0}));
}

TEST(Rates, InvalidInputs) {
    EXPECT_THROW(rate_ladder({1e-3}), std::invalid_argument);
    EXPECT_THROW(rate_ladder({1e-3, 0.0}), std::invalid_argument);
    EXPECT_THROW(rate_ladder({-1e-3, 1e-4}), std::invalid_argument);
    EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
    EXPECT_THROW(parse_error_norm("linf"), std::invalid_argument);
}

TEST(Rates, LogLogSlopeOfPowerLaw) {
    std::vector<double> x, y;
    for (double n : {10.0, 20.0, 40.0, 80.0}) {
        x.push_back(n);
        y.push_back(3.0 * n * n);
    }
    EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
}

TEST(ErrorTracking, ExactDataGivesZero) {
    const MultiTermOrders o{{1.5, 1.0}};
    ProblemSpec p;
    p.orders = o;
    p.f = [](double) { return 0.0; };
    p.p = [](double, double) { return 0.0; };
    p.phi = [](double) { return 0.0; };
    p.psi = [](double) { return 0.0; };
    p.exact = [](double, double) { return 0.0; };
    const auto r = run_solver(p, disc(10, 10, Backend::direct, o));
    EXPECT_EQ(r.e1, 0.0);
    EXPECT_EQ(r.e_l2, 0.0);
}

TEST(ErrorTracking, OnlineMaxMatchesOfflineMax) {
    const MultiTermOrders o{{1.9, 3.0}, {1.5, 2.0}, {1.2, 1.0}};
    const auto prob = manufactured_problem(o, 1);
    for (Backend b : {Backend::fast, Backend::direct}) {
        auto d = disc(16, 32, b, o);
        d.keep_trajectory = true;
        const auto r = run_solver(prob, d);
        ASSERT_EQ(r.trajectory.size(), 33u);
        const Grid1D g(0.0, 1.0, 16);
        double e1 = 0.0, l2 = 0.0;
        for (std::size_t n = 0; n < r.trajectory.size(); ++n) {
            GridFunction e(g.size(), 0.0);
            for (int i = 1; i < g.M; ++i) e[i] = r.trajectory[n][i] - prob.exact(g.x(i), n * r.tau);
            const auto nt = norms(g, e);
            e1 = std::max(e1, nt.h1);
            l2 = std::max(l2, nt.l2);
        }
        EXPECT_DOUBLE_EQ(r.e1, e1);
        EXPECT_DOUBLE_EQ(r.e_l2, l2);
        EXPECT_EQ(r.h1_errors.front(), 0.0);
    }
}

TEST(ErrorTracking, DirectReferenceEntry) {
    const MultiTermOrders o{{1.6, 1.0}, {1.5, 2.0}, {1.2, 3.0}};
    const auto r = run_solver(manufactured_problem(o, 2), disc(1000, 80, Backend::direct, o));
    EXPECT_NEAR(select_error(r, ErrorNorm::l2), 2.4152e-04, 0.01 * 2.4152e-04);
}

TEST(ErrorTracking, SpatialReferenceEntry) {
    const MultiTermOrders o{{1.8, 3.0}, {1.4, 2.0}, {1.3, 1.0}};
    const auto r = run_solver(manufactured_problem(o, 1), disc(20, 1000, Backend::fast, o));
    EXPECT_NEAR(select_error(r, ErrorNorm::h1_unscaled), 1.7903e-04, 0.02 * 1.7903e-04);
}

TEST(Reports, CsvRoundTripReproducesRates) {
    ConvergenceReport rep;
    rep.direction = Direction::temporal;
    rep.case_name = "case1";
    rep.orders = MultiTermOrders{{1.9, 3.0}, {1.5, 2.0}, {1.2, 1.0}};
    rep.eps_rule = "table1";
    const double errs[] = {2.7876e-03, 6.8270e-04, 1.6690e-04, 4.0829e-05};
    double tau = 1.0 / 20.0;
    for (double e : errs) {
        LadderEntry le;
        le.tau = tau;
        le.h = 1e-3;
        le.e1 = e;
        le.backend = "fast";
        le.n_exp_total = 300;
        le.stored_reals = 1234;
        rep.entries.push_back(le);
        tau /= 2.0;
    }
    rep.compute_rates();
    EXPECT_TRUE(std::isnan(rep.entries[0].rate));
    EXPECT_NEAR(rep.entries[1].rate, 2.0297, 5e-5);
    EXPECT_NEAR(rep.entries[2].rate, 2.0323, 5e-5);
    EXPECT_NEAR(rep.entries[3].rate, 2.0313, 5e-5);

    std::stringstream ss;
    write_csv_header(ss);
    write_csv_rows(ss, rep, false);
    const auto rows = read_csv(ss);
    ASSERT_EQ(rows.size(), 4u);
    std::vector<double> e;
    for (const auto& r : rows) e.push_back(r.e1);
    const auto rates = rate_ladder(e);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_NEAR(rates[k - 1], rows[k].rate, 1e-4);
        EXPECT_NEAR(rates[k - 1], rep.entries[k].rate, 1e-4);
    }
    EXPECT_TRUE(std::isnan(rows[0].rate));
    EXPECT_EQ(rows[0].alphas, "1.9;1.5;1.2");
    EXPECT_EQ(rows[0].lambdas, "3;2;1");
    EXPECT_EQ(rows[2].backend, "fast");
    EXPECT_EQ(rows[3].stored_reals, 1234u);
    EXPECT_EQ(rows[0].wall_ms, 0.0);
}

TEST(Reports, TextTableMarksFirstRate) {
    ConvergenceReport rep;
    rep.direction = Direction::spatial;
    rep.case_name = "case2";
    rep.orders = MultiTermOrders{{1.5, 1.0}};
    rep.entries = {{0.001, 0.1, 7.1988e-04}, {0.001, 0.05, 1.5600e-04}};
    rep.compute_rates();
    std::ostringstream os;
    write_text_table(os, rep);
    const auto text = os.str();
    EXPECT_NE(text.find("Rate2"), std::string::npos);
    EXPECT_NE(text.find("7.1988e-04"), std::string::npos);
    EXPECT_NE(text.find(" * "), std::string::npos);
    EXPECT_NE(text.find("2.2062"), std::string::npos);
}

TEST(Reports, ReadCsvRejectsForeignHeader) {
    std::istringstream in("a,b,c\n1,2,3\n");
    EXPECT_THROW(read_csv(in), std::runtime_error);
}

TEST(Scaling, ExponentsStorageAndSpeedup) {
    std::vector<ScalingPoint> pts;
    for (long N : {10000L, 20000L, 40000L}) {
        const double n = static_cast<double>(N);
        pts.push_back({N, Backend::direct, 1e-6 * n * n, static_cast<std::size_t>(16 * N), 0.5 * n * n, 0});
        pts.push_back({N, Backend::fast, 1e-3 * n, 5000, 400.0 * n, 300});
    }
    const auto rep = scaling_report(pts);
    EXPECT_NEAR(rep.direct_work_exponent, 2.0, 1e-12);
    EXPECT_NEAR(rep.fast_work_exponent, 1.0, 1e-12);
    EXPECT_NEAR(rep.direct_time_exponent, 2.0, 1e-12);
    EXPECT_TRUE(rep.fast_stored_constant);
    EXPECT_NEAR(rep.speedup_at_max_n, 40.0, 1e-9);
    std::ostringstream os;
    write_scaling_table(os, rep);
    EXPECT_NE(os.str().find("speedup at max N: 40.00"), std::string::npos);

    pts[3].stored_reals = 5001;
    EXPECT_FALSE(scaling_report(pts).fast_stored_constant);
}

TEST(Scaling, DirectWorkQuadruplesOnDoubling) {
    const MultiTermOrders o{{1.6, 3.0}, {1.5, 2.0}, {1.2, 1.0}};
    const auto prob = manufactured_problem(o, 1);
    const auto r1 = run_solver(prob, disc(16, 400, Backend::direct, o));
    const auto r2 = run_solver(prob, disc(16, 800, Backend::direct, o));
    EXPECT_NEAR(r2.counters.flops / r1.counters.flops, 4.0, 0.6);
}

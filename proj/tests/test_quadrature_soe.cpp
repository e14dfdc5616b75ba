#include "fracwave/multi_term.hpp"
#include "fracwave/quadrature.hpp"
#include "fracwave/soe_kernel.hpp"
#include "fracwave/special.hpp"
#include "fracwave/analysis.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace fracwave;

TEST(Gamma, HalfIsSqrtPi) { EXPECT_NEAR(gamma_fn(0.5), std::sqrt(std::numbers::pi), 1e-14); }

TEST(Gamma, Recurrence) {
    for (double x : {0.1, 0.37, 0.5, 0.9, 1.3, 2.5, 3.7}) EXPECT_NEAR(gamma_fn(x + 1.0), x * gamma_fn(x), 1e-13 * gamma_fn(x + 1.0));
}

TEST(Gamma, BinomialMatchesHandValues) {
    EXPECT_DOUBLE_EQ(binomial(5.0, 2), 10.0);
    EXPECT_NEAR(binomial(0.5, 3), 0.5 * -0.5 * -1.5 / 6.0, 1e-16);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
    const auto rule = gauss_legendre(6);
    for (int k = 0; k <= 11; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
        const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
        EXPECT_NEAR(s, exact, 1e-14) << "k=" << k;
    }
}

TEST(Quadrature, GaussJacobiMomentsOfEndpointWeight) {
    for (double b : {-0.8, -0.5, -0.1}) {
        const auto rule = gauss_jacobi(8, 0.0, b);
        for (int k = 0; k <= 15; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(1.0 + rule.nodes[i], k);
            const double exact = std::pow(2.0, b + k + 1) / (b + k + 1);
            EXPECT_NEAR(s, exact, 1e-12 * exact) << "b=" << b << " k=" << k;
        }
    }
}

TEST(Quadrature, GaussJacobiNodesInsideInterval) {
    const auto rule = gauss_jacobi(20, 0.0, -0.7);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        EXPECT_GT(rule.nodes[i], -1.0);
        EXPECT_LT(rule.nodes[i], 1.0);
        EXPECT_GT(rule.weights[i], 0.0);
        if (i) EXPECT_GT(rule.nodes[i], rule.nodes[i - 1]);
    }
}

TEST(Soe, ValueAtOneIsOne) {
    const auto soe = build_soe(0.5, 1e-8, 0.01, 1.0);
    EXPECT_NEAR(eval_soe(soe, 1.0), 1.0, 1e-8);
}

TEST(Soe, MatchesPowerAtInteriorPoint) {
    const auto soe = build_soe(0.5, 1e-8, 0.01, 1.0);
    EXPECT_NEAR(eval_soe(soe, 0.04), std::pow(0.04, -0.5), 1e-8);
    EXPECT_NEAR(std::pow(0.04, -0.5), 5.0, 1e-14);
}

TEST(Soe, BoundaryOfGuaranteeInterval) {
    const auto soe = build_soe(0.5, 1e-8, 0.01, 1.0);
    EXPECT_NEAR(eval_soe(soe, soe.tau_hat), std::pow(soe.tau_hat, -0.5), soe.eps_target);
}

TEST(Soe, DegenerateSingleNodeAtZero) {
    SoeApprox soe;
    soe.nodes = {1.0};
    soe.weights = {1.0};
    EXPECT_DOUBLE_EQ(eval_soe(soe, 0.0), 1.0);
}

TEST(Soe, ScanOfExactReplayIsZero) {
    // beta = 0 with a single zero-rate node reproduces t^0 exactly
    SoeApprox soe;
    soe.beta = 0.0;
    soe.tau_hat = 0.01;
    soe.t_final = 1.0;
    soe.nodes = {0.0};
    soe.weights = {1.0};
    const auto scan = soe_error_scan(soe, 100);
    EXPECT_EQ(scan.max_abs_error, 0.0);
}

TEST(Soe, DenseScanWithinTolerance) {
    const auto soe = build_soe(0.2, 1e-6, 0.005, 1.0);
    EXPECT_LE(soe_error_scan(soe, 10000).max_abs_error, 1e-6);
    EXPECT_LE(soe_error_scan(soe, 10 * soe_certification_samples(soe.n_exp())).max_abs_error, 1e-6);
}

TEST(Soe, ScanDetectsTruncation) {
    auto soe = build_soe(0.5, 1e-8, 0.01, 1.0);
    soe.nodes.erase(soe.nodes.begin());
    soe.weights.erase(soe.weights.begin());
    EXPECT_GT(soe_error_scan(soe, 4000).max_abs_error, soe.eps_target);
}

TEST(Soe, ReferenceToleranceRule) {
    const MultiTermOrders o{{1.9, 3.0}, {1.5, 2.0}, {1.2, 1.0}};
    const double tau = 1.0 / 40.0;
    const double sigma = solve_sigma(o, tau).sigma;
    const double eps = std::pow(tau, 4.0 - 1.9) * 1e-3;
    const auto soe = build_soe(0.9, eps, sigma * tau, 1.0);
    EXPECT_LE(soe.eps_achieved, eps);
    EXPECT_LE(soe_error_scan(soe, 10 * soe_certification_samples(soe.n_exp())).max_abs_error, eps);
}

TEST(Soe, InvalidParametersRejected) {
    EXPECT_THROW(build_soe(0.0, 1e-6, 0.01, 1.0), std::invalid_argument);
    EXPECT_THROW(build_soe(1.0, 1e-6, 0.01, 1.0), std::invalid_argument);
    EXPECT_THROW(build_soe(0.5, 0.0, 0.01, 1.0), std::invalid_argument);
    EXPECT_THROW(build_soe(0.5, 1e-6, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(build_soe(0.5, 1e-6, 2.0, 1.0), std::invalid_argument);
    SoeApprox soe;
    soe.nodes = {1.0};
    soe.weights = {1.0};
    EXPECT_THROW(soe_error_scan(soe, 1), std::invalid_argument);
}

TEST(Soe, NodeCountGrowsSubquadraticallyInLogCutoff) {
    std::vector<double> logs, counts;
    double tau_hat = 1e-3;
    for (int k = 0; k < 5; ++k) {
        const auto soe = build_soe(0.6, 1e-8, tau_hat, 1.0);
        logs.push_back(std::log(1.0 / tau_hat));
        counts.push_back(static_cast<double>(soe.n_exp()));
        tau_hat *= 0.5;
    }
    for (std::size_t k = 1; k < counts.size(); ++k) EXPECT_GE(counts[k], counts[k - 1]);
    EXPECT_LT(loglog_slope(logs, counts), 2.0);
}

TEST(Soe, CsvDump) {
    const auto soe = build_soe(0.5, 1e-6, 0.01, 1.0);
    std::ostringstream os;
    write_soe_csv(os, soe);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "node,weight");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, soe.n_exp());
}

// Property sweep over generated (beta, eps, tau_hat) triples.
TEST(SoeProperties, StructureDecayPositivityAndHonesty) {
    for (int trial = 0; trial < 12; ++trial) {
        const double beta = testutil::uniform(0.05, 0.95);
        const double eps = std::pow(10.0, -testutil::uniform(4.0, 10.0));
        const double tau_hat = std::pow(10.0, -testutil::uniform(1.0, 4.5));
        const auto soe = build_soe(beta, eps, tau_hat, 1.0);
        ASSERT_GE(soe.n_exp(), 1u);
        for (std::size_t j = 0; j < soe.n_exp(); ++j) {
            EXPECT_GT(soe.nodes[j], 0.0);
            EXPECT_GT(soe.weights[j], 0.0);
            if (j) EXPECT_GT(soe.nodes[j], soe.nodes[j - 1]);
        }
        EXPECT_LE(soe.eps_achieved, eps);
        const auto dense = soe_error_scan(soe, 10 * soe_certification_samples(soe.n_exp()));
        EXPECT_LE(dense.max_abs_error, 2.0 * soe.eps_achieved) << "beta=" << beta << " eps=" << eps;
        double prev = INFINITY;
        for (double t : log_spaced(tau_hat, 1.0, 500)) {
            const double v = eval_soe(soe, t);
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
}

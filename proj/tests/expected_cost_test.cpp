#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dne/error.hpp"
#include "dne/expected_cost.hpp"
#include "dne/grid_model.hpp"

namespace dne {
namespace {

const std::string kData = DNE_DATA_DIR;

TEST(JTau, DecaysForLargeThresholds) {
    EXPECT_LE(j_tau(1000.0), 1e-3);
    EXPECT_LE(j_tau(2000.0), j_tau(1000.0) + 1e-9);
    EXPECT_GE(j_tau(1000.0), -1e-9);
}

TEST(JTau, ZeroThresholdNearOne) {
    // sup P(zeta > 0) needs a far-left atom of mass ~1/a^2, so the grid must be wide
    JOracleOptions opt;
    opt.grid_halfwidth = 40.0;
    opt.grid_points = 8001;
    const double o = j_tau_oracle(0.0, opt);
    EXPECT_NEAR(j_tau(0.0), o, 1e-3);
    EXPECT_LE(o, 1.0 + 1e-9);
}

TEST(JTau, Convexity) {
    EXPECT_LE(j_tau(0.5), (j_tau(0.25) + j_tau(0.75)) / 2.0 + 1e-8);
    const double step = 3.0 / 49.0;
    std::vector<double> v;
    for (int i = 0; i < 50; ++i) v.push_back(j_tau(i * step));
    for (int i = 1; i + 1 < 50; ++i) EXPECT_GE(v[i - 1] - 2.0 * v[i] + v[i + 1], -1e-7) << i;
    for (int i = 1; i < 50; ++i) EXPECT_LE(v[i], v[i - 1] + 1e-9) << i;
}

TEST(JTau, Errors) {
    EXPECT_THROW(j_tau(-0.1), Error);
    struct SocOnly : conic::Backend {
        std::string name() const override { return "soc-only"; }
        bool supports_psd() const override { return false; }
        conic::Solution solve(const conic::ConicProgram&, const conic::Settings&) const override { return {}; }
    } soc;
    try {
        j_tau(0.3, {}, &soc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Capability);
    }
}

TEST(JTauOracle, BelowConicAtPositiveThresholds) {
    for (double tau : {0.25, 0.5, 1.0, 2.0}) {
        const double o = j_tau_oracle(tau), j = j_tau(tau);
        EXPECT_GE(j - o, -1e-7) << tau;
        EXPECT_LE(j - o, 2e-3) << tau;
    }
}

TEST(JTauOracle, ExactVariantAtZero) {
    JOracleOptions opt;
    opt.h = HVariant::Exact;
    // the symmetric +-1 law gives E[zeta^+] / 2 = 1/4
    EXPECT_GE(j_tau_oracle(0.0, opt), 0.25 - 1e-9);
    EXPECT_NEAR(h_value(HVariant::Exact, 0.0, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(h_value(HVariant::Ratio, 0.5, 1.0), 0.5, 1e-15);
    EXPECT_EQ(h_value(HVariant::Ratio, 0.5, -1.0), 0.0);
}

TEST(JTauOracle, RefinementNeverDecreases) {
    for (auto h : {HVariant::Ratio, HVariant::Exact})
        for (double tau : {0.25, 1.0}) {
            JOracleOptions coarse, fine;
            coarse.h = fine.h = h;
            coarse.grid_points = 1001;  // every point reappears in the 2001 grid
            EXPECT_GE(j_tau_oracle(tau, fine), j_tau_oracle(tau, coarse) - 1e-9);
        }
}

TEST(G, SeparableAggregate) {
    EXPECT_EQ(g({{0.0, 5.0, 0.3}, {0.0, 2.0, 1.0}}), 0.0);
    EXPECT_NEAR(g({{1.0, 1.0 / std::sqrt(3.0), 0.0}}), j_tau(0.0), 1e-12);
    const CostTerm one{2.0, 4.0, 0.7};
    EXPECT_NEAR(g({one, one}), 2.0 * g({one}), 1e-9);
    EXPECT_NEAR(g({one, {1.0, 3.0, 0.2}}), g({one}) + g({{1.0, 3.0, 0.2}}), 1e-9);
    EXPECT_THROW(g({{1.0, 1.0, -0.5}}), Error);
    EXPECT_THROW(g({{-1.0, 1.0, 0.5}}), Error);
}

TEST(PlusMinus, Mappings) {
    AmbiguitySet a;
    a.mean = Eigen::MatrixXd::Zero(2, 3);
    a.stddev = Eigen::MatrixXd::Constant(2, 3, 4.0);
    a.stddev(1, 2) = 6.0;
    const Eigen::MatrixXd at_mean = a.mean;
    EXPECT_NEAR(p_minus(a, at_mean), std::sqrt(3.0) * a.stddev.sum() * j_tau(0.0), 1e-9);

    Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(2, 3, 5.0), wider = hi;
    wider(0, 1) = 9.0;
    EXPECT_LE(p_minus(a, wider), p_minus(a, hi) + 1e-12);

    const Eigen::MatrixXd lo = -hi, c = Eigen::MatrixXd::Constant(2, 3, 2.0);
    EXPECT_NEAR(p_plus(a, lo, c), 2.0 * p_plus(a, lo), 1e-9);
    EXPECT_THROW(p_plus(a, hi), Error);  // eps_lo above the mean
}

TEST(CplaTest, BreakpointsAndBounds) {
    const auto c = build_cpla(0.0, 4.0, 8);
    ASSERT_EQ(c.breakpoints.size(), 9u);
    for (int h = 0; h <= 8; ++h) {
        EXPECT_NEAR(c.breakpoints[h], 0.5 * h, 1e-15);
        EXPECT_NEAR(c.evaluate(c.breakpoints[h]), j_tau(c.breakpoints[h]), 1e-6);
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    const auto fine = build_cpla(0.0, 4.0, 64);
    double gap8 = 0.0, gap64 = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double tau = u(rng), j = j_tau(tau);
        EXPECT_GE(c.evaluate(tau) - j, -1e-6) << tau;
        EXPECT_GE(fine.evaluate(tau) - j, -1e-6) << tau;
        gap8 = std::max(gap8, c.evaluate(tau) - j);
        gap64 = std::max(gap64, fine.evaluate(tau) - j);
    }
    EXPECT_LE(gap64, gap8);
    EXPECT_THROW(build_cpla(0.0, 1.0, 0), Error);
    EXPECT_THROW(build_cpla(1.0, 1.0, 4), Error);
    EXPECT_EQ(format_cpla(build_cpla(0.0, 1.0, 1)).substr(0, 8), "h,n_h,J\n");
}

struct Extended : ::testing::Test {
    GridCase grid = read_case_file(kData + "/case2.m");
    AmbiguitySet amb = schedule_ambiguity(grid);

    DneSolution run(double dminus) {
        SolveConfig cfg;
        cfg.delta = 200.0;
        cfg.delta_minus = dminus;
        cfg.delta_plus = 5.0;
        return solve_drco(grid, amb, cfg);
    }
};

TEST_F(Extended, CplaTermsBoundTheExactRisk) {
    const auto s = run(10.0);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_TRUE(s.verify.passed) << s.verify.detail;
    EXPECT_GE(s.minus_term, 10.0 * p_minus(amb, s.eps_hi) - 1e-6);
    EXPECT_GE(s.plus_term, 5.0 * p_plus(amb, s.eps_lo) - 1e-6);
    EXPECT_NEAR(s.objective, s.dispatch_cost - s.utilization_reward + s.plus_term + s.minus_term,
                1e-6 * std::abs(s.objective));
}

TEST_F(Extended, HeavierUnderestimatePenalty) {
    const auto a = run(1.0), b = run(50.0);
    ASSERT_TRUE(a.optimal() && b.optimal());
    EXPECT_GE(b.objective, a.objective - 1e-6);
    // the CPLA bound of P- the model actually prices
    EXPECT_LE(b.minus_term / 50.0, a.minus_term / 1.0 + 1e-6);
}

}  // namespace
}  // namespace dne

#include <cmath>

#include <gtest/gtest.h>

#include "dne/error.hpp"
#include "dne/frontier.hpp"

namespace dne {
namespace {

const std::string kData = DNE_DATA_DIR;

TEST(Schedule, ThirtyThreePoints) {
    const auto d = preset_schedule();
    ASSERT_EQ(d.size(), 33u);
    EXPECT_EQ(d.front(), 1.0);
    EXPECT_EQ(d[10], 1000.0);
    EXPECT_EQ(d[11], 1400.0);
    EXPECT_EQ(d[20], 5000.0);
    EXPECT_EQ(d[25], 10000.0);
    EXPECT_EQ(d.back(), 38000.0);
    for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GT(d[i], d[i - 1]);
}

struct Sweep : ::testing::Test {
    static void SetUpTestSuite() {
        grid = new GridCase(read_case_file(kData + "/case14_dne.m"));
        amb = new AmbiguitySet(schedule_ambiguity(*grid));
        eval = new ScenarioSet(sample_gaussian(amb->mean, amb->stddev, 1000, 3));
    }
    static void TearDownTestSuite() {
        delete grid;
        delete amb;
        delete eval;
    }
    static GridCase* grid;
    static AmbiguitySet* amb;
    static ScenarioSet* eval;
};
GridCase* Sweep::grid = nullptr;
AmbiguitySet* Sweep::amb = nullptr;
ScenarioSet* Sweep::eval = nullptr;

TEST_F(Sweep, RejectsBadSchedules) {
    EXPECT_THROW(sweep(*grid, *amb, {}, *eval), Error);
    EXPECT_THROW(sweep(*grid, *amb, {5.0, 5.0}, *eval), Error);
    EXPECT_THROW(sweep(*grid, *amb, {10.0, 1.0}, *eval), Error);
}

TEST_F(Sweep, SingleDeltaMatchesDirectSolve) {
    const auto table = sweep(*grid, *amb, {10000.0}, *eval);
    ASSERT_EQ(table.rows.size(), 1u);
    const auto& row = table.rows[0];
    SolveConfig cfg;
    cfg.delta = 10000.0;
    const auto s = solve_drco(*grid, *amb, cfg);
    const auto rep = evaluate(s, *grid, *eval);
    ASSERT_TRUE(row.optimal());
    EXPECT_TRUE(row.verified);
    EXPECT_EQ(row.dispatch_cost, s.dispatch_cost);
    EXPECT_EQ(row.u, s.u);
    EXPECT_EQ(row.utilization, rep.utilization);
    for (int t = 0; t < grid->periods(); ++t) {
        EXPECT_NEAR(row.w_lo[t], s.eps_lo.col(t).sum() + amb->mean.col(t).sum(), 1e-12);
        EXPECT_NEAR(row.mw_hi[t], s.eps_hi.col(t).sum() + grid->forecast.col(t).sum(), 1e-12);
        EXPECT_LE(row.w_lo[t], row.w_hi[t]);
    }
}

TEST_F(Sweep, EndpointsOrdered) {
    const auto table = sweep(*grid, *amb, {1.0, 38000.0}, *eval);
    const auto &a = table.rows[0], &b = table.rows[1];
    ASSERT_TRUE(a.optimal() && b.optimal());
    EXPECT_GE(b.dispatch_cost, a.dispatch_cost * (1.0 - 1e-6));
    EXPECT_GE(b.u, a.u - 1e-6);
    EXPECT_GT(b.u, a.u);
}

TEST_F(Sweep, ThreadsKeepScheduleOrder) {
    const std::vector<double> d{100.0, 2000.0, 9000.0, 30000.0};
    SweepOptions par;
    par.threads = 3;
    const auto serial = sweep(*grid, *amb, d, *eval), threaded = sweep(*grid, *amb, d, *eval, par);
    ASSERT_EQ(threaded.rows.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(threaded.rows[i].delta, d[i]);
        EXPECT_EQ(threaded.rows[i].dispatch_cost, serial.rows[i].dispatch_cost);
        EXPECT_EQ(threaded.rows[i].u, serial.rows[i].u);
    }
    for (std::size_t i = 1; i < d.size(); ++i) {
        EXPECT_GE(serial.rows[i].u, serial.rows[i - 1].u - 1e-6);
        EXPECT_GE(serial.rows[i].dispatch_cost, serial.rows[i - 1].dispatch_cost * (1.0 - 1e-6));
    }
}

TEST_F(Sweep, FailedRowsAreKept) {
    // a floor of u = 1 needs an unbounded box
    SweepOptions opt;
    opt.config.u0 = 1.0;
    const auto table = sweep(*grid, *amb, {1.0, 2.0}, *eval, opt);
    ASSERT_EQ(table.rows.size(), 2u);
    for (const auto& r : table.rows) {
        EXPECT_FALSE(r.optimal());
        EXPECT_TRUE(r.w_lo.empty());
    }
    EXPECT_NE(table.format().find("infeasible"), std::string::npos);
}

TEST_F(Sweep, Exports) {
    const auto table = sweep(*grid, *amb, {1.0, 500.0}, *eval);
    const auto f = table.format(), r = table.format_ranges();
    EXPECT_EQ(f.substr(0, f.find('\n')), "delta,status,verified,dispatch_cost,u,objective,min_utilization,wall_time,iterations");
    EXPECT_EQ(std::count(f.begin(), f.end(), '\n'), 3);
    EXPECT_EQ(std::count(r.begin(), r.end(), '\n'), 1 + 2 * grid->periods());
}

}  // namespace
}  // namespace dne

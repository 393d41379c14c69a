#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dne/drco_builder.hpp"
#include "dne/error.hpp"
#include "dne/grid_model.hpp"
#include "dne/uncertainty.hpp"

namespace dne {
namespace {

const std::string kData = DNE_DATA_DIR;

// One or two buses, no line unless asked, T periods, given units and loads.
GridCase tiny(std::vector<Generator> gens, std::vector<double> loads_bus2, double line_cap = conic::kInf,
              std::vector<Renewable> ren = {}, Eigen::MatrixXd forecast = {}) {
    GridCase g;
    g.name = "tiny";
    g.buses = {{1, true, 0.0}, {2, false, 0.0}};
    g.lines = {{0, 1, 0.1, line_cap}};
    g.generators = std::move(gens);
    g.renewables = std::move(ren);
    g.time.periods = static_cast<int>(loads_bus2.size());
    g.load = Eigen::MatrixXd::Zero(2, g.time.periods);
    for (int t = 0; t < g.time.periods; ++t) g.load(1, t) = loads_bus2[t];
    g.forecast = forecast.size() ? forecast : Eigen::MatrixXd::Zero(g.num_renewables(), g.time.periods);
    g.validate();
    g.shift_factors = compute_shift_factors(g);
    return g;
}

Generator unit(int bus, double lo, double hi, CostCurve c, double ramp = conic::kInf) {
    Generator u;
    u.bus = bus;
    u.p_min = lo;
    u.p_max = hi;
    u.ramp_up = u.ramp_down = ramp;
    u.cost = c;
    return u;
}

AmbiguitySet empty_ambiguity(const GridCase& g) {
    AmbiguitySet a;
    a.mean = Eigen::MatrixXd::Zero(g.num_renewables(), g.periods());
    a.stddev = Eigen::MatrixXd::Ones(g.num_renewables(), g.periods());
    return a;
}

struct Case14 : ::testing::Test {
    static void SetUpTestSuite() {
        grid = new GridCase(read_case_file(kData + "/case14_dne.m"));
        amb = new AmbiguitySet(schedule_ambiguity(*grid));
        SolveConfig cfg;
        cfg.delta = 10000.0;
        sol = new DneSolution(solve_drco(*grid, *amb, cfg));
    }
    static void TearDownTestSuite() {
        delete grid;
        delete amb;
        delete sol;
    }
    static GridCase* grid;
    static AmbiguitySet* amb;
    static DneSolution* sol;
};
GridCase* Case14::grid = nullptr;
AmbiguitySet* Case14::amb = nullptr;
DneSolution* Case14::sol = nullptr;

TEST(MinHalfWidth, MatchesGaussInversion) {
    const double sigma = 8.0;
    for (double u : {0.70, 0.80, 8.0 / 9.0, 0.95}) {
        conic::VerifyReport rep;
        const double w = min_half_width(sigma, u, {}, &rep);
        const double expect = sigma * 2.0 / (3.0 * std::sqrt(1.0 - u));
        EXPECT_NEAR(w / expect, 1.0, 1e-6) << u;
        EXPECT_TRUE(rep.passed) << rep.detail;
    }
    // s = 0.25 gives 4/3 sigma, u = 8/9 gives 2 sigma
    EXPECT_NEAR(min_half_width(1.0, 0.75), 4.0 / 3.0, 1e-6);
    EXPECT_NEAR(min_half_width(1.0, 8.0 / 9.0), 2.0, 1e-6);
    EXPECT_NEAR(gauss_worst_coverage(min_half_width(1.0, 8.0 / 9.0)), 8.0 / 9.0, 1e-6);
}

TEST(Config, FloorAtTwoThirdsRejected) {
    const auto g = read_case_file(kData + "/case2.m");
    SolveConfig cfg;
    cfg.u0 = 2.0 / 3.0;
    EXPECT_THROW(build_drco(g, schedule_ambiguity(g), cfg), Error);
    cfg.u0 = 0.7;
    cfg.segments = 0;
    cfg.delta_plus = 1.0;
    EXPECT_THROW(build_drco(g, schedule_ambiguity(g), cfg), Error);
}

TEST(Objective, LinearCostAtFifty) {
    const auto g = tiny({unit(0, 0, 100, CostCurve::linear(2.0))}, {50});
    const auto s = solve_drco(g, empty_ambiguity(g), {});
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_NEAR(s.p_hat(0, 0), 50.0, 1e-6);
    EXPECT_NEAR(s.objective, 100.0, 1e-6);
    EXPECT_NEAR(s.dispatch_cost, 100.0, 1e-6);
}

TEST(Objective, QuadraticEpigraphTight) {
    const auto g = tiny({unit(0, 0, 10, CostCurve::quadratic(1.0, 0.0))}, {3});
    SolveConfig cfg;
    const auto m = build_drco(g, empty_ambiguity(g), cfg);
    const auto sol = conic::solve(m.program, cfg.settings);
    ASSERT_TRUE(sol.optimal());
    const int y = m.vars.cost[0];
    ASSERT_GE(y, 0);
    // y holds p^2 / rho with rho = p_max
    EXPECT_NEAR(sol.x[y] * 10.0, 9.0, 1e-6);
    EXPECT_NEAR(sol.objective, 9.0, 1e-6);
}

TEST(Objective, PiecewiseCost) {
    const auto c = CostCurve::piecewise({{0, 0}, {10, 10}, {20, 40}});
    const auto g = tiny({unit(0, 0, 20, c)}, {15});
    const auto s = solve_drco(g, empty_ambiguity(g), {});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.objective, 25.0, 1e-6);
}

TEST(Nominal, CapacityBindsDemand) {
    // 150 MW of load against a 100 MW unit cannot be served
    const auto g = tiny({unit(0, 0, 100, CostCurve::linear(2.0))}, {150});
    const auto s = solve_drco(g, empty_ambiguity(g), {});
    EXPECT_EQ(s.status, conic::Status::Infeasible);
    EXPECT_FALSE(s.warnings.empty());
}

TEST(Nominal, LineLimitCapsImport) {
    const auto g = tiny({unit(0, 0, 100, CostCurve::linear(1.0)), unit(1, 0, 100, CostCurve::linear(5.0))}, {30}, 10.0);
    const auto s = solve_drco(g, empty_ambiguity(g), {});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.p_hat(0, 0), 10.0, 1e-6);
    EXPECT_NEAR(s.p_hat(1, 0), 20.0, 1e-6);
}

TEST(Nominal, RampBetweenPeriods) {
    // 0.5 MW/min over 60 min allows 30 MW per step
    auto g = tiny({unit(0, 0, 100, CostCurve::linear(1.0), 0.5), unit(1, 0, 100, CostCurve::linear(5.0))}, {10, 80});
    const auto s = solve_drco(g, empty_ambiguity(g), {});
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.p_hat(0, 1) - s.p_hat(0, 0), 30.0, 1e-6);
    g.initial_dispatch = {0.0, 0.0};
    const auto a = solve_drco(g, empty_ambiguity(g), {});
    ASSERT_TRUE(a.optimal());
    EXPECT_NEAR(a.p_hat(0, 0), 10.0, 1e-6);
    EXPECT_NEAR(a.p_hat(0, 1), 40.0, 1e-6);
}

TEST(Drco, ZeroDeltaSitsAtFloor) {
    // u carries no reward, so pinning it at u0 loses nothing
    const auto g = read_case_file(kData + "/case2.m");
    const auto amb = schedule_ambiguity(g);
    SolveConfig cfg;
    cfg.delta = 0.0;
    const auto s = solve_drco(g, amb, cfg);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_GE(s.u, 0.7 - 1e-9);
    EXPECT_TRUE(s.verify.passed) << s.verify.detail;
    auto m = build_drco(g, amb, cfg);
    m.program.set_bounds(m.vars.u, 0.7, 0.7);
    const auto pinned = conic::solve(m.program, cfg.settings);
    ASSERT_TRUE(pinned.optimal());
    EXPECT_NEAR(pinned.objective, s.objective, 1e-6 * std::abs(s.objective));
}

TEST(Drco, LargeDeltaStaysBelowOne) {
    const auto g = read_case_file(kData + "/case2.m");
    SolveConfig cfg;
    cfg.delta = 1e6;
    const auto s = solve_drco(g, schedule_ambiguity(g), cfg);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_GT(s.u, 0.7);
    EXPECT_LT(s.u, 1.0);
}

TEST(Drco, BindingSideIsSymmetric) {
    // with mu = 0 the chance rows see min(-eps_lo, eps_hi); u is shared by all
    // periods, so every period clears the Gauss half-width for s = 1 - u and
    // the tightest one meets it exactly
    const auto g = read_case_file(kData + "/case2.m");
    const auto amb = schedule_ambiguity(g);
    SolveConfig cfg;
    cfg.delta = 100.0;
    const auto s = solve_drco(g, amb, cfg);
    ASSERT_TRUE(s.optimal());
    ASSERT_LT(s.u, 1.0);
    double tightest = 1e9;
    for (int t = 0; t < g.periods(); ++t) {
        const double half = std::min(-s.eps_lo(0, t), s.eps_hi(0, t));
        const double gauss = amb.stddev(0, t) * 2.0 / (3.0 * std::sqrt(1.0 - s.u));
        EXPECT_GE(half / gauss, 1.0 - 1e-6) << t;
        tightest = std::min(tightest, half / gauss);
    }
    EXPECT_NEAR(tightest, 1.0, 1e-5);
}

TEST(Drco, InfeasibleFloorReported) {
    // a 1 MW window around the forecast cannot hold 0.99 coverage at sigma = 4
    auto g = read_case_file(kData + "/case2.m");
    g.renewables[0].w_min = 19.5;
    g.renewables[0].w_max = 22.5;
    g.forecast.setConstant(20.0);
    SolveConfig cfg;
    cfg.u0 = 0.99;
    const auto s = solve_drco(g, schedule_ambiguity(g), cfg);
    EXPECT_EQ(s.status, conic::Status::Infeasible);
}

TEST(Drco, ChanceBudgetCoversU) {
    const auto g = read_case_file(kData + "/case2.m");
    const auto amb = schedule_ambiguity(g);
    SolveConfig cfg;
    cfg.delta = 5000.0;
    const auto s = solve_drco(g, amb, cfg);
    ASSERT_TRUE(s.optimal());
    for (int t = 0; t < g.periods(); ++t) {
        double miss = 0.0;
        for (int k = 0; k < g.num_renewables(); ++k) {
            const double lambda =
                std::min(amb.mean(k, t) - s.eps_lo(k, t), s.eps_hi(k, t) - amb.mean(k, t)) / amb.stddev(k, t);
            miss += 1.0 - gauss_worst_coverage(lambda);
        }
        EXPECT_GE(1.0 - miss, s.u - 1e-6) << t;
    }
}

TEST(Drco, ScalingInvariance) {
    // pure quadratic costs: C(alpha p) = alpha^2 C(p), so delta scales by alpha^2
    auto base = read_case_file(kData + "/case2.m");
    base.generators[0].cost = CostCurve::quadratic(0.05, 0.0);
    const double alpha = 3.0;
    auto scaled = base;
    scaled.load *= alpha;
    scaled.forecast *= alpha;
    for (auto& u : scaled.generators) {
        u.p_min *= alpha;
        u.p_max *= alpha;
        u.ramp_up *= alpha;
        u.ramp_down *= alpha;
        u.cost = CostCurve::quadratic(0.05 / alpha / alpha, 0.0);
    }
    for (auto& l : scaled.lines) l.capacity *= alpha;
    for (auto& w : scaled.renewables) {
        w.w_min *= alpha;
        w.w_max *= alpha;
    }
    auto a0 = schedule_ambiguity(base), a1 = a0;
    a1.stddev *= alpha;
    SolveConfig cfg;
    cfg.delta = 300.0;
    cfg.settings.feas_tol = 1e-10;
    cfg.settings.gap_rel_tol = 1e-10;
    const auto s0 = solve_drco(base, a0, cfg);
    const auto s1 = solve_drco(scaled, a1, cfg);
    ASSERT_TRUE(s0.optimal() && s1.optimal());
    EXPECT_NEAR(s1.u, s0.u, 1e-6);
    for (int t = 0; t < base.periods(); ++t) EXPECT_NEAR(s1.p_hat(0, t) / (alpha * s0.p_hat(0, t)), 1.0, 1e-6);
    // the tightest period pins the box in sigma units; slack periods are ties
    auto tightest = [](const DneSolution& s, const AmbiguitySet& a) {
        double m = 1e9;
        for (int t = 0; t < a.periods(); ++t)
            m = std::min(m, std::min(-s.eps_lo(0, t), s.eps_hi(0, t)) / a.stddev(0, t));
        return m;
    };
    EXPECT_NEAR(tightest(s1, a1) / tightest(s0, a0), 1.0, 1e-6);
}

TEST(Drco, TwoUnitsShareTheDeviation) {
    auto g = tiny({unit(0, 0, 100, CostCurve::quadratic(0.01, 10.0)), unit(1, 0, 100, CostCurve::quadratic(0.01, 10.0))},
                  {60}, conic::kInf, {{1, 0.0, 40.0}}, Eigen::MatrixXd::Constant(1, 1, 20.0));
    AmbiguitySet a;
    a.mean = Eigen::MatrixXd::Zero(1, 1);
    a.stddev = Eigen::MatrixXd::Constant(1, 1, 4.0);
    SolveConfig cfg;
    cfg.delta = 1000.0;
    const auto s = solve_drco(g, a, cfg);
    ASSERT_TRUE(s.optimal());
    EXPECT_NEAR(s.B[0].col(0).sum(), -1.0, 1e-9);
    EXPECT_NEAR(s.b[0].sum(), 0.0, 1e-9);
}

TEST(Drco, NonAgcUnitsKeepSchedule) {
    auto g = read_case_file(kData + "/case14_dne.m");
    SolveConfig cfg;
    cfg.delta = 1000.0;
    cfg.agc = {true, true, false, false, false};
    const auto s = solve_drco(g, schedule_ambiguity(g), cfg);
    ASSERT_TRUE(s.optimal()) << s.message;
    for (int t = 0; t < g.periods(); ++t)
        for (int i = 2; i < 5; ++i) {
            EXPECT_EQ(s.B[t].row(i).cwiseAbs().sum(), 0.0);
            EXPECT_EQ(s.b[t].row(i).cwiseAbs().sum(), 0.0);
        }
}

TEST_F(Case14, SolvesAndVerifies) {
    ASSERT_TRUE(sol->optimal()) << sol->message;
    EXPECT_TRUE(sol->verify.passed) << sol->verify.detail;
    EXPECT_LE(sol->wall_time, 60.0);
    EXPECT_GT(sol->u, 0.7);
}

TEST_F(Case14, DneBoundsAndBalance) {
    ASSERT_TRUE(sol->optimal());
    for (int t = 0; t < grid->periods(); ++t) {
        for (int k = 0; k < grid->num_renewables(); ++k) {
            const double w = grid->forecast(k, t);
            EXPECT_GE(w + sol->eps_lo(k, t), grid->renewables[k].w_min - 1e-7);
            EXPECT_LE(sol->eps_lo(k, t), 1e-9);
            EXPECT_GE(sol->eps_hi(k, t), -1e-9);
            EXPECT_LE(w + sol->eps_hi(k, t), grid->renewables[k].w_max + 1e-7);
            EXPECT_NEAR(sol->B[t].col(k).sum(), -1.0, 1e-9);
        }
        EXPECT_NEAR(sol->b[t].sum(), 0.0, 1e-9);
    }
}

TEST_F(Case14, RampOnPreDispatch) {
    ASSERT_TRUE(sol->optimal());
    for (int i = 0; i < grid->num_generators(); ++i) {
        const double limit = 0.02 * grid->generators[i].p_max * 60.0;
        for (int t = 1; t < grid->periods(); ++t)
            EXPECT_LE(std::abs(sol->p_hat(i, t) - sol->p_hat(i, t - 1)), limit + 1e-6);
    }
}

TEST_F(Case14, PolicyBalancesEveryDeviation) {
    ASSERT_TRUE(sol->optimal());
    for (int t = 0; t < grid->periods(); ++t) {
        Eigen::VectorXd eps = 0.3 * sol->eps_lo.col(t) + 0.7 * sol->eps_hi.col(t);
        eps(0) = sol->eps_lo(0, t);
        const double supply = sol->redispatch(t, eps).sum() + (grid->forecast.col(t) + eps).sum();
        EXPECT_NEAR(supply, grid->total_load(t), 1e-6);
    }
}

TEST_F(Case14, SolutionFileRoundTrip) {
    std::stringstream ss;
    write_solution(*sol, ss);
    const auto back = read_solution(ss);
    EXPECT_EQ(back.status, sol->status);
    EXPECT_EQ(back.u, sol->u);
    EXPECT_EQ(back.p_hat, sol->p_hat);
    EXPECT_EQ(back.eps_hi, sol->eps_hi);
    ASSERT_EQ(back.B.size(), sol->B.size());
    EXPECT_EQ(back.B[5], sol->B[5]);
    EXPECT_EQ(back.agc, sol->agc);
    std::istringstream bad("dne-solution 1\nstatus optimal\n");
    EXPECT_THROW(read_solution(bad), Error);
}

TEST(Drco, CostRisesAlongDelta) {
    const auto g = read_case_file(kData + "/case14_dne.m");
    const auto amb = schedule_ambiguity(g);
    SolveConfig lo, hi;
    lo.delta = 1.0;
    hi.delta = 38000.0;
    const auto a = solve_drco(g, amb, lo), b = solve_drco(g, amb, hi);
    ASSERT_TRUE(a.optimal() && b.optimal());
    EXPECT_GT(b.dispatch_cost, a.dispatch_cost);
    EXPECT_GT(b.u, a.u);
}

}  // namespace
}  // namespace dne

#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "dne/error.hpp"
#include "dne/grid_model.hpp"

namespace dne {
namespace {

const std::string kData = DNE_DATA_DIR;

GridCase ring3() {
    return parse_case(R"(
mpc.time = [1 60 5];
mpc.bus = [1 3 0; 2 1 10; 3 1 0];
mpc.gen = [1 0 0 0 0 1 100 1 50 0];
mpc.gencost = [2 0 0 2 10 0];
mpc.branch = [
  1 2 0 0.1 0 0;
  2 3 0 0.1 0 0;
  3 1 0 0.1 0 0;
];
)");
}

// Direct DC solve in test code: theta = B_red^{-1} P, flow = (theta_f - theta_t)/x.
Eigen::VectorXd dc_flows(const GridCase& g, const Eigen::VectorXd& inj) {
    const int N = g.num_buses(), s = g.slack_bus();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
    for (const auto& l : g.lines) {
        const double b = 1.0 / l.reactance;
        B(l.from, l.from) += b;
        B(l.to, l.to) += b;
        B(l.from, l.to) -= b;
        B(l.to, l.from) -= b;
    }
    std::vector<int> keep;
    for (int n = 0; n < N; ++n)
        if (n != s) keep.push_back(n);
    Eigen::MatrixXd Br(keep.size(), keep.size());
    Eigen::VectorXd pr(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        pr(a) = inj(keep[a]);
        for (std::size_t b = 0; b < keep.size(); ++b) Br(a, b) = B(keep[a], keep[b]);
    }
    const Eigen::VectorXd th = Br.colPivHouseholderQr().solve(pr);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(N);
    for (std::size_t a = 0; a < keep.size(); ++a) theta(keep[a]) = th(a);
    Eigen::VectorXd f(g.num_lines());
    for (int l = 0; l < g.num_lines(); ++l)
        f(l) = (theta(g.lines[l].from) - theta(g.lines[l].to)) / g.lines[l].reactance;
    return f;
}

TEST(GridParse, TwoBusFixture) {
    const auto g = read_case_file(kData + "/case2.m");
    EXPECT_EQ(g.num_buses(), 2);
    EXPECT_EQ(g.num_lines(), 1);
    EXPECT_EQ(g.num_generators(), 1);
    EXPECT_EQ(g.num_renewables(), 1);
    EXPECT_EQ(g.periods(), 3);
    EXPECT_EQ(g.slack_bus(), 0);
    EXPECT_DOUBLE_EQ(g.load(1, 1), 55.0);
    EXPECT_DOUBLE_EQ(g.forecast(0, 2), 18.0);
    EXPECT_DOUBLE_EQ(g.generators[0].ramp_up, 4.0);
    EXPECT_EQ(g.generators[0].cost.kind, CostCurve::Kind::Quadratic);
}

TEST(GridParse, FourteenBusCounts) {
    const auto g = read_case_file(kData + "/case14_dne.m");
    EXPECT_EQ(g.num_lines(), 20);
    EXPECT_EQ(g.num_generators(), 5);
    EXPECT_EQ(g.num_renewables(), 2);
    EXPECT_EQ(g.buses[g.renewables[0].bus].id, 5);
    EXPECT_EQ(g.buses[g.renewables[1].bus].id, 7);
    EXPECT_DOUBLE_EQ(g.renewables[0].w_max, 80.0);
    EXPECT_DOUBLE_EQ(g.renewables[1].w_max, 100.0);
    EXPECT_EQ(g.periods(), 24);
    for (const auto& u : g.generators) EXPECT_NEAR(u.p_min, 0.1 * u.p_max, 1e-9);
}

TEST(GridParse, PminAbovePmaxNamesGenerator) {
    try {
        parse_case(R"(
mpc.time = [1 60 5];
mpc.bus = [1 3 0; 2 1 10];
mpc.gen = [1 0 0 0 0 1 100 1 50 0; 2 0 0 0 0 1 100 1 20 30];
mpc.gencost = [2 0 0 2 10 0; 2 0 0 2 10 0];
mpc.branch = [1 2 0 0.1 0 0];
)");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Data);
        EXPECT_NE(std::string(e.what()).find("generator[1]"), std::string::npos) << e.what();
    }
}

TEST(GridParse, ReportsLineNumber) {
    try {
        parse_case("mpc.time = [1 60 5];\nmpc.bus = [1 3 0;\n 2 1 abc];\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(GridParse, DefaultsSlackToFirstGeneratorBus) {
    const auto g = parse_case(R"(
mpc.time = [1 60 5];
mpc.bus = [1 1 0; 2 1 10];
mpc.gen = [2 0 0 0 0 1 100 1 50 0];
mpc.gencost = [2 0 0 2 10 0];
mpc.branch = [1 2 0 0.1 0 0];
)");
    EXPECT_EQ(g.slack_bus(), 1);
}

TEST(GridParse, RejectsConcaveCost) {
    EXPECT_THROW(parse_case(R"(
mpc.time = [1 60 5];
mpc.bus = [1 3 0];
mpc.gen = [1 0 0 0 0 1 100 1 50 0];
mpc.gencost = [2 0 0 3 -1 10 0];
mpc.branch = [];
)"),
                 Error);
}

TEST(GridParse, ForecastOutsideRange) {
    EXPECT_THROW(parse_case(R"(
mpc.time = [1 60 5];
mpc.bus = [1 3 0; 2 1 0];
mpc.gen = [1 0 0 0 0 1 100 1 50 0];
mpc.gencost = [2 0 0 2 10 0];
mpc.branch = [1 2 0 0.1 0 0];
mpc.renewables = [2 0 40];
mpc.forecast = [41];
)"),
                 Error);
}

TEST(GridParse, RoundTrip) {
    auto g = read_case_file(kData + "/case14_dne.m");
    g.initial_dispatch = {100, 30, 20, 15, 12};
    g.generators[3].agc = false;
    g.generators[2].cost = CostCurve::piecewise({{10, 400}, {50, 2000}, {100, 4100}});
    const auto h = parse_case(serialize_case(g));
    EXPECT_TRUE(structurally_equal(g, h));
    const auto c2 = read_case_file(kData + "/case2.m");
    EXPECT_TRUE(structurally_equal(c2, parse_case(serialize_case(c2))));
}

TEST(ShiftFactors, TwoBusOrientation) {
    const auto g = read_case_file(kData + "/case2.m");
    // injection at bus 2 withdrawn at the slack flows 2 -> 1, against the line
    EXPECT_DOUBLE_EQ(g.shift_factors(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(g.shift_factors(0, 0), 0.0);
}

TEST(ShiftFactors, SymmetricRingSplitsTwoThirds) {
    const auto g = ring3();
    // Oracle: theta2, theta3 solve [[20,-10],[-10,20]] th = [1,0] -> th = [2/30, 1/30].
    // Flows: 1->2 = -2/3, 2->3 = 1/3, 3->1 = 1/3.
    EXPECT_NEAR(g.shift_factors(1, 0), -2.0 / 3.0, 1e-12);
    EXPECT_NEAR(g.shift_factors(1, 1), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(g.shift_factors(1, 2), 1.0 / 3.0, 1e-12);
    for (int l = 0; l < 3; ++l) EXPECT_EQ(g.shift_factors(0, l), 0.0);
}

TEST(ShiftFactors, FlowReconstructionMatchesDirectSolve) {
    const auto g = read_case_file(kData + "/case14_dne.m");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 30.0);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd inj(g.num_buses());
        for (int n = 0; n < g.num_buses(); ++n) inj(n) = nd(rng);
        inj(g.slack_bus()) -= inj.sum();
        const Eigen::VectorXd direct = dc_flows(g, inj);
        const Eigen::VectorXd viaf = g.shift_factors.transpose() * inj;
        EXPECT_LE((direct - viaf).norm(), 1e-9 * std::max(1.0, direct.norm()));
    }
}

TEST(ShiftFactors, IndependentOfLoads) {
    auto g = read_case_file(kData + "/case14_dne.m");
    const Eigen::MatrixXd before = g.shift_factors;
    scale_loads(g, 3.0);
    EXPECT_EQ(compute_shift_factors(g), before);
}

TEST(ShiftFactors, DisconnectedNetwork) {
    auto g = ring3();
    g.buses.push_back({9, false, 0.0});
    g.load.conservativeResize(4, Eigen::NoChange);
    g.load.row(3).setZero();
    try {
        compute_shift_factors(g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("disconnected"), std::string::npos);
    }
}

TEST(Series, ForecastTable) {
    auto g = read_case_file(kData + "/case14_dne.m");
    const auto s = read_series_file(kData + "/case14_forecast.csv");
    EXPECT_EQ(s.periods(), 24);
    EXPECT_EQ(s.values.cols(), 2);
    attach_forecast(g, s);
    EXPECT_DOUBLE_EQ(g.forecast(1, 0), s.values(0, 1));
}

TEST(Series, PeriodMismatch) {
    auto g = read_case_file(kData + "/case14_dne.m");
    auto s = read_series_file(kData + "/case14_forecast.csv");
    s.values.conservativeResize(23, Eigen::NoChange);
    try {
        attach_forecast(g, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("period count mismatch"), std::string::npos);
    }
}

TEST(Series, RaggedAndNonNumeric) {
    EXPECT_THROW(load_series("a,b\n1,2\n3\n"), Error);
    try {
        load_series("a,b\n1,2\n3,x\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Series, RawLoadScaledByTenth) {
    auto g = read_case_file(kData + "/case14_dne.m");
    const Eigen::MatrixXd expected = g.load;
    attach_load(g, read_series_file(kData + "/case14_load_raw.csv"));
    const Eigen::MatrixXd raw = g.load;
    scale_loads(g, 0.1);
    for (int n = 0; n < g.num_buses(); ++n)
        for (int t = 0; t < g.periods(); ++t) {
            EXPECT_NEAR(g.load(n, t), 0.1 * raw(n, t), 1e-12);
            EXPECT_NEAR(g.load(n, t), expected(n, t), 1e-9);
        }
}

TEST(CostCurveTest, PiecewiseEvaluationAndValidation) {
    const auto c = CostCurve::piecewise({{0, 0}, {10, 100}, {20, 300}});
    EXPECT_DOUBLE_EQ(c.evaluate(5), 50.0);
    EXPECT_DOUBLE_EQ(c.evaluate(15), 200.0);
    EXPECT_NO_THROW(c.validate("g"));
    EXPECT_THROW(CostCurve::piecewise({{0, 0}, {10, 300}, {20, 400}}).validate("g"), Error);
}

}  // namespace
}  // namespace dne

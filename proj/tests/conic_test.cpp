#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dne/conic.hpp"
#include "dne/error.hpp"

namespace dne::conic {
namespace {

using E = LinearExpr;

TEST(ConicSolve, LowerBoundOnly) {
    ConicProgram p;
    const int x = p.add_variable();
    p.set_objective(x, 1.0);
    p.add_inequality(E::var(x, -1.0), -3.0);  // x >= 3
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[x], 3.0, 1e-7);
    EXPECT_NEAR(sol.objective, 3.0, 1e-7);
}

TEST(ConicSolve, SocIdentity) {
    ConicProgram p;
    const int t = p.add_variable();
    p.set_objective(t, 1.0);
    p.add_soc(E::var(t), {E(1.0), E(1.0)});
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[t], std::sqrt(2.0), 1e-7);
}

TEST(ConicSolve, PsdDeterminant) {
    ConicProgram p;
    const int x = p.add_variable();
    p.set_objective(x, 1.0);
    // [[x, 1], [1, x]] >= 0
    p.add_psd(2, {E::var(x), E(1.0), E::var(x)});
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[x], 1.0, 1e-6);
}

TEST(ConicSolve, SmallLp) {
    // max 3a + 2b s.t. a + b <= 4, a + 3b <= 6, a <= 3, a,b >= 0 -> a=3, b=1
    ConicProgram p;
    const int a = p.add_variable(0.0, 3.0), b = p.add_variable(0.0);
    p.set_objective(a, -3.0);
    p.set_objective(b, -2.0);
    p.add_inequality(E::var(a).add(b, 1.0), 4.0);
    p.add_inequality(E::var(a).add(b, 3.0), 6.0);
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[a], 3.0, 1e-7);
    EXPECT_NEAR(sol.x[b], 1.0, 1e-7);
    EXPECT_NEAR(sol.objective, -11.0, 1e-7);
}

TEST(ConicSolve, EqualityAndFixedBounds) {
    ConicProgram p;
    const int a = p.add_variable(), b = p.add_variable(2.0, 2.0);
    p.set_objective(a, 1.0);
    p.add_equality(E::var(a).add(b, 1.0), 5.0);
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[a], 3.0, 1e-8);
    EXPECT_NEAR(sol.x[b], 2.0, 1e-8);
}

// Projection of a point onto the unit ball, closed form a / ||a||.
TEST(ConicSolve, BallProjectionMatchesClosedForm) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 3.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 1 + rep % 5;
        std::vector<double> a(n);
        double na = 0.0;
        for (auto& v : a) {
            v = nd(rng);
            na += v * v;
        }
        na = std::sqrt(na);
        if (na < 1.1) continue;
        ConicProgram p;
        const int x0 = p.add_variables(n);
        const int t = p.add_variable();
        p.set_objective(t, 1.0);
        std::vector<E> diff, ball;
        for (int i = 0; i < n; ++i) {
            diff.push_back(E::var(x0 + i).shift(-a[i]));
            ball.push_back(E::var(x0 + i));
        }
        p.add_soc(E::var(t), diff);
        p.add_soc(E(1.0), ball);
        const auto sol = solve(p);
        ASSERT_TRUE(sol.optimal()) << sol.message;
        EXPECT_NEAR(sol.x[t], na - 1.0, 1e-7);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(sol.x[x0 + i], a[i] / na, 1e-6);
    }
}

// Quadratic epigraph via a rotated-cone-equivalent SOC: y >= p^2.
TEST(ConicSolve, QuadraticEpigraphIsTight) {
    ConicProgram p;
    const int x = p.add_variable(3.0, 3.0), y = p.add_variable();
    p.set_objective(y, 1.0);
    p.add_soc(E::var(y).shift(1.0), {E::var(x, 2.0), E::var(y).shift(-1.0)});
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    EXPECT_NEAR(sol.x[y], 9.0, 1e-7);
}

TEST(ConicSolve, LargerPsdMatchesEigenvalue) {
    // min t s.t. t I - M >= 0 gives the largest eigenvalue of M.
    const double m[3][3] = {{2, 1, 0}, {1, 3, 1}, {0, 1, 4}};
    ConicProgram p;
    const int t = p.add_variable();
    p.set_objective(t, 1.0);
    std::vector<E> lower;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j <= i; ++j) lower.push_back(E(-m[i][j]).add(t, i == j ? 1.0 : 0.0));
    p.add_psd(3, lower);
    const auto sol = solve(p);
    ASSERT_TRUE(sol.optimal()) << sol.message;
    // eigenvalues of this tridiagonal matrix: 3, 3 +- sqrt(3)
    EXPECT_NEAR(sol.x[t], 3.0 + std::sqrt(3.0), 1e-6);
}

TEST(ConicSolve, DetectsInfeasibility) {
    ConicProgram p;
    const int x = p.add_variable(0.0, 1.0);
    p.set_objective(x, 1.0);
    p.add_inequality(E::var(x, -1.0), -2.0);  // x >= 2
    const auto sol = solve(p);
    EXPECT_EQ(sol.status, Status::Infeasible) << sol.message;
}

TEST(ConicSolve, DetectsUnboundedness) {
    ConicProgram p;
    const int x = p.add_variable(-kInf, 0.0);
    p.set_objective(x, 1.0);
    const auto sol = solve(p);
    EXPECT_EQ(sol.status, Status::Unbounded) << sol.message;
}

TEST(ConicSolve, DeterministicAndDuplicateRowInvariant) {
    ConicProgram p;
    const int a = p.add_variable(0.0), b = p.add_variable(0.0), t = p.add_variable();
    p.set_objective(t, 1.0);
    p.add_objective(a, -1.0);
    p.add_inequality(E::var(a).add(b, 2.0), 4.0);
    p.add_soc(E::var(t), {E::var(a), E::var(b).shift(-1.0)});
    const auto s1 = solve(p);
    const auto s2 = solve(p);
    ASSERT_TRUE(s1.optimal());
    EXPECT_EQ(s1.x, s2.x);

    ConicProgram dup = p;
    dup.add_inequality(E::var(a).add(b, 2.0), 4.0);
    const auto s3 = solve(dup);
    ASSERT_TRUE(s3.optimal());
    EXPECT_NEAR(s1.objective, s3.objective, 1e-8);
}

TEST(ConicVerify, PerturbedPrimalFails) {
    ConicProgram p;
    const int a = p.add_variable(0.0), b = p.add_variable(0.0);
    p.set_objective(a, 1.0);
    p.set_objective(b, 1.0);
    p.add_equality(E::var(a).add(b, 1.0), 2.0);
    auto sol = solve(p);
    ASSERT_TRUE(sol.optimal());
    EXPECT_TRUE(verify(p, sol, 1e-6).passed);
    sol.x[a] += 1.0;
    const auto rep = verify(p, sol, 1e-6);
    EXPECT_FALSE(rep.passed);
    EXPECT_GT(rep.max_equality_residual, 1e-6);
}

TEST(ConicVerify, NegativePsdEigenvalueNamesBlock) {
    ConicProgram p;
    const int x = p.add_variable();
    p.add_psd(1, {E::var(x)});
    p.add_psd(2, {E::var(x), E(0.0), E(1.0)});
    const std::vector<double> xv{-1e-3};
    const auto rep = verify(p, xv, 1e-6);
    EXPECT_FALSE(rep.passed);
    EXPECT_NEAR(rep.min_psd_eigenvalue, -1e-3, 1e-12);
    EXPECT_EQ(rep.worst_psd_block, 0);
    EXPECT_NE(rep.detail.find("psd block 0"), std::string::npos);
}

TEST(ConicProgramIr, RejectsBadIndices) {
    ConicProgram p;
    p.add_variable();
    p.add_inequality(E::var(3), 1.0);
    EXPECT_THROW(p.validate(), Error);
    ConicProgram q;
    q.add_variable();
    EXPECT_THROW(q.add_soc(std::vector<int>{0}), Error);
}

TEST(ConicProgramIr, DumpLoadPreservesOptimum) {
    ConicProgram p;
    const int x = p.add_variable(-1.0, kInf), t = p.add_variable();
    p.set_objective(t, 1.0);
    p.add_objective(E(0.5));
    p.add_soc({t, x});
    p.add_inequality(E::var(x, -1.0), -2.0);
    p.add_psd(1, {E::var(t)});
    std::stringstream ss;
    dump(p, ss);
    const auto q = load(ss);
    EXPECT_EQ(q.num_vars(), 2);
    const auto a = solve(p), b = solve(q);
    ASSERT_TRUE(a.optimal() && b.optimal());
    EXPECT_NEAR(a.objective, 2.5, 1e-7);
    EXPECT_NEAR(a.objective, b.objective, 1e-12);
}

class SocOnly final : public Backend {
public:
    std::string name() const override { return "soc-only"; }
    bool supports_psd() const override { return false; }
    Solution solve(const ConicProgram& p, const Settings& s) const override {
        return interior_point_backend()->solve(p, s);
    }
};

TEST(ConicSolve, SocOnlyBackendRefusesPsd) {
    ConicProgram p;
    const int x = p.add_variable();
    p.add_psd(1, {E::var(x)});
    SocOnly backend;
    try {
        solve(p, {}, &backend);
        FAIL() << "expected capability error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Capability);
    }
}

}  // namespace
}  // namespace dne::conic

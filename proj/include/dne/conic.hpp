#pragma once

// Solver-agnostic conic program representation.
//
//   minimize    c'x + c0
//   subject to  a_i'x  = b_i                 (equalities)
//               a_j'x <= b_j                 (inequalities)
//               lo <= x <= hi                (bounds)
//               ||tail(x)||_2 <= head(x)     (second-order cones, affine entries)
//               M(x) is positive semidefinite (symmetric affine matrices)
//
// Backends implement the Backend interface; the default one is the
// interior-point method in interior_point.cpp.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dne::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse affine expression sum_k coef[k] * x[index[k]] + constant.
struct LinearExpr {
    std::vector<int> index;
    std::vector<double> coef;
    double constant = 0.0;

    LinearExpr() = default;
    explicit LinearExpr(double c) : constant(c) {}

    static LinearExpr var(int i, double c = 1.0) {
        LinearExpr e;
        e.add(i, c);
        return e;
    }

    LinearExpr& add(int i, double c) {
        if (c != 0.0) {
            index.push_back(i);
            coef.push_back(c);
        }
        return *this;
    }
    LinearExpr& add(const LinearExpr& other, double scale = 1.0);
    LinearExpr& shift(double c) {
        constant += c;
        return *this;
    }

    double evaluate(std::span<const double> x) const;
    /// Merges duplicate indices and drops zero coefficients.
    void compress();
    bool is_constant() const { return index.empty(); }
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

struct SocConstraint {
    LinearExpr head;
    std::vector<LinearExpr> tail;
};

/// Symmetric dim x dim matrix of affine expressions, lower triangle stored
/// row by row: (0,0), (1,0), (1,1), (2,0), ...
struct PsdConstraint {
    int dim = 0;
    std::vector<LinearExpr> lower;

    static std::size_t slot(int i, int j) {
        if (i < j) std::swap(i, j);
        return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
    }
    const LinearExpr& at(int i, int j) const { return lower[slot(i, j)]; }
};

struct LinearRow {
    LinearExpr lhs;  // constant folded into rhs by the builder methods
    double rhs = 0.0;
};

class ConicProgram {
public:
    ConicProgram() = default;

    int add_variable(double lo = -kInf, double hi = kInf, std::string name = {});
    /// Adds n variables with shared bounds; returns the first index.
    int add_variables(int n, double lo = -kInf, double hi = kInf);

    void set_bounds(int var, double lo, double hi);
    void set_objective(int var, double c);
    void add_objective(int var, double c);
    void add_objective(const LinearExpr& e);

    void add_equality(LinearExpr lhs, double rhs);
    /// lhs <= rhs.
    void add_inequality(LinearExpr lhs, double rhs);
    void add_soc(LinearExpr head, std::vector<LinearExpr> tail);
    /// ||x[idx[1..]]|| <= x[idx[0]].
    void add_soc(const std::vector<int>& idx);
    void add_psd(int dim, std::vector<LinearExpr> lower);

    int num_vars() const { return static_cast<int>(lo_.size()); }
    const std::vector<double>& objective() const { return objective_; }
    double objective_constant() const { return objective_constant_; }
    const std::vector<LinearRow>& equalities() const { return equalities_; }
    const std::vector<LinearRow>& inequalities() const { return inequalities_; }
    const std::vector<SocConstraint>& socs() const { return socs_; }
    const std::vector<PsdConstraint>& psds() const { return psds_; }
    const std::vector<double>& lower_bounds() const { return lo_; }
    const std::vector<double>& upper_bounds() const { return hi_; }
    const std::string& name(int var) const { return names_[var]; }

    double objective_value(std::span<const double> x) const;

    /// Throws dne::Error(Data) when an index or cone shape is invalid.
    void validate() const;

private:
    void check_expr(const LinearExpr& e) const;

    std::vector<double> objective_;
    double objective_constant_ = 0.0;
    std::vector<double> lo_, hi_;
    std::vector<std::string> names_;
    std::vector<LinearRow> equalities_;
    std::vector<LinearRow> inequalities_;
    std::vector<SocConstraint> socs_;
    std::vector<PsdConstraint> psds_;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalLimit };
const char* to_string(Status s);

struct Settings {
    double feas_tol = 1e-8;
    double gap_rel_tol = 1e-8;
    double gap_abs_tol = 1e-8;
    double verify_tol = 1e-6;
    int max_iterations = 150;
    bool verbose = false;
};

struct Solution {
    Status status = Status::NumericalLimit;
    std::vector<double> x;
    double objective = 0.0;
    double wall_time = 0.0;
    int iterations = 0;
    std::string message;

    bool optimal() const { return status == Status::Optimal; }
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual bool supports_psd() const = 0;
    virtual Solution solve(const ConicProgram& program, const Settings& settings) const = 0;
};

/// The in-tree homogeneous self-dual interior-point backend.
std::shared_ptr<const Backend> interior_point_backend();
std::shared_ptr<const Backend> default_backend();

/// Solves with `backend` (default when null). An optimal answer that fails
/// verify() at settings.verify_tol is downgraded to NumericalLimit.
Solution solve(const ConicProgram& program, const Settings& settings = {},
               const Backend* backend = nullptr);

struct VerifyReport {
    double max_equality_residual = 0.0;
    double max_inequality_violation = 0.0;
    double max_bound_violation = 0.0;
    double max_soc_violation = 0.0;
    double min_psd_eigenvalue = kInf;
    int worst_psd_block = -1;
    bool passed = false;
    std::string detail;
};

/// Absolute residuals of `x` against every constraint family.
VerifyReport verify(const ConicProgram& program, std::span<const double> x, double tol);
inline VerifyReport verify(const ConicProgram& program, const Solution& sol, double tol) {
    return verify(program, sol.x, tol);
}

/// Plain-text dump (see docs/formats.md, "conic program").
void dump(const ConicProgram& program, std::ostream& out);
ConicProgram load(std::istream& in);

}  // namespace dne::conic

#pragma once

// Co-optimization of pre-dispatch, affine re-dispatch policies and DNE limits
// as one second-order-cone program.
//
// Decision variables per period t (i: generator, k: renewable):
//   p_hat[i,t]          pre-dispatch (MW)
//   S[i,k,t], s0[i,t]   policy in box coordinates: p_it(v) = p_hat + s0 + sum_k S v_k,
//                        v in [0,1]^K, eps = eps_lo + diag(eps_hi - eps_lo) v
//   eps_lo, eps_hi      DNE limits relative to the forecast (MW)
//   u                   guaranteed utilization probability
//   r, s, z             chance-constraint auxiliaries
// Recovered policy: p_it(eps) = p_hat + sum_k (B eps_k + b).

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dne/conic.hpp"
#include "dne/grid_model.hpp"
#include "dne/uncertainty.hpp"

namespace dne {

struct SolveConfig {
    double delta = 0.0;  // $ per unit of utilization
    double u0 = 0.7;     // must exceed 2/3
    std::vector<bool> agc;  // per generator; empty means the case flags
    double delta_plus = 0.0, delta_minus = 0.0;
    Eigen::MatrixXd c_plus, c_minus;  // K x T, $/MW; empty means all ones
    int segments = 8;                 // CPLA pieces H
    conic::Settings settings;
    const conic::Backend* backend = nullptr;

    bool extended() const { return delta_plus > 0.0 || delta_minus > 0.0; }
    /// Throws Error(Config).
    void validate(const GridCase& grid) const;
    std::vector<bool> agc_mask(const GridCase& grid) const;
};

/// Index bookkeeping for one assembled program; -1 marks an absent variable.
struct VariableMap {
    int I = 0, K = 0, T = 0;
    std::vector<bool> agc;
    std::vector<int> p_hat, s0, cost;  // [t * I + i]
    std::vector<int> S, r_up, r_dn;    // [(t * I + i) * K + k]
    std::vector<int> eps_lo, eps_hi, r, s, z;  // [t * K + k]
    int u = -1;

    int at(const std::vector<int>& v, int i, int t) const { return v[t * I + i]; }
    int at(const std::vector<int>& v, int i, int k, int t) const { return v[(t * I + i) * K + k]; }
    int kt(const std::vector<int>& v, int k, int t) const { return v[t * K + k]; }
};

/// CPLA weights appended by the expected-cost extension.
struct ExtensionMap {
    std::vector<std::vector<int>> lambda_plus, lambda_minus;  // [t * K + k][h]
    std::vector<std::vector<double>> value_plus, value_minus;  // sqrt(3) c sigma J(n_h)
};

struct DrcoModel {
    conic::ConicProgram program;
    VariableMap vars;
    ExtensionMap ext;
};

/// Allocates every decision variable and its simple bounds, including the
/// DNE bounds w_min <= w_hat + eps_lo <= w_hat <= w_hat + eps_hi <= w_max.
VariableMap allocate_variables(conic::ConicProgram& prog, const GridCase& grid, const AmbiguitySet& amb,
                               const SolveConfig& config);
/// Balance, line limits, capacity and ramp limits on the pre-dispatch.
void build_nominal_ed(conic::ConicProgram& prog, const GridCase& grid, const VariableMap& vm);
/// Robust counterpart of the re-dispatch rows over the DNE box. The balance
/// equality is matched coefficient-wise; every inequality a(v) <= rhs is
/// dualized as a0 + sum_k R_k <= rhs, R_k >= c_k, R_k >= 0.
void build_robust_box(conic::ConicProgram& prog, const GridCase& grid, const VariableMap& vm);
/// Gauss-bound chance constraint in second-order-cone form plus u0 <= u <= 1.
void build_chance_socp(conic::ConicProgram& prog, const AmbiguitySet& amb, const SolveConfig& config,
                       const VariableMap& vm);
/// sum_t sum_i C_i(p_hat) - delta u. Quadratic costs use y >= p^2 / rho
/// written as ||(2p, y - rho)|| <= y + rho.
/// Records the epigraph variables in vm.cost.
void build_objective(conic::ConicProgram& prog, const GridCase& grid, const SolveConfig& config, VariableMap& vm);

/// Full model; appends the expected-cost terms when the config asks for them.
DrcoModel build_drco(const GridCase& grid, const AmbiguitySet& amb, const SolveConfig& config);

struct DneSolution {
    conic::Status status = conic::Status::NumericalLimit;
    std::string message;
    std::vector<std::string> warnings;
    int I = 0, K = 0, T = 0;
    std::vector<bool> agc;

    Eigen::MatrixXd p_hat;              // I x T
    Eigen::MatrixXd s0;                 // I x T
    std::vector<Eigen::MatrixXd> S;     // per t, I x K
    std::vector<Eigen::MatrixXd> B, b;  // per t, I x K
    Eigen::MatrixXd eps_lo, eps_hi;     // K x T
    Eigen::MatrixXd r, s, z;            // K x T
    double u = 0.0;

    double dispatch_cost = 0.0;
    double utilization_reward = 0.0;  // delta * u
    double plus_term = 0.0, minus_term = 0.0;  // delta+- times their CPLA bounds
    double objective = 0.0;
    double wall_time = 0.0;
    int iterations = 0;
    conic::VerifyReport verify;

    bool optimal() const { return status == conic::Status::Optimal; }
    /// p_t(eps) for one period (I entries).
    Eigen::VectorXd redispatch(int t, const Eigen::VectorXd& eps) const;
};

DneSolution solve_drco(const GridCase& grid, const AmbiguitySet& amb, const SolveConfig& config);
/// Maps a primal vector of `model` back to decisions (no status handling).
DneSolution recover(const GridCase& grid, const DrcoModel& model, const std::vector<double>& x,
                    const SolveConfig& config);

/// Smallest symmetric half-width (MW) the chance rows admit for one (k,t)
/// with utilization fixed at u. Closed form: sigma * 2 / (3 sqrt(1 - u)).
double min_half_width(double sigma, double u, const conic::Settings& settings = {},
                      conic::VerifyReport* report = nullptr);

/// Text format: `dne-solution 1` header, scalar lines, then one
/// `[name]` block per decision family (documented in docs/formats.md).
void write_solution(const DneSolution& sol, std::ostream& out);
DneSolution read_solution(std::istream& in);

}  // namespace dne

#pragma once

// Worst-case expected over/under-estimation cost.
//
// J(tau) = min  pi1 + pi3 + 1
//          s.t. ||(pi2, pi1 - pi3 + 1)|| <= pi1 + pi3 + 1
//               Lambda in S^4_+, Lambda_00 = tau,
//               sum_{i+j odd} Lambda_ij = 0, sum_{i+j = 2l} Lambda_ij = pi_l  (l = 1..3)
// Lambda is indexed by the monomials (1, y, y^2, y^3) with zeta = y^2, so
// sum_{i+j=m} Lambda_ij is the y^m coefficient of pi3 zeta^3 + pi2 zeta^2 + pi1 zeta + tau.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dne/conic.hpp"
#include "dne/drco_builder.hpp"

namespace dne {

/// Conic value, cached per tau rounded to 1e-12. Throws Error(Capability)
/// for a backend without PSD cones and Error(Config) for tau < 0.
double j_tau(double tau, const conic::Settings& settings = {}, const conic::Backend* backend = nullptr);
void clear_j_tau_cache();
/// The program behind j_tau; its objective value is J(tau).
conic::ConicProgram j_tau_program(double tau);

enum class HVariant {
    Ratio,  // [1 - tau / zeta]^+
    Exact,  // (zeta - tau)^2 / (2 zeta) for zeta > tau
};

struct JOracleOptions {
    HVariant h = HVariant::Ratio;
    double grid_halfwidth = 10.0;
    int grid_points = 2001;
    conic::Settings settings;
};

double h_value(HVariant h, double tau, double zeta);

/// max sum_j h(zeta_j) p_j over discrete laws on the grid with
/// E zeta = 0, E zeta^2 = 1. Lower bound on the continuum supremum.
double j_tau_oracle(double tau, const JOracleOptions& options = {});
/// The oracle LP (a minimization of -E h).
conic::ConicProgram j_tau_oracle_program(double tau, const JOracleOptions& options = {});

struct CostTerm {
    double c = 0.0;      // $/MW
    double sigma = 0.0;  // MW
    double tau = 0.0;    // normalized threshold
};

/// sqrt(3) sum c sigma J(tau).
double g(const std::vector<CostTerm>& terms, const conic::Settings& settings = {});

/// tau = (mu - eps_lo) / (sqrt(3) sigma). Empty c means all ones.
double p_plus(const AmbiguitySet& amb, const Eigen::MatrixXd& eps_lo, const Eigen::MatrixXd& c = {},
              const conic::Settings& settings = {});
/// tau = (eps_hi - mu) / (sqrt(3) sigma).
double p_minus(const AmbiguitySet& amb, const Eigen::MatrixXd& eps_hi, const Eigen::MatrixXd& c = {},
               const conic::Settings& settings = {});

struct Cpla {
    int H = 0;
    std::vector<double> breakpoints;  // H + 1 values
    std::vector<double> values;       // J at each breakpoint

    /// min sum lambda_h J(n_h) s.t. sum lambda_h n_h = tau, i.e. the chord value.
    double evaluate(double tau) const;
};

Cpla build_cpla(double tau_lo, double tau_hi, int H, const conic::Settings& settings = {});
/// Header `h,n_h,J`.
std::string format_cpla(const Cpla& cpla);

/// Appends delta+ P+ and delta- P- (CPLA upper bounds) to a built model.
void extend_drco(DrcoModel& model, const GridCase& grid, const AmbiguitySet& amb, const SolveConfig& config);

}  // namespace dne

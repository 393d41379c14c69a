#pragma once

// Out-of-sample assessment of DNE limits and the fixed-dispatch baseline.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dne/drco_builder.hpp"
#include "dne/grid_model.hpp"
#include "dne/uncertainty.hpp"

namespace dne {

struct PenaltyConfig {
    double shed = 2000.0;     // $/MW of deviation below eps_lo
    double curtail = 100.0;   // $/MW of deviation above eps_hi
    double redispatch = 1.0;  // multiplier on C(p(eps)) - C(p_hat); 1 prices re-dispatch at fuel cost
    void validate() const;
};

struct EvaluationReport {
    std::vector<double> cost, shed, curtailed;  // per scenario ($, MW, MW)
    double avg_cost = 0.0, max_cost = 0.0, avg_shed = 0.0, avg_curtail = 0.0;
    std::vector<double> utilization;  // per period, joint over renewables
    int scenarios = 0;
    std::uint64_t seed = 0;
    double max_policy_violation = 0.0;  // over clipped re-dispatch, MW
    bool robust_ok = true;
};

/// Clip-then-redispatch Monte Carlo. Throws Error(Data) on shape mismatch.
EvaluationReport evaluate(const DneSolution& sol, const GridCase& grid, const ScenarioSet& scenarios,
                          const PenaltyConfig& penalties = {});

/// Largest violation (MW, 0 when feasible) of balance, line, capacity, ramp
/// and response-window rows under the affine policy at one realization (K x T).
double policy_violation(const DneSolution& sol, const GridCase& grid, const Eigen::MatrixXd& eps);

struct RobustReport {
    double max_violation = 0.0;   // worst row value minus rhs; negative means slack everywhere
    std::string worst_row;
    int rows = 0;
    bool passed(double tol = 1e-6) const { return max_violation <= tol; }
};

/// Worst case of every policy row over [eps_lo, eps_hi] by sign decomposition.
RobustReport verify_robust(const DneSolution& sol, const GridCase& grid);

/// Fixed-dispatch baseline: nominal economic dispatch, uniform AGC
/// participation B = -1/|AGC|, then the widest box the robust rows allow.
DneSolution solve_odne_baseline(const GridCase& grid, const AmbiguitySet& amb, const conic::Settings& settings = {});

/// Smallest per-period Bonferroni bound implied by a box (Gauss inequality,
/// both branches), clamped at 0.
double guaranteed_utilization(const DneSolution& sol, const AmbiguitySet& amb);

/// `scenarios,seed,AvgC,MaxC,AvgLS,AvgWC` and one value row.
std::string format_summary(const EvaluationReport& r);
/// `scenario,cost,shed,curtailed`.
std::string format_scenario_costs(const EvaluationReport& r);
/// `t,utilization`.
std::string format_utilization(const EvaluationReport& r);

}  // namespace dne

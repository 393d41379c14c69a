#pragma once

// Delta sweeps: the cost-utilization frontier and per-period admissible
// ranges of total renewable output.

#include <string>
#include <vector>

#include "dne/drco_builder.hpp"
#include "dne/evaluation.hpp"

namespace dne {

struct FrontierRow {
    double delta = 0.0;
    conic::Status status = conic::Status::NumericalLimit;
    std::string message;  // solver message or the exception text
    bool verified = false;
    double dispatch_cost = 0.0, u = 0.0, objective = 0.0;
    // sum_k (mu + eps_lo) and sum_k (mu + eps_hi), per t
    std::vector<double> w_lo, w_hi;
    // the same limits around the forecast, sum_k (w_hat + eps)
    std::vector<double> mw_lo, mw_hi;
    std::vector<double> utilization;  // out of sample, per t
    double min_utilization = 0.0;
    double wall_time = 0.0;
    int iterations = 0;

    bool optimal() const { return status == conic::Status::Optimal; }
};

struct FrontierTable {
    std::vector<FrontierRow> rows;  // ascending delta

    /// `delta,status,verified,dispatch_cost,u,objective,min_utilization,iterations`,
    /// with `wall_time` before `iterations` when timing is on.
    std::string format(bool timing = true) const;
    /// `delta,t,w_lo,w_hi,mw_lo,mw_hi,utilization`, one row per (delta, t).
    std::string format_ranges() const;
};

/// 1, 100, ..., 1000 (step 100), then step 400 to 5000, 1000 to 10000 and
/// 4000 to 38000: 33 values.
std::vector<double> preset_schedule();

struct SweepOptions {
    SolveConfig config;  // delta is overwritten per row
    PenaltyConfig penalties;
    int threads = 1;
};

/// One solve and one out-of-sample evaluation per delta. Failed rows keep
/// their status and never stop the sweep. Throws Error(Config) when the
/// schedule is empty or not strictly increasing.
FrontierTable sweep(const GridCase& grid, const AmbiguitySet& amb, const std::vector<double>& schedule,
                    const ScenarioSet& eval, const SweepOptions& options = {});

}  // namespace dne

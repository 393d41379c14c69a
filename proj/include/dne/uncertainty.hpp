#pragma once

// Forecast-error modelling: moment calibration, seeded scenario generation
// and worst-case coverage of a symmetric box under the unimodal moment set.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dne/conic.hpp"

namespace dne {

struct GridCase;

/// Per-(k,t) mean and standard deviation (MW), both K x T.
struct AmbiguitySet {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd stddev;

    int renewables() const { return static_cast<int>(mean.rows()); }
    int periods() const { return static_cast<int>(mean.cols()); }
    /// Throws Error(Data) on shape mismatch or a non-positive sigma.
    void validate() const;
};

/// Realizations of the K x T error matrix.
struct ScenarioSet {
    std::vector<Eigen::MatrixXd> scenarios;
    std::uint64_t seed = 0;
    std::string distribution;

    int size() const { return static_cast<int>(scenarios.size()); }
};

/// Sample mean and sample standard deviation (divisor n-1) per entry.
AmbiguitySet calibrate(const std::vector<Eigen::MatrixXd>& history);

/// Independent Gaussian draws, std::mt19937_64 seeded with `seed`.
ScenarioSet sample_gaussian(const Eigen::MatrixXd& means, const Eigen::MatrixXd& sigmas, int n,
                            std::uint64_t seed);

/// sigma_kt = w_max_k * (0.10 + 0.001 * (t - 1)), t counted from 1.
Eigen::MatrixXd growing_sigma_schedule(const GridCase& grid);
/// Zero mean with the growing schedule.
AmbiguitySet schedule_ambiguity(const GridCase& grid);

/// First `round(fraction * n)` scenarios and the rest, order preserved.
std::pair<ScenarioSet, ScenarioSet> split(const ScenarioSet& set, double fraction);

/// Infimum over the ambiguity set of P(|eps - mu| <= lambda * sigma),
/// i.e. 1 - 4 / (9 lambda^2). Requires lambda >= 2 / sqrt(3).
double gauss_worst_coverage(double lambda);

struct OracleOptions {
    double grid_halfwidth = 10.0;
    int grid_points = 2001;
    conic::Settings settings;
};

/// Brute-force counterpart of gauss_worst_coverage: writes eps - mu = sigma U zeta
/// with U uniform on (0,1), discretizes zeta on a symmetric grid (sigma units,
/// E zeta = 0, E zeta^2 = 3 so that Var(U zeta) = 1) and minimizes
/// E min(1, lambda / |zeta|) by linear programming. Upper bound on the infimum.
double worst_coverage_oracle(double lambda, const OracleOptions& options = {});

/// Error history / scenario files: header `sample,t,<name per renewable>`,
/// one row per (sample, period).
std::string format_scenarios(const ScenarioSet& set, const std::vector<std::string>& names);
ScenarioSet parse_scenarios(std::string_view text, int renewables, int periods);
ScenarioSet read_scenarios(const std::filesystem::path& path, int renewables, int periods);

}  // namespace dne

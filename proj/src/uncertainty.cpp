#include "dne/uncertainty.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dne/error.hpp"
#include "dne/grid_model.hpp"

namespace dne {

void AmbiguitySet::validate() const {
    if (mean.rows() != stddev.rows() || mean.cols() != stddev.cols())
        throw Error(ErrorKind::Data, "ambiguity set: mean and stddev shapes differ");
    for (Eigen::Index k = 0; k < stddev.rows(); ++k)
        for (Eigen::Index t = 0; t < stddev.cols(); ++t)
            if (!(stddev(k, t) > 0.0) || !std::isfinite(stddev(k, t)) || !std::isfinite(mean(k, t)))
                throw Error(ErrorKind::Data, "ambiguity set: sigma[" + std::to_string(k) + "][" +
                                                 std::to_string(t) + "] must be positive and finite");
}

AmbiguitySet calibrate(const std::vector<Eigen::MatrixXd>& history) {
    const auto n = history.size();
    if (n < 2) throw Error(ErrorKind::Data, "calibrate: need at least 2 samples per entry");
    const auto rows = history.front().rows(), cols = history.front().cols();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& h : history) {
        if (h.rows() != rows || h.cols() != cols) throw Error(ErrorKind::Data, "calibrate: ragged history");
        sum += h;
    }
    AmbiguitySet a;
    a.mean = sum / static_cast<double>(n);
    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& h : history) ss += (h - a.mean).cwiseAbs2();
    a.stddev = (ss / static_cast<double>(n - 1)).cwiseSqrt();
    for (Eigen::Index k = 0; k < rows; ++k)
        for (Eigen::Index t = 0; t < cols; ++t)
            if (!(a.stddev(k, t) > 0.0))
                throw Error(ErrorKind::Data, "calibrate: zero sample variance at [" + std::to_string(k) + "][" +
                                                 std::to_string(t) + "]");
    return a;
}

ScenarioSet sample_gaussian(const Eigen::MatrixXd& means, const Eigen::MatrixXd& sigmas, int n,
                            std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::Config, "sample_gaussian: n must be >= 1");
    if (means.rows() != sigmas.rows() || means.cols() != sigmas.cols())
        throw Error(ErrorKind::Data, "sample_gaussian: shape mismatch");
    if (sigmas.size() > 0 && !(sigmas.minCoeff() > 0.0))
        throw Error(ErrorKind::Data, "sample_gaussian: sigmas must be positive");
    ScenarioSet set;
    set.seed = seed;
    set.distribution = "gaussian/mt19937_64";
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    set.scenarios.reserve(n);
    for (int s = 0; s < n; ++s) {
        Eigen::MatrixXd e(means.rows(), means.cols());
        // column-major fill: all k of period 1, then period 2, ...
        for (Eigen::Index t = 0; t < e.cols(); ++t)
            for (Eigen::Index k = 0; k < e.rows(); ++k) e(k, t) = means(k, t) + sigmas(k, t) * nd(rng);
        set.scenarios.push_back(std::move(e));
    }
    return set;
}

Eigen::MatrixXd growing_sigma_schedule(const GridCase& g) {
    Eigen::MatrixXd s(g.num_renewables(), g.periods());
    for (int k = 0; k < g.num_renewables(); ++k)
        for (int t = 0; t < g.periods(); ++t) s(k, t) = g.renewables[k].w_max * (0.10 + 0.001 * t);
    return s;
}

AmbiguitySet schedule_ambiguity(const GridCase& g) {
    AmbiguitySet a;
    a.stddev = growing_sigma_schedule(g);
    a.mean = Eigen::MatrixXd::Zero(a.stddev.rows(), a.stddev.cols());
    return a;
}

std::pair<ScenarioSet, ScenarioSet> split(const ScenarioSet& set, double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorKind::Config, "split fraction must be in [0, 1]");
    const auto cut = static_cast<std::size_t>(std::lround(fraction * set.size()));
    ScenarioSet a, b;
    a.seed = b.seed = set.seed;
    a.distribution = b.distribution = set.distribution;
    a.scenarios.assign(set.scenarios.begin(), set.scenarios.begin() + cut);
    b.scenarios.assign(set.scenarios.begin() + cut, set.scenarios.end());
    return {a, b};
}

double gauss_worst_coverage(double lambda) {
    if (!(lambda >= 2.0 / std::sqrt(3.0)))
        throw Error(ErrorKind::Config, "gauss_worst_coverage: lambda must be >= 2/sqrt(3)");
    return 1.0 - 4.0 / (9.0 * lambda * lambda);
}

double worst_coverage_oracle(double lambda, const OracleOptions& opt) {
    if (opt.grid_points < 3 || !(opt.grid_halfwidth > 0.0))
        throw Error(ErrorKind::Config, "coverage oracle: degenerate grid");
    const int m = opt.grid_points;
    conic::ConicProgram p;
    const int x0 = p.add_variables(m, 0.0, conic::kInf);
    conic::LinearExpr mass, first, second;
    for (int j = 0; j < m; ++j) {
        const double z = -opt.grid_halfwidth + 2.0 * opt.grid_halfwidth * j / (m - 1);
        const double h = std::abs(z) <= lambda ? 1.0 : lambda / std::abs(z);
        p.add_objective(x0 + j, h);
        mass.add(x0 + j, 1.0);
        first.add(x0 + j, z);
        second.add(x0 + j, z * z);
    }
    p.add_equality(mass, 1.0);
    p.add_equality(first, 0.0);
    p.add_equality(second, 3.0);
    const auto sol = conic::solve(p, opt.settings);
    if (sol.status == conic::Status::Infeasible)
        throw Error(ErrorKind::Infeasible, "coverage oracle: moment system infeasible on this grid");
    if (!sol.optimal()) throw Error(ErrorKind::Numerical, "coverage oracle: " + sol.message);
    return sol.objective;
}

std::string format_scenarios(const ScenarioSet& set, const std::vector<std::string>& names) {
    std::ostringstream o;
    o.precision(17);
    o << "sample,t";
    for (const auto& n : names) o << "," << n;
    o << "\n";
    for (int s = 0; s < set.size(); ++s) {
        const auto& e = set.scenarios[s];
        for (Eigen::Index t = 0; t < e.cols(); ++t) {
            o << s + 1 << "," << t + 1;
            for (Eigen::Index k = 0; k < e.rows(); ++k) o << "," << e(k, t);
            o << "\n";
        }
    }
    return o.str();
}

ScenarioSet parse_scenarios(std::string_view text, int K, int T) {
    const Series s = load_series(text);
    if (s.values.cols() != K + 2)
        throw Error(ErrorKind::Data, "scenario file: expected sample, t and " + std::to_string(K) + " columns");
    if (s.values.rows() % T != 0)
        throw Error(ErrorKind::Data, "scenario file: period count mismatch, " + std::to_string(s.values.rows()) +
                                         " rows is not a multiple of " + std::to_string(T));
    ScenarioSet set;
    set.distribution = "file";
    const int n = static_cast<int>(s.values.rows()) / T;
    for (int j = 0; j < n; ++j) {
        Eigen::MatrixXd e(K, T);
        for (int t = 0; t < T; ++t) {
            const auto r = j * T + t;
            if (s.values(r, 1) != t + 1)
                throw Error(ErrorKind::Data, "scenario file: row " + std::to_string(r + 2) + " has period " +
                                                 std::to_string(s.values(r, 1)) + ", expected " +
                                                 std::to_string(t + 1));
            for (int k = 0; k < K; ++k) e(k, t) = s.values(r, k + 2);
        }
        set.scenarios.push_back(std::move(e));
    }
    return set;
}

ScenarioSet read_scenarios(const std::filesystem::path& path, int K, int T) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenarios(ss.str(), K, T);
}

}  // namespace dne

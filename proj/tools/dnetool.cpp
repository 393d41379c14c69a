// dnetool: solve, sweep, evaluate and audit DNE-limit models from the shell.
//
// Exit codes: 0 success, 2 usage, 3 data, 4 infeasible, 5 numerical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>

#include "dne/error.hpp"
#include "dne/evaluation.hpp"
#include "dne/expected_cost.hpp"
#include "dne/frontier.hpp"
#include "dne/version.hpp"

namespace fs = std::filesystem;
using namespace dne;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInfeasible = 4, kNumerical = 5 };

struct RunConfig {
    std::string case_path, forecast_path, load_path, history_path, out_dir = ".";
    double load_scale = 1.0, ramp_scale = 0.0;  // 0 keeps the case ramps
    std::string moments = "calibrated";
    double split = 0.5;
    int scenarios = 5000;
    std::uint64_t seed = 7;

    double delta = 10000.0, u0 = 0.7, delta_plus = 0.0, delta_minus = 0.0;
    int segments = 8;
    PenaltyConfig penalties;
    int threads = 1;
    bool verbose = false;

    // subcommand options
    std::string preset;
    std::vector<double> deltas;
    std::string solution_path;
    bool baseline = false;
    std::vector<double> taus;
    int grid = 2001;
    double halfwidth = 10.0;

    std::string canonical() const {
        std::ostringstream o;
        o.precision(17);
        o << "case=" << case_path << ";forecast=" << forecast_path << ";load=" << load_path
          << ";history=" << history_path << ";load_scale=" << load_scale << ";ramp_scale=" << ramp_scale
          << ";moments=" << moments << ";split=" << split << ";scenarios=" << scenarios << ";seed=" << seed
          << ";delta=" << delta << ";u0=" << u0 << ";delta_plus=" << delta_plus << ";delta_minus=" << delta_minus
          << ";segments=" << segments << ";shed=" << penalties.shed << ";curtail=" << penalties.curtail
          << ";redispatch=" << penalties.redispatch << ";preset=" << preset << ";deltas=";
        for (double d : deltas) o << d << ",";
        o << ";solution=" << solution_path << ";baseline=" << baseline << ";taus=";
        for (double t : taus) o << t << ",";
        o << ";grid=" << grid << ";halfwidth=" << halfwidth;
        return o.str();
    }
};

// FNV-1a, stable across platforms
std::string config_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream o;
    o << std::hex << h;
    return o.str();
}

struct Output {
    const RunConfig& cfg;
    std::string command;

    std::string header() const {
        std::ostringstream o;
        o << "# dnetool " << kVersion << "\n# command " << command << "\n# seed " << cfg.seed << "\n# config "
          << config_hash(cfg.canonical()) << "\n# backend " << conic::default_backend()->name() << "\n";
        return o.str();
    }
    fs::path write(const std::string& name, const std::string& body) const {
        const fs::path p = fs::path(cfg.out_dir) / name;
        std::ofstream f(p);
        f << header() << body;
        if (!f) throw Error(ErrorKind::Io, "cannot write " + p.string());
        return p;
    }
};

// Drops the leading `#` block written by Output.
std::string strip_header(std::istream& in) {
    std::string line;
    std::streampos body = in.tellg();
    while (std::getline(in, line) && !line.empty() && line[0] == '#') body = in.tellg();
    in.clear();
    in.seekg(body);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

struct Inputs {
    GridCase grid;
    AmbiguitySet amb;
    ScenarioSet calibration, eval;
};

Inputs load_inputs(const RunConfig& c, bool need_eval) {
    Inputs in;
    in.grid = read_case_file(c.case_path);
    if (!c.forecast_path.empty()) attach_forecast(in.grid, read_series_file(c.forecast_path));
    if (!c.load_path.empty()) attach_load(in.grid, read_series_file(c.load_path));
    if (c.load_scale != 1.0) scale_loads(in.grid, c.load_scale);
    if (c.ramp_scale > 0.0) set_ramp_fraction(in.grid, c.ramp_scale);
    in.grid.validate();

    const auto truth = schedule_ambiguity(in.grid);
    ScenarioSet data;
    if (!c.history_path.empty()) {
        data = read_scenarios(c.history_path, in.grid.num_renewables(), in.grid.periods());
    } else if (c.moments == "calibrated" || need_eval) {
        const int total = static_cast<int>(std::lround(c.scenarios / (1.0 - c.split)));
        data = sample_gaussian(truth.mean, truth.stddev, total, c.seed);
    }
    if (data.size() > 0) std::tie(in.calibration, in.eval) = split(data, c.split);
    in.amb = c.moments == "schedule" || in.calibration.size() < 2 ? truth : calibrate(in.calibration.scenarios);
    in.eval.seed = data.seed;
    return in;
}

SolveConfig solve_config(const RunConfig& c) {
    SolveConfig s;
    s.delta = c.delta;
    s.u0 = c.u0;
    s.delta_plus = c.delta_plus;
    s.delta_minus = c.delta_minus;
    s.segments = c.segments;
    s.settings.verbose = c.verbose;
    return s;
}

int status_exit(conic::Status s) {
    switch (s) {
        case conic::Status::Optimal: return kOk;
        case conic::Status::Infeasible:
        case conic::Status::Unbounded: return kInfeasible;
        default: return kNumerical;
    }
}

int error_exit(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config:
        case ErrorKind::Capability: return kUsage;
        case ErrorKind::Infeasible: return kInfeasible;
        case ErrorKind::Numerical: return kNumerical;
        default: return kData;
    }
}

std::string solution_summary(const DneSolution& s, const GridCase& g, const AmbiguitySet& amb) {
    std::ostringstream o;
    o.precision(10);
    o << "status " << conic::to_string(s.status) << " (" << s.message << ")\n";
    o << "u " << s.u << "\ndispatch_cost " << s.dispatch_cost << "\nutilization_reward " << s.utilization_reward
      << "\nplus_term " << s.plus_term << "\nminus_term " << s.minus_term << "\nobjective " << s.objective
      << "\niterations " << s.iterations << "\nverify " << (s.verify.passed ? "passed" : "failed") << "\n";
    if (!s.optimal()) return o.str();
    o << "t,eps_lo,eps_hi,w_lo,w_hi\n";
    for (int t = 0; t < g.periods(); ++t) {
        const double lo = s.eps_lo.col(t).sum(), hi = s.eps_hi.col(t).sum(), mu = amb.mean.col(t).sum();
        o << t + 1 << "," << lo << "," << hi << "," << mu + lo << "," << mu + hi << "\n";
    }
    return o.str();
}

void report_solution(const DneSolution& s, const Inputs& in, const Output& out, const std::string& stem) {
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
    if (s.optimal()) {
        std::ostringstream sol;
        write_solution(s, sol);
        out.write(stem + ".dne", sol.str());
    }
    const std::string summary = solution_summary(s, in.grid, in.amb);
    out.write(stem + "_summary.txt", summary);
    std::cout << summary;
}

int cmd_solve(const RunConfig& c) {
    const Inputs in = load_inputs(c, false);
    const Output out{c, "solve"};
    const auto s = solve_drco(in.grid, in.amb, solve_config(c));
    report_solution(s, in, out, "solution");
    if (s.optimal() && !s.verify.passed) std::cerr << "warning: verification failed: " << s.verify.detail << "\n";
    return status_exit(s.status);
}

int cmd_baseline(const RunConfig& c) {
    const Inputs in = load_inputs(c, false);
    const Output out{c, "baseline"};
    conic::Settings st;
    st.verbose = c.verbose;
    const auto s = solve_odne_baseline(in.grid, in.amb, st);
    report_solution(s, in, out, "baseline");
    return status_exit(s.status);
}

int cmd_evaluate(const RunConfig& c) {
    const Inputs in = load_inputs(c, true);
    const Output out{c, "evaluate"};
    DneSolution s;
    if (!c.solution_path.empty()) {
        std::ifstream f(c.solution_path);
        if (!f) throw Error(ErrorKind::Io, "cannot open " + c.solution_path);
        std::istringstream body(strip_header(f));
        s = read_solution(body);
    } else if (c.baseline) {
        s = solve_odne_baseline(in.grid, in.amb);
    } else {
        s = solve_drco(in.grid, in.amb, solve_config(c));
    }
    if (!s.optimal()) {
        std::cerr << "solve failed: " << s.message << "\n";
        return status_exit(s.status);
    }
    const auto r = evaluate(s, in.grid, in.eval, c.penalties);
    out.write("evaluation.csv", format_summary(r));
    out.write("scenario_costs.csv", format_scenario_costs(r));
    out.write("utilization.csv", format_utilization(r));
    std::cout << format_summary(r);
    if (!r.robust_ok) {
        std::cerr << "robust feasibility failure: policy violation " << r.max_policy_violation << " MW\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_sweep(const RunConfig& c) {
    const Inputs in = load_inputs(c, true);
    const Output out{c, "sweep"};
    std::vector<double> schedule = c.deltas;
    if (c.preset == "paper") schedule = preset_schedule();
    if (schedule.empty()) throw Error(ErrorKind::Config, "give --preset paper or --deltas");
    SweepOptions opt;
    opt.config = solve_config(c);
    opt.penalties = c.penalties;
    opt.threads = c.threads;
    const auto table = sweep(in.grid, in.amb, schedule, in.eval, opt);
    // wall time stays out of the files so they reproduce bit for bit
    out.write("frontier.csv", table.format(false));
    out.write("ranges.csv", table.format_ranges());
    std::cout << table.format();
    int failed = 0;
    for (const auto& r : table.rows) failed += r.optimal() ? 0 : 1;
    if (failed > 0) std::cerr << failed << " of " << table.rows.size() << " rows did not solve\n";
    return failed == static_cast<int>(table.rows.size()) ? status_exit(table.rows.front().status) : kOk;
}

int cmd_jtau(const RunConfig& c) {
    const Output out{c, "jtau"};
    std::vector<double> taus = c.taus.empty() ? std::vector<double>{0.0, 0.25, 0.5, 1.0, 2.0} : c.taus;
    JOracleOptions opt;
    opt.grid_points = c.grid;
    opt.grid_halfwidth = c.halfwidth;
    const double hi = std::max(*std::max_element(taus.begin(), taus.end()), 1e-3);
    const auto cpla = build_cpla(0.0, hi, c.segments);
    std::ostringstream o;
    o.precision(12);
    o << "tau,J,oracle,CPLA\n";
    for (double t : taus) o << t << "," << j_tau(t) << "," << j_tau_oracle(t, opt) << "," << cpla.evaluate(t) << "\n";
    out.write("jtau.csv", o.str());
    out.write("cpla.csv", format_cpla(cpla));
    std::cout << o.str();
    return kOk;
}

int cmd_calibrate(const RunConfig& c) {
    const Inputs in = load_inputs(c, true);
    const Output out{c, "calibrate"};
    std::ostringstream o;
    o.precision(12);
    o << "k,t,mean,stddev\n";
    for (int k = 0; k < in.amb.renewables(); ++k)
        for (int t = 0; t < in.amb.periods(); ++t)
            o << k + 1 << "," << t + 1 << "," << in.amb.mean(k, t) << "," << in.amb.stddev(k, t) << "\n";
    std::vector<std::string> names;
    for (int k = 0; k < in.grid.num_renewables(); ++k) names.push_back("w" + std::to_string(k + 1));
    out.write("ambiguity.csv", o.str());
    out.write("calibration_scenarios.csv", format_scenarios(in.calibration, names));
    out.write("evaluation_scenarios.csv", format_scenarios(in.eval, names));
    std::cout << "calibrated on " << in.calibration.size() << " samples, " << in.eval.size() << " held out\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig c;
    CLI::App app{"Dispatch and do-not-exceed limit co-optimization"};
    app.set_version_flag("--version", std::string("dnetool ") + kVersion);
    app.set_config("--config", "", "key = value file; flags override it")->check(CLI::ExistingFile);
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--case", c.case_path, "MATPOWER-style case file");
    app.add_option("--forecast", c.forecast_path, "forecast table (t and one column per renewable)");
    app.add_option("--load", c.load_path, "load table (t and one column per bus id)");
    app.add_option("--history", c.history_path, "forecast-error history (sample,t,...)");
    app.add_option("--out", c.out_dir, "output directory (created when missing)");
    app.add_option("--load-scale", c.load_scale, "multiply every load")->check(CLI::PositiveNumber);
    app.add_option("--ramp-scale", c.ramp_scale, "set ramp rates to this fraction of p_max per minute")
        ->check(CLI::PositiveNumber);
    app.add_option("--moments", c.moments, "ambiguity moments: calibrated from data or the known schedule")
        ->check(CLI::IsMember({"calibrated", "schedule"}));
    app.add_option("--split", c.split, "fraction of the data used for calibration")->check(CLI::Range(0.01, 0.99));
    app.add_option("--scenarios", c.scenarios, "held-out evaluation scenarios")->check(CLI::PositiveNumber);
    app.add_option("--seed", c.seed, "sampling seed");
    app.add_option("--delta", c.delta, "utilization weight ($)")->check(CLI::NonNegativeNumber);
    app.add_option("--u0", c.u0, "utilization floor, in (2/3, 1]");
    app.add_option("--delta-plus", c.delta_plus, "weight on expected overestimation cost")->check(CLI::NonNegativeNumber);
    app.add_option("--delta-minus", c.delta_minus, "weight on expected underestimation cost")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--segments", c.segments, "piecewise-linear segments H")->check(CLI::PositiveNumber);
    app.add_option("--shed-price", c.penalties.shed, "$/MW of load shed")->check(CLI::NonNegativeNumber);
    app.add_option("--curtail-price", c.penalties.curtail, "$/MW of curtailment")->check(CLI::NonNegativeNumber);
    app.add_option("--redispatch-multiplier", c.penalties.redispatch, "premium on re-dispatch fuel cost")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--threads", c.threads, "parallel solves in a sweep")->check(CLI::PositiveNumber);
    app.add_flag("--verbose", c.verbose, "interior-point log");

    auto* solve = app.add_subcommand("solve", "co-optimize dispatch and DNE limits");
    auto* sweep_cmd = app.add_subcommand("sweep", "cost-utilization frontier over a delta schedule");
    sweep_cmd->add_option("--preset", c.preset, "named schedule")->check(CLI::IsMember({"paper"}));
    sweep_cmd->add_option("--deltas", c.deltas, "explicit schedule, strictly increasing");
    auto* eval = app.add_subcommand("evaluate", "out-of-sample Monte Carlo of a solution");
    eval->add_option("--solution", c.solution_path, "solution file; solved on the fly when absent");
    eval->add_flag("--baseline", c.baseline, "evaluate the fixed-dispatch baseline instead");
    auto* base = app.add_subcommand("baseline", "DNE limits under the fixed economic dispatch");
    auto* jtau = app.add_subcommand("jtau", "audit J(tau) against the grid oracle and its CPLA");
    jtau->add_option("--tau", c.taus, "thresholds")->check(CLI::NonNegativeNumber);
    jtau->add_option("--grid", c.grid, "oracle grid points")->check(CLI::Range(3, 100001));
    jtau->add_option("--halfwidth", c.halfwidth, "oracle grid half-width")->check(CLI::PositiveNumber);
    auto* cal = app.add_subcommand("calibrate", "moment calibration and data split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (app.got_subcommand(jtau) == false && c.case_path.empty())
            throw Error(ErrorKind::Config, "--case is required");
        std::error_code ec;
        fs::create_directories(c.out_dir, ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + c.out_dir + ": " + ec.message());
        if (app.got_subcommand(solve)) return cmd_solve(c);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(c);
        if (app.got_subcommand(eval)) return cmd_evaluate(c);
        if (app.got_subcommand(base)) return cmd_baseline(c);
        if (app.got_subcommand(jtau)) return cmd_jtau(c);
        if (app.got_subcommand(cal)) return cmd_calibrate(c);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return error_exit(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}

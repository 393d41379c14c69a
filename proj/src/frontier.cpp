#include "dne/frontier.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "dne/error.hpp"

namespace dne {

namespace {

FrontierRow solve_row(const GridCase& g, const AmbiguitySet& amb, double delta, const ScenarioSet& eval,
                      const SweepOptions& opt) {
    FrontierRow row;
    row.delta = delta;
    SolveConfig cfg = opt.config;
    cfg.delta = delta;
    try {
        const auto s = solve_drco(g, amb, cfg);
        row.status = s.status;
        row.message = s.message;
        row.verified = s.verify.passed;
        row.wall_time = s.wall_time;
        row.iterations = s.iterations;
        if (!s.optimal()) return row;
        row.dispatch_cost = s.dispatch_cost;
        row.u = s.u;
        row.objective = s.objective;
        for (int t = 0; t < g.periods(); ++t) {
            row.w_lo.push_back(amb.mean.col(t).sum() + s.eps_lo.col(t).sum());
            row.w_hi.push_back(amb.mean.col(t).sum() + s.eps_hi.col(t).sum());
            row.mw_lo.push_back(g.forecast.col(t).sum() + s.eps_lo.col(t).sum());
            row.mw_hi.push_back(g.forecast.col(t).sum() + s.eps_hi.col(t).sum());
        }
        if (eval.size() > 0) {
            row.utilization = evaluate(s, g, eval, opt.penalties).utilization;
            row.min_utilization = *std::min_element(row.utilization.begin(), row.utilization.end());
        }
    } catch (const Error& e) {
        row.status = e.kind() == ErrorKind::Infeasible ? conic::Status::Infeasible : conic::Status::NumericalLimit;
        row.message = e.what();
    }
    return row;
}

}  // namespace

std::vector<double> preset_schedule() {
    std::vector<double> d{1.0};
    for (double x = 100.0; x <= 1000.0; x += 100.0) d.push_back(x);
    for (double x = 1400.0; x <= 5000.0; x += 400.0) d.push_back(x);
    for (double x = 6000.0; x <= 10000.0; x += 1000.0) d.push_back(x);
    for (double x = 14000.0; x <= 38000.0; x += 4000.0) d.push_back(x);
    return d;
}

FrontierTable sweep(const GridCase& g, const AmbiguitySet& amb, const std::vector<double>& schedule,
                    const ScenarioSet& eval, const SweepOptions& opt) {
    if (schedule.empty()) throw Error(ErrorKind::Config, "empty delta schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i - 1])) throw Error(ErrorKind::Config, "delta schedule must be strictly increasing");
    opt.config.validate(g);

    FrontierTable table;
    table.rows.resize(schedule.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < schedule.size();) table.rows[i] = solve_row(g, amb, schedule[i], eval, opt);
    };
    const int n = std::clamp(opt.threads, 1, static_cast<int>(schedule.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < n; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    return table;
}

std::string FrontierTable::format(bool timing) const {
    std::ostringstream o;
    o.precision(12);
    o << "delta,status,verified,dispatch_cost,u,objective,min_utilization," << (timing ? "wall_time," : "")
      << "iterations\n";
    for (const auto& r : rows) {
        o << r.delta << "," << conic::to_string(r.status) << "," << (r.verified ? 1 : 0) << "," << r.dispatch_cost << ","
          << r.u << "," << r.objective << "," << r.min_utilization << ",";
        if (timing) o << r.wall_time << ",";
        o << r.iterations << "\n";
    }
    return o.str();
}

std::string FrontierTable::format_ranges() const {
    std::ostringstream o;
    o.precision(12);
    o << "delta,t,w_lo,w_hi,mw_lo,mw_hi,utilization\n";
    for (const auto& r : rows)
        for (std::size_t t = 0; t < r.w_lo.size(); ++t) {
            o << r.delta << "," << t + 1 << "," << r.w_lo[t] << "," << r.w_hi[t] << "," << r.mw_lo[t] << ","
              << r.mw_hi[t] << ",";
            if (t < r.utilization.size()) o << r.utilization[t];
            o << "\n";
        }
    return o.str();
}

}  // namespace dne

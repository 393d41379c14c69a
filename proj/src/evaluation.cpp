#include "dne/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "dne/error.hpp"

namespace dne {

namespace {

// value = c + sum a_j eps_j, with j = t * K + k over the whole horizon
struct Row {
    explicit Row(std::string n) : name(std::move(n)) {}
    std::string name;
    double c = 0.0;
    std::vector<std::pair<int, double>> a;
    double rhs = 0.0;
    bool equality = false;
};

// p_it(eps) = p_hat + sum_k b_ik + sum_k B_ik eps_kt
struct Policy {
    int I, K;
    Eigen::MatrixXd c;  // I x T
    const DneSolution& sol;

    void add(Row& r, int i, int t, double w) const {
        r.c += w * c(i, t);
        for (int k = 0; k < K; ++k)
            if (double v = w * sol.B[t](i, k); v != 0.0) r.a.emplace_back(t * K + k, v);
    }
};

void check_shapes(const DneSolution& s, const GridCase& g) {
    const int I = g.num_generators(), K = g.num_renewables(), T = g.periods();
    if (s.p_hat.rows() != I || s.p_hat.cols() != T || s.eps_lo.rows() != K || s.eps_lo.cols() != T ||
        static_cast<int>(s.B.size()) != T || static_cast<int>(s.b.size()) != T)
        throw Error(ErrorKind::Data, "solution shape does not match the case");
}

// Merges repeated coordinates so the box extremum sees one coefficient each.
void compress(std::vector<Row>& rows) {
    for (auto& r : rows) {
        std::sort(r.a.begin(), r.a.end());
        std::vector<std::pair<int, double>> merged;
        for (const auto& [j, v] : r.a) {
            if (!merged.empty() && merged.back().first == j)
                merged.back().second += v;
            else
                merged.emplace_back(j, v);
        }
        r.a = std::move(merged);
    }
}

std::vector<Row> policy_rows(const DneSolution& s, const GridCase& g) {
    check_shapes(s, g);
    const int I = g.num_generators(), K = g.num_renewables(), T = g.periods(), L = g.num_lines();
    Policy pol{I, K, Eigen::MatrixXd(I, T), s};
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < I; ++i) pol.c(i, t) = s.p_hat(i, t) + s.b[t].row(i).sum();
    const double dd = g.time.dispatch_minutes, dr = g.time.response_minutes;
    const Eigen::MatrixXd base = -g.shift_factors.transpose() * g.load;  // L x T

    std::vector<Row> rows;
    for (int t = 0; t < T; ++t) {
        const std::string at = "[t=" + std::to_string(t + 1) + "]";
        Row bal{"balance" + at};
        bal.equality = true;
        bal.rhs = g.total_load(t);
        for (int i = 0; i < I; ++i) pol.add(bal, i, t, 1.0);
        for (int k = 0; k < K; ++k) {
            bal.c += g.forecast(k, t);
            bal.a.emplace_back(t * K + k, 1.0);
        }
        rows.push_back(std::move(bal));

        for (int l = 0; l < L; ++l) {
            const double cap = g.lines[l].capacity;
            if (!std::isfinite(cap)) continue;
            Row f{"line " + std::to_string(l + 1) + at};
            f.c = base(l, t);
            f.rhs = cap;
            for (int i = 0; i < I; ++i) pol.add(f, i, t, g.shift_factors(g.generators[i].bus, l));
            for (int k = 0; k < K; ++k) {
                const double sf = g.shift_factors(g.renewables[k].bus, l);
                f.c += sf * g.forecast(k, t);
                if (sf != 0.0) f.a.emplace_back(t * K + k, sf);
            }
            Row r = f;
            r.name = "-" + r.name;
            r.c = -r.c;
            for (auto& [j, v] : r.a) v = -v;
            rows.push_back(std::move(f));
            rows.push_back(std::move(r));
        }

        for (int i = 0; i < I; ++i) {
            const auto& u = g.generators[i];
            const std::string unit = " unit " + std::to_string(i + 1) + at;
            Row hi{"p_max" + unit}, lo{"p_min" + unit};
            pol.add(hi, i, t, 1.0);
            hi.rhs = u.p_max;
            pol.add(lo, i, t, -1.0);
            lo.rhs = -u.p_min;
            rows.push_back(std::move(hi));
            rows.push_back(std::move(lo));

            if (s.agc.empty() || s.agc[i]) {
                // response window around the schedule
                Row wu{"window up" + unit}, wd{"window down" + unit};
                pol.add(wu, i, t, 1.0);
                wu.c -= s.p_hat(i, t);
                wu.rhs = u.ramp_up * dr;
                pol.add(wd, i, t, -1.0);
                wd.c += s.p_hat(i, t);
                wd.rhs = u.ramp_down * dr;
                if (std::isfinite(wu.rhs)) rows.push_back(std::move(wu));
                if (std::isfinite(wd.rhs)) rows.push_back(std::move(wd));
            }

            Row ru{"ramp up" + unit}, rd{"ramp down" + unit};
            ru.rhs = u.ramp_up * dd;
            rd.rhs = u.ramp_down * dd;
            pol.add(ru, i, t, 1.0);
            pol.add(rd, i, t, -1.0);
            if (t > 0) {
                pol.add(ru, i, t - 1, -1.0);
                pol.add(rd, i, t - 1, 1.0);
            } else if (!g.initial_dispatch.empty()) {
                ru.c -= g.initial_dispatch[i];
                rd.c += g.initial_dispatch[i];
            } else {
                continue;
            }
            if (std::isfinite(ru.rhs)) rows.push_back(std::move(ru));
            if (std::isfinite(rd.rhs)) rows.push_back(std::move(rd));
        }
    }
    compress(rows);
    return rows;
}

double row_value(const Row& r, const Eigen::MatrixXd& eps) {
    double v = r.c;
    for (const auto& [j, a] : r.a) v += a * eps.data()[j];  // column-major: j = t * K + k
    return v;
}

}  // namespace

void PenaltyConfig::validate() const {
    if (!(shed >= 0.0) || !(curtail >= 0.0) || !(redispatch >= 0.0))
        throw Error(ErrorKind::Config, "penalty prices must be >= 0");
}

double policy_violation(const DneSolution& sol, const GridCase& grid, const Eigen::MatrixXd& eps) {
    const auto rows = policy_rows(sol, grid);
    if (eps.rows() != grid.num_renewables() || eps.cols() != grid.periods())
        throw Error(ErrorKind::Data, "realization shape does not match the case");
    double worst = 0.0;
    for (const auto& r : rows) {
        const double v = row_value(r, eps) - r.rhs;
        worst = std::max(worst, r.equality ? std::abs(v) : v);
    }
    return worst;
}

RobustReport verify_robust(const DneSolution& sol, const GridCase& grid) {
    const auto rows = policy_rows(sol, grid);
    RobustReport rep;
    rep.max_violation = -std::numeric_limits<double>::infinity();
    const double* lo = sol.eps_lo.data();
    const double* hi = sol.eps_hi.data();
    for (const auto& r : rows) {
        double top = r.c, bottom = r.c;
        for (const auto& [j, a] : r.a) {
            top += std::max(a * hi[j], a * lo[j]);
            bottom += std::min(a * hi[j], a * lo[j]);
        }
        const double v = r.equality ? std::max(std::abs(top - r.rhs), std::abs(bottom - r.rhs)) : top - r.rhs;
        ++rep.rows;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.worst_row = r.name;
        }
    }
    return rep;
}

EvaluationReport evaluate(const DneSolution& sol, const GridCase& grid, const ScenarioSet& set,
                          const PenaltyConfig& pen) {
    pen.validate();
    check_shapes(sol, grid);
    const int I = grid.num_generators(), K = grid.num_renewables(), T = grid.periods();
    const auto rows = policy_rows(sol, grid);
    double base_cost = 0.0;
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < I; ++i) base_cost += grid.generators[i].cost.evaluate(sol.p_hat(i, t));

    EvaluationReport rep;
    rep.scenarios = set.size();
    rep.seed = set.seed;
    rep.utilization.assign(T, 0.0);
    for (const auto& eps : set.scenarios) {
        if (eps.rows() != K || eps.cols() != T) throw Error(ErrorKind::Data, "scenario shape does not match the case");
        Eigen::MatrixXd clip = eps.cwiseMax(sol.eps_lo).cwiseMin(sol.eps_hi);
        const double shed = (sol.eps_lo - eps).cwiseMax(0.0).sum();
        const double curtail = (eps - sol.eps_hi).cwiseMax(0.0).sum();
        double fuel = 0.0;
        for (int t = 0; t < T; ++t) {
            const Eigen::VectorXd p = sol.redispatch(t, clip.col(t));
            for (int i = 0; i < I; ++i) fuel += grid.generators[i].cost.evaluate(p(i));
            bool inside = true;
            for (int k = 0; k < K; ++k) inside = inside && eps(k, t) >= sol.eps_lo(k, t) && eps(k, t) <= sol.eps_hi(k, t);
            if (inside) rep.utilization[t] += 1.0;
        }
        for (const auto& r : rows) {
            const double v = row_value(r, clip) - r.rhs;
            rep.max_policy_violation = std::max(rep.max_policy_violation, r.equality ? std::abs(v) : v);
        }
        rep.cost.push_back(base_cost + pen.redispatch * (fuel - base_cost) + pen.shed * shed + pen.curtail * curtail);
        rep.shed.push_back(shed);
        rep.curtailed.push_back(curtail);
    }
    const double n = std::max(1, rep.scenarios);
    for (auto& u : rep.utilization) u /= n;
    for (int s = 0; s < rep.scenarios; ++s) {
        rep.avg_cost += rep.cost[s];
        rep.avg_shed += rep.shed[s];
        rep.avg_curtail += rep.curtailed[s];
    }
    rep.avg_cost /= n;
    rep.avg_shed /= n;
    rep.avg_curtail /= n;
    rep.max_cost = rep.cost.empty() ? 0.0 : *std::max_element(rep.cost.begin(), rep.cost.end());
    rep.robust_ok = rep.max_policy_violation <= 1e-6;
    return rep;
}

double guaranteed_utilization(const DneSolution& sol, const AmbiguitySet& amb) {
    double worst = 1.0;
    for (int t = 0; t < amb.periods(); ++t) {
        double miss = 0.0;
        for (int k = 0; k < amb.renewables(); ++k) {
            const double lambda =
                std::min(amb.mean(k, t) - sol.eps_lo(k, t), sol.eps_hi(k, t) - amb.mean(k, t)) / amb.stddev(k, t);
            if (lambda <= 0.0)
                miss += 1.0;
            else if (lambda >= 2.0 / std::sqrt(3.0))
                miss += 1.0 - gauss_worst_coverage(lambda);
            else
                miss += 1.0 - lambda / std::sqrt(3.0);
        }
        worst = std::min(worst, std::max(0.0, 1.0 - miss));
    }
    return worst;
}

DneSolution solve_odne_baseline(const GridCase& g, const AmbiguitySet& amb, const conic::Settings& settings) {
    const auto start = std::chrono::steady_clock::now();
    const int I = g.num_generators(), K = g.num_renewables(), T = g.periods();
    SolveConfig cfg;
    cfg.settings = settings;

    // nominal economic dispatch
    Eigen::MatrixXd p_hat(I, T);
    {
        DrcoModel ed;
        SolveConfig none = cfg;
        none.agc.assign(I, false);
        ed.vars = allocate_variables(ed.program, g, amb, none);
        build_nominal_ed(ed.program, g, ed.vars);
        build_objective(ed.program, g, none, ed.vars);
        const auto sol = conic::solve(ed.program, settings);
        if (!sol.optimal()) {
            DneSolution d;
            d.status = sol.status;
            d.message = "nominal dispatch: " + sol.message;
            return d;
        }
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < I; ++i) p_hat(i, t) = sol.x[ed.vars.at(ed.vars.p_hat, i, t)];
    }

    DrcoModel m;
    m.vars = allocate_variables(m.program, g, amb, cfg);
    const auto& vm = m.vars;
    int agc = 0;
    for (bool a : vm.agc) agc += a ? 1 : 0;
    if (agc == 0) throw Error(ErrorKind::Config, "baseline needs at least one AGC unit");
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < I; ++i) {
            m.program.set_bounds(vm.at(vm.p_hat, i, t), p_hat(i, t), p_hat(i, t));
            if (!vm.agc[i]) continue;
            // S = B (eps_hi - eps_lo), s0 = B sum_k eps_lo, B = -1/|AGC|
            conic::LinearExpr s0 = conic::LinearExpr::var(vm.at(vm.s0, i, t));
            for (int k = 0; k < K; ++k) {
                s0.add(vm.kt(vm.eps_lo, k, t), 1.0 / agc);
                m.program.add_equality(conic::LinearExpr::var(vm.at(vm.S, i, k, t))
                                           .add(vm.kt(vm.eps_hi, k, t), 1.0 / agc)
                                           .add(vm.kt(vm.eps_lo, k, t), -1.0 / agc),
                                       0.0);
            }
            m.program.add_equality(s0, 0.0);
        }
        for (int k = 0; k < K; ++k) {
            m.program.add_objective(vm.kt(vm.eps_hi, k, t), -1.0);
            m.program.add_objective(vm.kt(vm.eps_lo, k, t), 1.0);
        }
    }
    build_robust_box(m.program, g, vm);
    const auto sol = conic::solve(m.program, settings);
    DneSolution d;
    if (!sol.x.empty() && sol.status != conic::Status::Infeasible && sol.status != conic::Status::Unbounded)
        d = recover(g, m, sol.x, cfg);
    d.status = sol.status;
    d.message = sol.message;
    d.iterations = sol.iterations;
    if (!sol.x.empty()) d.verify = conic::verify(m.program, sol.x, settings.verify_tol);
    if (d.optimal()) {
        d.u = guaranteed_utilization(d, amb);
        d.utilization_reward = 0.0;
        d.objective = d.dispatch_cost;
    }
    d.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return d;
}

std::string format_summary(const EvaluationReport& r) {
    std::ostringstream o;
    o.precision(10);
    o << "scenarios,seed,AvgC,MaxC,AvgLS,AvgWC\n";
    o << r.scenarios << "," << r.seed << "," << r.avg_cost << "," << r.max_cost << "," << r.avg_shed << ","
      << r.avg_curtail << "\n";
    return o.str();
}

std::string format_scenario_costs(const EvaluationReport& r) {
    std::ostringstream o;
    o.precision(10);
    o << "scenario,cost,shed,curtailed\n";
    for (int s = 0; s < r.scenarios; ++s) o << s + 1 << "," << r.cost[s] << "," << r.shed[s] << "," << r.curtailed[s] << "\n";
    return o.str();
}

std::string format_utilization(const EvaluationReport& r) {
    std::ostringstream o;
    o.precision(10);
    o << "t,utilization\n";
    for (std::size_t t = 0; t < r.utilization.size(); ++t) o << t + 1 << "," << r.utilization[t] << "\n";
    return o.str();
}

}  // namespace dne

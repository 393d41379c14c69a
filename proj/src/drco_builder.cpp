#include "dne/drco_builder.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "dne/error.hpp"
#include "dne/expected_cost.hpp"

namespace dne {

using conic::kInf;
using conic::LinearExpr;

namespace {

constexpr double kTinyShift = 1e-12;
constexpr double kDegenerateWidth = 1e-9;

// a0 + sum_k max(c_k, 0) over the box, with one R_k per non-constant c_k.
void add_box_row(conic::ConicProgram& prog, LinearExpr a0, const std::vector<LinearExpr>& c, double rhs) {
    for (const auto& ck : c) {
        if (ck.is_constant()) {
            a0.shift(std::max(ck.constant, 0.0));
            continue;
        }
        const int r = prog.add_variable(0.0, kInf);
        a0.add(r, 1.0);
        LinearExpr row = ck;
        row.add(r, -1.0);
        prog.add_inequality(row, 0.0);  // c_k <= R_k
    }
    prog.add_inequality(std::move(a0), rhs);
}

// Chance rows for one (k,t); shared by the full model and the half-width probe.
void add_chance_rows(conic::ConicProgram& prog, int r, int s, int z, int eps_lo, int eps_hi, double mu,
                     double sigma) {
    static const double root = std::sqrt(8.0 / 3.0);
    // ||(sqrt(8/3), r - z)|| <= r + z  <=>  r z >= 2/3
    prog.add_soc(LinearExpr::var(r).add(z, 1.0), {LinearExpr(root), LinearExpr::var(r).add(z, -1.0)});
    // ||(s - 1, 2 z)|| <= s + 1  <=>  z^2 <= s
    prog.add_soc(LinearExpr::var(s).shift(1.0), {LinearExpr::var(s).shift(-1.0), LinearExpr::var(z, 2.0)});
    // sigma r <= mu - eps_lo,  sigma r <= eps_hi - mu
    prog.add_inequality(LinearExpr::var(r, sigma).add(eps_lo, 1.0), mu);
    prog.add_inequality(LinearExpr::var(r, sigma).add(eps_hi, -1.0), -mu);
}

// sum_n f_nl * (injection at n) split by source.
struct FlowTerms {
    Eigen::MatrixXd gen;  // L x I
    Eigen::MatrixXd ren;  // L x K
    Eigen::MatrixXd base; // L x T: sum_n f_nl (sum_k w_hat - d)
};

FlowTerms flow_terms(const GridCase& g) {
    FlowTerms f;
    const int L = g.num_lines(), I = g.num_generators(), K = g.num_renewables(), T = g.periods();
    f.gen.resize(L, I);
    f.ren.resize(L, K);
    for (int l = 0; l < L; ++l) {
        for (int i = 0; i < I; ++i) f.gen(l, i) = g.shift_factors(g.generators[i].bus, l);
        for (int k = 0; k < K; ++k) f.ren(l, k) = g.shift_factors(g.renewables[k].bus, l);
    }
    f.base = -g.shift_factors.transpose() * g.load;
    for (int k = 0; k < K; ++k)
        for (int t = 0; t < T; ++t) f.base.col(t) += f.ren.col(k) * g.forecast(k, t);
    auto clean = [](Eigen::MatrixXd& m) {
        for (Eigen::Index j = 0; j < m.size(); ++j)
            if (std::abs(m.data()[j]) < kTinyShift) m.data()[j] = 0.0;
    };
    clean(f.gen);
    clean(f.ren);
    return f;
}

}  // namespace

// ---------------------------------------------------------------- config

std::vector<bool> SolveConfig::agc_mask(const GridCase& g) const {
    if (!agc.empty()) return agc;
    std::vector<bool> m(g.num_generators());
    for (int i = 0; i < g.num_generators(); ++i) m[i] = g.generators[i].agc;
    return m;
}

void SolveConfig::validate(const GridCase& g) const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
    if (!(u0 > 2.0 / 3.0) || !(u0 <= 1.0))
        fail("u0 must lie in (2/3, 1]: the Gauss-bound reformulation needs u > 2/3");
    if (!(delta >= 0.0) || !std::isfinite(delta)) fail("delta must be finite and >= 0");
    if (!(delta_plus >= 0.0) || !(delta_minus >= 0.0)) fail("delta+ and delta- must be >= 0");
    if (segments < 1) fail("segment count H must be >= 1");
    if (!agc.empty() && static_cast<int>(agc.size()) != g.num_generators())
        fail("AGC mask needs one entry per generator");
    const int K = g.num_renewables(), T = g.periods();
    for (const auto* c : {&c_plus, &c_minus})
        if (c->size() != 0 && (c->rows() != K || c->cols() != T || c->minCoeff() < 0.0))
            fail("c+/c- must be K x T and nonnegative");
}

// ---------------------------------------------------------------- variables

VariableMap allocate_variables(conic::ConicProgram& prog, const GridCase& g, const AmbiguitySet& amb,
                               const SolveConfig& cfg) {
    VariableMap vm;
    vm.I = g.num_generators();
    vm.K = g.num_renewables();
    vm.T = g.periods();
    vm.agc = cfg.agc_mask(g);
    const int I = vm.I, K = vm.K, T = vm.T;
    if (amb.renewables() != K || amb.periods() != T)
        throw Error(ErrorKind::Data, "ambiguity set shape does not match the case");
    amb.validate();

    vm.p_hat.assign(I * T, -1);
    vm.s0.assign(I * T, -1);
    vm.cost.assign(I * T, -1);
    vm.S.assign(I * K * T, -1);
    vm.r_up.assign(I * K * T, -1);
    vm.r_dn.assign(I * K * T, -1);
    vm.eps_lo.assign(K * T, -1);
    vm.eps_hi.assign(K * T, -1);
    vm.r.assign(K * T, -1);
    vm.s.assign(K * T, -1);
    vm.z.assign(K * T, -1);

    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < I; ++i) {
            const auto& u = g.generators[i];
            vm.p_hat[t * I + i] = prog.add_variable(u.p_min, u.p_max);
            if (!vm.agc[i]) continue;
            vm.s0[t * I + i] = prog.add_variable();
            for (int k = 0; k < K; ++k) {
                const int j = (t * I + i) * K + k;
                vm.S[j] = prog.add_variable();
                vm.r_up[j] = prog.add_variable(0.0, kInf);
                vm.r_dn[j] = prog.add_variable(0.0, kInf);
            }
        }
        for (int k = 0; k < K; ++k) {
            const auto& w = g.renewables[k];
            const double f = g.forecast(k, t);
            vm.eps_lo[t * K + k] = prog.add_variable(w.w_min - f, 0.0);
            vm.eps_hi[t * K + k] = prog.add_variable(0.0, w.w_max - f);
            vm.r[t * K + k] = prog.add_variable(0.0, kInf);
            vm.s[t * K + k] = prog.add_variable(0.0, kInf);
            vm.z[t * K + k] = prog.add_variable(0.0, kInf);
        }
    }
    vm.u = prog.add_variable(cfg.u0, 1.0);
    return vm;
}

// ---------------------------------------------------------------- nominal

void build_nominal_ed(conic::ConicProgram& prog, const GridCase& g, const VariableMap& vm) {
    const int I = vm.I, T = vm.T, L = g.num_lines();
    const FlowTerms ft = flow_terms(g);
    for (int t = 0; t < T; ++t) {
        LinearExpr bal;
        for (int i = 0; i < I; ++i) bal.add(vm.at(vm.p_hat, i, t), 1.0);
        prog.add_equality(bal, g.total_load(t) - g.forecast.col(t).sum());

        for (int l = 0; l < L; ++l) {
            const double cap = g.lines[l].capacity;
            if (!std::isfinite(cap)) continue;
            LinearExpr flow(ft.base(l, t));
            for (int i = 0; i < I; ++i) flow.add(vm.at(vm.p_hat, i, t), ft.gen(l, i));
            prog.add_inequality(flow, cap);
            prog.add_inequality(-1.0 * flow, cap);
        }

        for (int i = 0; i < I; ++i) {
            const auto& u = g.generators[i];
            const double up = u.ramp_up * g.time.dispatch_minutes, dn = u.ramp_down * g.time.dispatch_minutes;
            LinearExpr step = LinearExpr::var(vm.at(vm.p_hat, i, t));
            if (t > 0)
                step.add(vm.at(vm.p_hat, i, t - 1), -1.0);
            else if (!g.initial_dispatch.empty())
                step.shift(-g.initial_dispatch[i]);
            else
                continue;
            if (std::isfinite(up)) prog.add_inequality(step, up);
            if (std::isfinite(dn)) prog.add_inequality(-1.0 * step, dn);
        }
    }
}

// ---------------------------------------------------------------- robust

void build_robust_box(conic::ConicProgram& prog, const GridCase& g, const VariableMap& vm) {
    const int I = vm.I, K = vm.K, T = vm.T, L = g.num_lines();
    const FlowTerms ft = flow_terms(g);
    const double dr = g.time.response_minutes, dd = g.time.dispatch_minutes;

    for (int t = 0; t < T; ++t) {
        // balance by coefficient matching
        for (int k = 0; k < K; ++k) {
            LinearExpr e = LinearExpr::var(vm.kt(vm.eps_hi, k, t)).add(vm.kt(vm.eps_lo, k, t), -1.0);
            for (int i = 0; i < I; ++i)
                if (vm.agc[i]) e.add(vm.at(vm.S, i, k, t), 1.0);
            prog.add_equality(e, 0.0);
        }
        {
            LinearExpr e;
            for (int k = 0; k < K; ++k) e.add(vm.kt(vm.eps_lo, k, t), 1.0);
            for (int i = 0; i < I; ++i)
                if (vm.agc[i]) e.add(vm.at(vm.s0, i, t), 1.0);
            prog.add_equality(e, 0.0);
        }

        // line limits
        for (int l = 0; l < L; ++l) {
            const double cap = g.lines[l].capacity;
            if (!std::isfinite(cap)) continue;
            LinearExpr a0(ft.base(l, t));
            std::vector<LinearExpr> c(K);
            for (int k = 0; k < K; ++k) {
                a0.add(vm.kt(vm.eps_lo, k, t), ft.ren(l, k));
                c[k].add(vm.kt(vm.eps_hi, k, t), ft.ren(l, k)).add(vm.kt(vm.eps_lo, k, t), -ft.ren(l, k));
            }
            for (int i = 0; i < I; ++i) {
                a0.add(vm.at(vm.p_hat, i, t), ft.gen(l, i));
                if (!vm.agc[i]) continue;
                a0.add(vm.at(vm.s0, i, t), ft.gen(l, i));
                for (int k = 0; k < K; ++k) c[k].add(vm.at(vm.S, i, k, t), ft.gen(l, i));
            }
            add_box_row(prog, a0, c, cap);
            std::vector<LinearExpr> neg;
            for (const auto& ck : c) neg.push_back(-1.0 * ck);
            add_box_row(prog, -1.0 * a0, neg, cap);
        }

        // per-unit rows; R_up >= S, R_dn >= -S are shared by every row that
        // needs the positive or negative part of the same coefficient
        for (int i = 0; i < I; ++i) {
            if (!vm.agc[i]) continue;
            const auto& u = g.generators[i];
            LinearExpr sum_up, sum_dn;
            for (int k = 0; k < K; ++k) {
                const int S = vm.at(vm.S, i, k, t);
                prog.add_inequality(LinearExpr::var(S).add(vm.at(vm.r_up, i, k, t), -1.0), 0.0);
                prog.add_inequality(LinearExpr::var(S, -1.0).add(vm.at(vm.r_dn, i, k, t), -1.0), 0.0);
                sum_up.add(vm.at(vm.r_up, i, k, t), 1.0);
                sum_dn.add(vm.at(vm.r_dn, i, k, t), 1.0);
            }
            const LinearExpr shift = LinearExpr::var(vm.at(vm.s0, i, t));
            const LinearExpr level = LinearExpr::var(vm.at(vm.p_hat, i, t)).add(shift);
            // capacity
            prog.add_inequality(level + sum_up, u.p_max);
            prog.add_inequality(-1.0 * level + sum_dn, -u.p_min);
            // response window
            if (std::isfinite(u.ramp_up)) prog.add_inequality(shift + sum_up, u.ramp_up * dr);
            if (std::isfinite(u.ramp_down)) prog.add_inequality(-1.0 * shift + sum_dn, u.ramp_down * dr);
            // inter-period ramp, policies of t and t-1 over independent boxes
            if (t > 0) {
                LinearExpr prev = LinearExpr::var(vm.at(vm.p_hat, i, t - 1)).add(vm.at(vm.s0, i, t - 1), 1.0);
                LinearExpr prev_up, prev_dn;
                for (int k = 0; k < K; ++k) {
                    prev_up.add(vm.at(vm.r_up, i, k, t - 1), 1.0);
                    prev_dn.add(vm.at(vm.r_dn, i, k, t - 1), 1.0);
                }
                if (std::isfinite(u.ramp_up)) prog.add_inequality(level - prev + sum_up + prev_dn, u.ramp_up * dd);
                if (std::isfinite(u.ramp_down))
                    prog.add_inequality(prev - level + sum_dn + prev_up, u.ramp_down * dd);
            } else if (!g.initial_dispatch.empty()) {
                const double p0 = g.initial_dispatch[i];
                if (std::isfinite(u.ramp_up)) prog.add_inequality(level + sum_up, u.ramp_up * dd + p0);
                if (std::isfinite(u.ramp_down)) prog.add_inequality(-1.0 * level + sum_dn, u.ramp_down * dd - p0);
            }
        }
    }
}

// ---------------------------------------------------------------- chance

void build_chance_socp(conic::ConicProgram& prog, const AmbiguitySet& amb, const SolveConfig& cfg,
                       const VariableMap& vm) {
    if (!(cfg.u0 > 2.0 / 3.0))
        throw Error(ErrorKind::Config, "u0 must exceed 2/3: the Gauss-bound reformulation needs u > 2/3");
    prog.set_bounds(vm.u, cfg.u0, 1.0);
    for (int t = 0; t < vm.T; ++t) {
        LinearExpr budget = LinearExpr::var(vm.u);
        for (int k = 0; k < vm.K; ++k) {
            add_chance_rows(prog, vm.kt(vm.r, k, t), vm.kt(vm.s, k, t), vm.kt(vm.z, k, t), vm.kt(vm.eps_lo, k, t),
                            vm.kt(vm.eps_hi, k, t), amb.mean(k, t), amb.stddev(k, t));
            budget.add(vm.kt(vm.s, k, t), 1.0);
        }
        if (vm.K > 0) prog.add_inequality(budget, 1.0);  // sum_k s_kt <= 1 - u
    }
}

// ---------------------------------------------------------------- objective

void build_objective(conic::ConicProgram& prog, const GridCase& g, const SolveConfig& cfg, VariableMap& vm) {
    for (int t = 0; t < vm.T; ++t)
        for (int i = 0; i < vm.I; ++i) {
            const auto& c = g.generators[i].cost;
            const int p = vm.at(vm.p_hat, i, t);
            c.validate("generator[" + std::to_string(i) + "]");
            switch (c.kind) {
                case CostCurve::Kind::Linear:
                    prog.add_objective(LinearExpr::var(p, c.c1).shift(c.c0));
                    break;
                case CostCurve::Kind::Quadratic: {
                    prog.add_objective(LinearExpr::var(p, c.c1).shift(c.c0));
                    if (c.c2 == 0.0) break;
                    const double rho = std::max(1.0, g.generators[i].p_max);
                    const int y = prog.add_variable(0.0, kInf);
                    vm.cost[t * vm.I + i] = y;
                    prog.add_soc(LinearExpr::var(y).shift(rho), {LinearExpr::var(p, 2.0), LinearExpr::var(y).shift(-rho)});
                    prog.add_objective(y, c.c2 * rho);
                    break;
                }
                case CostCurve::Kind::PiecewiseLinear: {
                    const int y = prog.add_variable();
                    vm.cost[t * vm.I + i] = y;
                    for (std::size_t s = 0; s + 1 < c.points.size(); ++s) {
                        const auto& [x0, y0] = c.points[s];
                        const auto& [x1, y1] = c.points[s + 1];
                        const double slope = (y1 - y0) / (x1 - x0);
                        // y >= y0 + slope (p - x0)
                        prog.add_inequality(LinearExpr::var(p, slope).add(y, -1.0), slope * x0 - y0);
                    }
                    prog.add_objective(y, 1.0);
                    break;
                }
            }
        }
    prog.add_objective(vm.u, -cfg.delta);
}

// ---------------------------------------------------------------- assembly

DrcoModel build_drco(const GridCase& g, const AmbiguitySet& amb, const SolveConfig& cfg) {
    cfg.validate(g);
    DrcoModel m;
    m.vars = allocate_variables(m.program, g, amb, cfg);
    build_nominal_ed(m.program, g, m.vars);
    build_robust_box(m.program, g, m.vars);
    build_chance_socp(m.program, amb, cfg, m.vars);
    build_objective(m.program, g, cfg, m.vars);
    if (cfg.extended()) extend_drco(m, g, amb, cfg);
    return m;
}

Eigen::VectorXd DneSolution::redispatch(int t, const Eigen::VectorXd& eps) const {
    Eigen::VectorXd p = p_hat.col(t);
    p += B[t] * eps + b[t].rowwise().sum();
    return p;
}

DneSolution recover(const GridCase& g, const DrcoModel& m, const std::vector<double>& x, const SolveConfig& cfg) {
    const auto& vm = m.vars;
    const int I = vm.I, K = vm.K, T = vm.T;
    DneSolution d;
    d.I = I;
    d.K = K;
    d.T = T;
    d.agc = vm.agc;
    d.p_hat.resize(I, T);
    d.s0 = Eigen::MatrixXd::Zero(I, T);
    d.eps_lo.resize(K, T);
    d.eps_hi.resize(K, T);
    d.r.resize(K, T);
    d.s.resize(K, T);
    d.z.resize(K, T);
    auto val = [&](int j) { return j >= 0 ? x[j] : 0.0; };
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            d.eps_lo(k, t) = val(vm.kt(vm.eps_lo, k, t));
            d.eps_hi(k, t) = val(vm.kt(vm.eps_hi, k, t));
            d.r(k, t) = val(vm.kt(vm.r, k, t));
            d.s(k, t) = val(vm.kt(vm.s, k, t));
            d.z(k, t) = val(vm.kt(vm.z, k, t));
        }
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(I, K), B = Eigen::MatrixXd::Zero(I, K), b = Eigen::MatrixXd::Zero(I, K);
        for (int i = 0; i < I; ++i) {
            d.p_hat(i, t) = val(vm.at(vm.p_hat, i, t));
            if (!vm.agc[i]) continue;
            d.s0(i, t) = val(vm.at(vm.s0, i, t));
            for (int k = 0; k < K; ++k) {
                S(i, k) = val(vm.at(vm.S, i, k, t));
                const double width = d.eps_hi(k, t) - d.eps_lo(k, t);
                B(i, k) = width < kDegenerateWidth ? 0.0 : S(i, k) / width;
            }
            // sum_k b_ikt = s0 - sum_k B eps_lo, spread evenly over k
            for (int k = 0; k < K; ++k) b(i, k) = d.s0(i, t) / K - B(i, k) * d.eps_lo(k, t);
        }
        d.S.push_back(S);
        d.B.push_back(B);
        d.b.push_back(b);
    }
    d.u = val(vm.u);

    for (int t = 0; t < T; ++t)
        for (int i = 0; i < I; ++i) d.dispatch_cost += g.generators[i].cost.evaluate(d.p_hat(i, t));
    d.utilization_reward = cfg.delta * d.u;
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k) {
            const int j = t * K + k;
            if (!m.ext.lambda_plus.empty())
                for (std::size_t h = 0; h < m.ext.lambda_plus[j].size(); ++h)
                    d.plus_term += cfg.delta_plus * m.ext.value_plus[j][h] * x[m.ext.lambda_plus[j][h]];
            if (!m.ext.lambda_minus.empty())
                for (std::size_t h = 0; h < m.ext.lambda_minus[j].size(); ++h)
                    d.minus_term += cfg.delta_minus * m.ext.value_minus[j][h] * x[m.ext.lambda_minus[j][h]];
        }
    d.objective = m.program.objective_value(x);
    return d;
}

DneSolution solve_drco(const GridCase& g, const AmbiguitySet& amb, const SolveConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::string> warnings;
    for (int t = 0; t < g.periods(); ++t) {
        double pmax = 0.0, pmin = 0.0;
        for (const auto& u : g.generators) {
            pmax += u.p_max;
            pmin += u.p_min;
        }
        const double net = g.total_load(t) - g.forecast.col(t).sum();
        if (pmax < net || pmin > net)
            warnings.push_back("period " + std::to_string(t + 1) + ": thermal range cannot meet the net load");
    }
    const DrcoModel m = build_drco(g, amb, cfg);
    const auto sol = conic::solve(m.program, cfg.settings, cfg.backend);
    DneSolution d;
    if (!sol.x.empty() && sol.status != conic::Status::Infeasible && sol.status != conic::Status::Unbounded)
        d = recover(g, m, sol.x, cfg);
    d.status = sol.status;
    d.message = sol.message;
    d.warnings = std::move(warnings);
    d.iterations = sol.iterations;
    if (!sol.x.empty()) d.verify = conic::verify(m.program, sol.x, cfg.settings.verify_tol);
    d.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return d;
}

// ---------------------------------------------------------------- probe

double min_half_width(double sigma, double u, const conic::Settings& settings, conic::VerifyReport* report) {
    if (!(u > 2.0 / 3.0 && u < 1.0)) throw Error(ErrorKind::Config, "min_half_width: u must lie in (2/3, 1)");
    if (!(sigma > 0.0)) throw Error(ErrorKind::Config, "min_half_width: sigma must be positive");
    conic::ConicProgram p;
    const double big = 1e3 * sigma;
    const int lo = p.add_variable(-big, 0.0), hi = p.add_variable(0.0, big);
    const int r = p.add_variable(0.0, kInf), s = p.add_variable(0.0, kInf), z = p.add_variable(0.0, kInf);
    add_chance_rows(p, r, s, z, lo, hi, 0.0, sigma);
    p.add_inequality(LinearExpr::var(s), 1.0 - u);
    p.set_objective(hi, 0.5);
    p.set_objective(lo, -0.5);
    const auto sol = conic::solve(p, settings);
    if (!sol.optimal()) throw Error(ErrorKind::Numerical, "min_half_width: " + sol.message);
    if (report) *report = conic::verify(p, sol, settings.verify_tol);
    return sol.objective;
}

// ---------------------------------------------------------------- io

namespace {

void write_block(std::ostream& o, const std::string& name, const Eigen::MatrixXd& m) {
    o << "[" << name << "] " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) o << (j ? "," : "") << m(i, j);
        o << "\n";
    }
}

Eigen::MatrixXd read_block(std::istream& in, std::string& name) {
    std::string line;
    while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
    }
    if (!in || line.empty() || line[0] != '[') throw Error(ErrorKind::Parse, "solution file: expected a [block]");
    const auto close = line.find(']');
    name = line.substr(1, close - 1);
    std::istringstream hs(line.substr(close + 1));
    Eigen::Index rows = 0, cols = 0;
    hs >> rows >> cols;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw Error(ErrorKind::Parse, "solution file: truncated block " + name);
        std::istringstream ls(line);
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string cell;
            if (!std::getline(ls, cell, ',')) throw Error(ErrorKind::Parse, "solution file: short row in " + name);
            try {
                m(i, j) = std::stod(cell);
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, "solution file: bad number in " + name);
            }
        }
    }
    return m;
}

}  // namespace

void write_solution(const DneSolution& d, std::ostream& o) {
    const auto old = o.precision(17);
    o << "dne-solution 1\n";
    o << "status " << conic::to_string(d.status) << "\n";
    o << "dims " << d.I << " " << d.K << " " << d.T << "\n";
    o << "u " << d.u << "\n";
    o << "objective " << d.objective << "\n";
    o << "dispatch_cost " << d.dispatch_cost << "\n";
    o << "utilization_reward " << d.utilization_reward << "\n";
    o << "plus_term " << d.plus_term << "\n";
    o << "minus_term " << d.minus_term << "\n";
    o << "agc";
    for (bool a : d.agc) o << " " << (a ? 1 : 0);
    o << "\n";
    write_block(o, "p_hat", d.p_hat);
    write_block(o, "s0", d.s0);
    write_block(o, "eps_lo", d.eps_lo);
    write_block(o, "eps_hi", d.eps_hi);
    write_block(o, "r", d.r);
    write_block(o, "s", d.s);
    write_block(o, "z", d.z);
    for (int t = 0; t < d.T; ++t) {
        write_block(o, "S " + std::to_string(t + 1), d.S[t]);
        write_block(o, "B " + std::to_string(t + 1), d.B[t]);
        write_block(o, "b " + std::to_string(t + 1), d.b[t]);
    }
    o.precision(old);
}

DneSolution read_solution(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("dne-solution 1", 0) != 0)
        throw Error(ErrorKind::Parse, "not a dne-solution file");
    DneSolution d;
    auto scalar = [&](const char* key) {
        if (!std::getline(in, line) || line.rfind(key, 0) != 0)
            throw Error(ErrorKind::Parse, std::string("solution file: expected ") + key);
        return line.substr(std::string(key).size() + 1);
    };
    const std::string status = scalar("status");
    d.status = status == "optimal" ? conic::Status::Optimal
               : status == "infeasible" ? conic::Status::Infeasible
               : status == "unbounded" ? conic::Status::Unbounded
                                       : conic::Status::NumericalLimit;
    {
        std::istringstream ds(scalar("dims"));
        ds >> d.I >> d.K >> d.T;
    }
    d.u = std::stod(scalar("u"));
    d.objective = std::stod(scalar("objective"));
    d.dispatch_cost = std::stod(scalar("dispatch_cost"));
    d.utilization_reward = std::stod(scalar("utilization_reward"));
    d.plus_term = std::stod(scalar("plus_term"));
    d.minus_term = std::stod(scalar("minus_term"));
    {
        std::istringstream as(scalar("agc"));
        int a;
        while (as >> a) d.agc.push_back(a != 0);
    }
    std::string name;
    d.p_hat = read_block(in, name);
    d.s0 = read_block(in, name);
    d.eps_lo = read_block(in, name);
    d.eps_hi = read_block(in, name);
    d.r = read_block(in, name);
    d.s = read_block(in, name);
    d.z = read_block(in, name);
    for (int t = 0; t < d.T; ++t) {
        d.S.push_back(read_block(in, name));
        d.B.push_back(read_block(in, name));
        d.b.push_back(read_block(in, name));
    }
    if (d.p_hat.rows() != d.I || d.p_hat.cols() != d.T || d.eps_lo.rows() != d.K)
        throw Error(ErrorKind::Parse, "solution file: block shapes disagree with dims");
    return d;
}

}  // namespace dne

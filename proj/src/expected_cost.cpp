#include "dne/expected_cost.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "dne/error.hpp"

namespace dne {

using conic::LinearExpr;

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::mutex cache_mutex;
std::map<long long, double> cache;

double solve_j(double tau, const conic::Settings& settings, const conic::Backend* backend) {
    const auto sol = conic::solve(j_tau_program(tau), settings, backend);
    if (!sol.optimal()) throw Error(ErrorKind::Numerical, "j_tau(" + std::to_string(tau) + "): " + sol.message);
    return sol.objective;
}

}  // namespace

conic::ConicProgram j_tau_program(double tau) {
    conic::ConicProgram p;
    const int pi1 = p.add_variable(), pi2 = p.add_variable(), pi3 = p.add_variable();
    std::vector<LinearExpr> lower;
    std::vector<std::vector<int>> lam(4, std::vector<int>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j <= i; ++j) {
            lam[i][j] = lam[j][i] = p.add_variable();
            lower.push_back(LinearExpr::var(lam[i][j]));
        }
    p.add_psd(4, lower);
    p.add_equality(LinearExpr::var(lam[0][0]), tau);
    const int pis[3] = {pi1, pi2, pi3};
    for (int m = 1; m <= 6; ++m) {
        LinearExpr row;
        for (int i = 0; i < 4; ++i) {
            const int j = m - i;
            if (j >= 0 && j < 4) row.add(lam[i][j], 1.0);
        }
        if (m % 2 == 0) row.add(pis[m / 2 - 1], -1.0);
        p.add_equality(row, 0.0);
    }
    p.add_soc(LinearExpr::var(pi1).add(pi3, 1.0).shift(1.0),
              {LinearExpr::var(pi2), LinearExpr::var(pi1).add(pi3, -1.0).shift(1.0)});
    p.set_objective(pi1, 1.0);
    p.set_objective(pi3, 1.0);
    p.add_objective(LinearExpr(1.0));
    return p;
}

double j_tau(double tau, const conic::Settings& settings, const conic::Backend* backend) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::Config, "j_tau: tau must be finite and >= 0");
    const auto* b = backend ? backend : conic::default_backend().get();
    if (!b->supports_psd())
        throw Error(ErrorKind::Capability, "j_tau needs a PSD-capable backend; " + b->name() + " is SOC-only");
    const long long key = std::llround(tau * 1e12);
    if (backend == nullptr) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double v = solve_j(static_cast<double>(key) * 1e-12, settings, b);
    if (backend == nullptr) {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache.emplace(key, v);
    }
    return v;
}

void clear_j_tau_cache() {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.clear();
}

double h_value(HVariant h, double tau, double zeta) {
    if (zeta <= 0.0) return 0.0;
    if (h == HVariant::Ratio) return std::max(0.0, 1.0 - tau / zeta);
    return zeta > tau ? (zeta - tau) * (zeta - tau) / (2.0 * zeta) : 0.0;
}

conic::ConicProgram j_tau_oracle_program(double tau, const JOracleOptions& opt) {
    if (opt.grid_points < 3 || !(opt.grid_halfwidth > 0.0)) throw Error(ErrorKind::Config, "j_tau oracle: degenerate grid");
    const int m = opt.grid_points;
    conic::ConicProgram p;
    const int x0 = p.add_variables(m, 0.0, conic::kInf);
    LinearExpr mass, first, second;
    for (int j = 0; j < m; ++j) {
        const double z = -opt.grid_halfwidth + 2.0 * opt.grid_halfwidth * j / (m - 1);
        p.add_objective(x0 + j, -h_value(opt.h, tau, z));
        mass.add(x0 + j, 1.0);
        first.add(x0 + j, z);
        second.add(x0 + j, z * z);
    }
    p.add_equality(mass, 1.0);
    p.add_equality(first, 0.0);
    p.add_equality(second, 1.0);
    return p;
}

double j_tau_oracle(double tau, const JOracleOptions& opt) {
    const auto sol = conic::solve(j_tau_oracle_program(tau, opt), opt.settings);
    if (sol.status == conic::Status::Infeasible)
        throw Error(ErrorKind::Infeasible, "j_tau oracle: moment system infeasible on this grid");
    if (!sol.optimal()) throw Error(ErrorKind::Numerical, "j_tau oracle: " + sol.message);
    return -sol.objective;
}

double g(const std::vector<CostTerm>& terms, const conic::Settings& settings) {
    double sum = 0.0;
    for (const auto& t : terms) {
        if (!(t.c >= 0.0)) throw Error(ErrorKind::Config, "g: cost coefficients must be >= 0");
        if (!(t.tau >= 0.0)) throw Error(ErrorKind::Config, "g: negative threshold; DNE bounds violated");
        if (t.c == 0.0) continue;
        sum += t.c * t.sigma * j_tau(t.tau, settings);
    }
    return kSqrt3 * sum;
}

namespace {

double p_side(const AmbiguitySet& amb, const Eigen::MatrixXd& eps, const Eigen::MatrixXd& c, double sign,
              const conic::Settings& settings) {
    if (eps.rows() != amb.renewables() || eps.cols() != amb.periods())
        throw Error(ErrorKind::Data, "P+-: limit matrix shape does not match the ambiguity set");
    if (c.size() != 0 && (c.rows() != eps.rows() || c.cols() != eps.cols()))
        throw Error(ErrorKind::Data, "P+-: cost matrix shape does not match the ambiguity set");
    std::vector<CostTerm> terms;
    for (int k = 0; k < amb.renewables(); ++k)
        for (int t = 0; t < amb.periods(); ++t) {
            const double sd = amb.stddev(k, t);
            double tau = sign * (eps(k, t) - amb.mean(k, t)) / (kSqrt3 * sd);
            if (tau < 0.0 && tau > -1e-9) tau = 0.0;
            terms.push_back({c.size() ? c(k, t) : 1.0, sd, tau});
        }
    return g(terms, settings);
}

}  // namespace

double p_plus(const AmbiguitySet& amb, const Eigen::MatrixXd& eps_lo, const Eigen::MatrixXd& c,
              const conic::Settings& settings) {
    return p_side(amb, eps_lo, c, -1.0, settings);
}

double p_minus(const AmbiguitySet& amb, const Eigen::MatrixXd& eps_hi, const Eigen::MatrixXd& c,
               const conic::Settings& settings) {
    return p_side(amb, eps_hi, c, 1.0, settings);
}

double Cpla::evaluate(double tau) const {
    if (breakpoints.empty()) throw Error(ErrorKind::Config, "empty CPLA");
    if (tau < breakpoints.front() - 1e-12 || tau > breakpoints.back() + 1e-12)
        throw Error(ErrorKind::Config, "CPLA: tau outside [tau_L, tau_U]");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), tau);
    if (it == breakpoints.end()) return values.back();
    if (it == breakpoints.begin()) return values.front();
    const auto h = static_cast<std::size_t>(it - breakpoints.begin());
    const double a = breakpoints[h - 1], b = breakpoints[h];
    const double w = (tau - a) / (b - a);
    return (1.0 - w) * values[h - 1] + w * values[h];
}

Cpla build_cpla(double tau_lo, double tau_hi, int H, const conic::Settings& settings) {
    if (H < 1) throw Error(ErrorKind::Config, "CPLA: H must be >= 1");
    if (!(tau_lo < tau_hi)) throw Error(ErrorKind::Config, "CPLA: need tau_L < tau_U");
    Cpla c;
    c.H = H;
    for (int h = 1; h <= H + 1; ++h) {
        const double n = tau_lo + (h - 1) * (tau_hi - tau_lo) / H;
        c.breakpoints.push_back(n);
        c.values.push_back(j_tau(n, settings));
    }
    return c;
}

std::string format_cpla(const Cpla& c) {
    std::ostringstream o;
    o.precision(17);
    o << "h,n_h,J\n";
    for (std::size_t h = 0; h < c.breakpoints.size(); ++h) o << h + 1 << "," << c.breakpoints[h] << "," << c.values[h] << "\n";
    return o.str();
}

void extend_drco(DrcoModel& m, const GridCase& grid, const AmbiguitySet& amb, const SolveConfig& cfg) {
    auto& prog = m.program;
    const auto& vm = m.vars;
    const int K = vm.K, T = vm.T;
    m.ext.lambda_plus.assign(K * T, {});
    m.ext.lambda_minus.assign(K * T, {});
    m.ext.value_plus.assign(K * T, {});
    m.ext.value_minus.assign(K * T, {});
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k) {
            const int j = t * K + k;
            const double mu = amb.mean(k, t), sd = amb.stddev(k, t), scale = kSqrt3 * sd;
            const double w = grid.forecast(k, t);
            const auto& ren = grid.renewables[k];
            for (int side = 0; side < 2; ++side) {
                const bool plus = side == 0;
                const double weight = plus ? cfg.delta_plus : cfg.delta_minus;
                if (weight <= 0.0) continue;
                const Eigen::MatrixXd& cm = plus ? cfg.c_plus : cfg.c_minus;
                const double c = cm.size() ? cm(k, t) : 1.0;
                if (c == 0.0) continue;
                // n+ over [mu, mu + w_hat - w_min] / (sqrt3 sigma), n- over [-mu, w_max - w_hat - mu] / (sqrt3 sigma);
                // negative thresholds are infeasible under the chance rows, so the range starts at 0
                const double lo = std::max(0.0, (plus ? mu : -mu) / scale);
                const double hi = (plus ? mu + w - ren.w_min : ren.w_max - w - mu) / scale;
                auto& lam = plus ? m.ext.lambda_plus[j] : m.ext.lambda_minus[j];
                auto& val = plus ? m.ext.value_plus[j] : m.ext.value_minus[j];
                if (!(hi > lo)) {
                    // degenerate range: a single breakpoint carries all the weight
                    lam.push_back(prog.add_variable(1.0, 1.0));
                    val.push_back(scale * c * j_tau(lo, cfg.settings));
                    prog.add_objective(lam.back(), weight * val.back());
                    continue;
                }
                const Cpla cp = build_cpla(lo, hi, cfg.segments, cfg.settings);
                LinearExpr sum, tau_row;
                for (int h = 0; h <= cp.H; ++h) {
                    const int l = prog.add_variable(0.0, conic::kInf);
                    lam.push_back(l);
                    val.push_back(scale * c * cp.values[h]);
                    prog.add_objective(l, weight * val.back());
                    sum.add(l, 1.0);
                    // sqrt3 sigma n_h, so the row reads in MW
                    tau_row.add(l, scale * cp.breakpoints[h]);
                }
                prog.add_equality(sum, 1.0);
                // plus: sqrt3 sigma tau = mu - eps_lo; minus: sqrt3 sigma tau = eps_hi - mu
                if (plus) {
                    tau_row.add(vm.kt(vm.eps_lo, k, t), 1.0);
                    prog.add_equality(tau_row, mu);
                } else {
                    tau_row.add(vm.kt(vm.eps_hi, k, t), -1.0);
                    prog.add_equality(tau_row, -mu);
                }
            }
        }
}

}  // namespace dne

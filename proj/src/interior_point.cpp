// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps, for
//
//   minimize c'x  s.t.  A x = b,  G x + s = h,  s in K
//
// where K is a product of a nonnegative orthant, second-order cones and PSD
// cones. The KKT system
//
//   [ 0  A'  G'   ]
//   [ A  0   0    ]
//   [ G  0  -W'W  ]
//
// is factored by a sparse quasi-definite LDL' with static plus dynamic
// regularization, followed by iterative refinement.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include <Eigen/SparseCore>

#include "cones.hpp"
#include "dne/conic.hpp"
#include "dne/error.hpp"
#include "ldl.hpp"

namespace dne::conic {

namespace {

using detail::ConeLayout;
using detail::Mat;
using detail::NtScaling;
using detail::QuasiDefiniteLdl;
using detail::Vec;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct StandardForm {
    int n = 0, p = 0, m = 0;
    Vec c, b, h;
    SpMat a, g;
    ConeLayout cones;
    Vec col_scale;  // x = D x_scaled
    Vec eq_scale;   // b_scaled = E_a b
    Vec row_scale;  // h_scaled = E_g h
};

// Translates the IR into standard form. Rows of G are ordered: inequality
// rows, finite bounds, then SOC blocks, then PSD blocks.
StandardForm to_standard_form(const ConicProgram& prog) {
    StandardForm sf;
    sf.n = prog.num_vars();
    std::vector<Eigen::Triplet<double>> at, gt;
    std::vector<double> b, h;

    auto eq_row = [&](const LinearExpr& e, double rhs) {
        const int r = static_cast<int>(b.size());
        for (std::size_t k = 0; k < e.index.size(); ++k) at.emplace_back(r, e.index[k], e.coef[k]);
        b.push_back(rhs);
    };
    // s = h - G x = expr  =>  G = -coef, h = constant
    auto cone_row = [&](const LinearExpr& e, double scale) {
        const int r = static_cast<int>(h.size());
        for (std::size_t k = 0; k < e.index.size(); ++k) gt.emplace_back(r, e.index[k], -scale * e.coef[k]);
        h.push_back(scale * e.constant);
    };

    for (const auto& r : prog.equalities()) eq_row(r.lhs, r.rhs);
    const auto& lo = prog.lower_bounds();
    const auto& hi = prog.upper_bounds();
    for (int j = 0; j < sf.n; ++j)
        if (std::isfinite(lo[j]) && lo[j] == hi[j]) eq_row(LinearExpr::var(j), lo[j]);

    for (const auto& r : prog.inequalities()) {
        LinearExpr slack(r.rhs);
        slack.add(r.lhs, -1.0);
        cone_row(slack, 1.0);
        sf.cones.nonneg++;
    }
    for (int j = 0; j < sf.n; ++j) {
        if (std::isfinite(lo[j]) && lo[j] == hi[j]) continue;
        if (std::isfinite(lo[j])) {
            cone_row(LinearExpr::var(j).shift(-lo[j]), 1.0);
            sf.cones.nonneg++;
        }
        if (std::isfinite(hi[j])) {
            cone_row(LinearExpr(hi[j]).add(j, -1.0), 1.0);
            sf.cones.nonneg++;
        }
    }
    for (const auto& s : prog.socs()) {
        cone_row(s.head, 1.0);
        for (const auto& t : s.tail) cone_row(t, 1.0);
        sf.cones.soc.push_back(static_cast<int>(s.tail.size()) + 1);
    }
    const double sqrt2 = std::sqrt(2.0);
    for (const auto& ps : prog.psds()) {
        const int n = ps.dim;
        std::vector<int> base(detail::svec_size(n));
        // svec is column-major lower triangle
        for (int j = 0; j < n; ++j)
            for (int i = j; i < n; ++i) cone_row(ps.at(i, j), i == j ? 1.0 : sqrt2);
        sf.cones.psd.push_back(n);
    }
    sf.p = static_cast<int>(b.size());
    sf.m = static_cast<int>(h.size());
    sf.a.resize(sf.p, sf.n);
    sf.a.setFromTriplets(at.begin(), at.end());
    sf.g.resize(sf.m, sf.n);
    sf.g.setFromTriplets(gt.begin(), gt.end());
    sf.b = Eigen::Map<Vec>(b.data(), sf.p);
    sf.h = Eigen::Map<Vec>(h.data(), sf.m);
    sf.c = Eigen::Map<const Vec>(prog.objective().data(), sf.n);
    return sf;
}

// Ruiz equilibration; cone rows of one SOC/PSD block share a scale factor.
void equilibrate(StandardForm& sf, int passes = 15) {
    sf.col_scale = Vec::Ones(sf.n);
    sf.eq_scale = Vec::Ones(sf.p);
    sf.row_scale = Vec::Ones(sf.m);
    auto clamp_scale = [](double nrm) {
        if (nrm < 1e-12) return 1.0;
        return std::clamp(1.0 / std::sqrt(nrm), 1e-4, 1e4);
    };
    for (int pass = 0; pass < passes; ++pass) {
        Vec col = Vec::Zero(sf.n), arow = Vec::Zero(sf.p), grow = Vec::Zero(sf.m);
        for (int r = 0; r < sf.p; ++r)
            for (SpMat::InnerIterator it(sf.a, r); it; ++it) {
                const double v = std::abs(it.value());
                col[it.col()] = std::max(col[it.col()], v);
                arow[r] = std::max(arow[r], v);
            }
        for (int r = 0; r < sf.m; ++r)
            for (SpMat::InnerIterator it(sf.g, r); it; ++it) {
                const double v = std::abs(it.value());
                col[it.col()] = std::max(col[it.col()], v);
                grow[r] = std::max(grow[r], v);
            }
        Vec dcol(sf.n), dare(sf.p), dg(sf.m);
        for (int j = 0; j < sf.n; ++j) dcol[j] = clamp_scale(col[j]);
        for (int r = 0; r < sf.p; ++r) dare[r] = clamp_scale(arow[r]);
        for (int r = 0; r < sf.cones.nonneg; ++r) dg[r] = clamp_scale(grow[r]);
        auto block = [&](int off, int len) {
            const double mx = grow.segment(off, len).maxCoeff();
            dg.segment(off, len).setConstant(clamp_scale(mx));
        };
        for (std::size_t c = 0; c < sf.cones.soc.size(); ++c) block(sf.cones.soc_offset(c), sf.cones.soc[c]);
        for (std::size_t c = 0; c < sf.cones.psd.size(); ++c)
            block(sf.cones.psd_offset(c), detail::svec_size(sf.cones.psd[c]));

        sf.a = dare.asDiagonal() * sf.a * dcol.asDiagonal();
        sf.g = dg.asDiagonal() * sf.g * dcol.asDiagonal();
        sf.col_scale.array() *= dcol.array();
        sf.eq_scale.array() *= dare.array();
        sf.row_scale.array() *= dg.array();
    }
    sf.b = sf.eq_scale.cwiseProduct(sf.b);
    sf.h = sf.row_scale.cwiseProduct(sf.h);
    sf.c = sf.col_scale.cwiseProduct(sf.c);
}

class KktSolver {
public:
    explicit KktSolver(const StandardForm& sf) : sf_(sf) {
        const int n = sf.n, p = sf.p;
        std::vector<int> rows, cols;
        for (int r = 0; r < p; ++r)
            for (SpMat::InnerIterator it(sf.a, r); it; ++it) {
                rows.push_back(it.col());
                cols.push_back(n + r);
            }
        for (int r = 0; r < sf.m; ++r)
            for (SpMat::InnerIterator it(sf.g, r); it; ++it) {
                rows.push_back(it.col());
                cols.push_back(n + p + r);
            }
        // W'W pattern: emit with a unit scaling to enumerate positions
        Vec e = Vec::Zero(sf.m);
        detail::add_identity(sf.cones, e, 1.0);
        NtScaling unit(sf.cones, e, e);
        unit.for_each_wtw([&](int a, int b, double) {
            rows.push_back(n + p + a);
            cols.push_back(n + p + b);
        });
        std::vector<int> signs(n + p + sf.m, -1);
        std::fill(signs.begin(), signs.begin() + n, 1);
        // cone rows first, then primal variables, then equality multipliers:
        // a primal pivot is never eliminated before the cone rows that give it
        // a nonzero diagonal
        std::vector<int> groups(n + p + sf.m, 0);
        std::fill(groups.begin(), groups.begin() + n, 1);
        std::fill(groups.begin() + n, groups.begin() + n + p, 2);
        ldl_.emplace(n + p + sf.m, rows, cols, std::move(signs), groups);
    }

    void factor(const std::optional<NtScaling>& w) {
        ldl_->clear_values();
        std::size_t k = 0;
        for (int r = 0; r < sf_.p; ++r)
            for (SpMat::InnerIterator it(sf_.a, r); it; ++it) ldl_->add_value(k++, it.value());
        for (int r = 0; r < sf_.m; ++r)
            for (SpMat::InnerIterator it(sf_.g, r); it; ++it) ldl_->add_value(k++, it.value());
        if (w) {
            w->for_each_wtw([&](int, int, double v) { ldl_->add_value(k++, -v); });
        } else {
            Vec e = Vec::Zero(sf_.m);
            detail::add_identity(sf_.cones, e, 1.0);
            NtScaling unit(sf_.cones, e, e);
            unit.for_each_wtw([&](int, int, double v) { ldl_->add_value(k++, -v); });
        }
        ldl_->factorize(kStaticReg, 1e-13, 7e-8);
    }

    // Solves [0 A' G'; A 0 0; G 0 -W'W] [x;y;z] = [rx;ry;rz].
    void solve(const Vec& rx, const Vec& ry, const Vec& rz, Vec& x, Vec& y, Vec& z) const {
        const int n = sf_.n, p = sf_.p, m = sf_.m, dim = n + p + m;
        std::vector<double> rhs(dim), sol(dim), res(dim), kx;
        for (int i = 0; i < n; ++i) rhs[i] = rx[i];
        for (int i = 0; i < p; ++i) rhs[n + i] = ry[i];
        for (int i = 0; i < m; ++i) rhs[n + p + i] = rz[i];
        sol = rhs;
        ldl_->solve(sol);
        double rhs_norm = 0.0;
        for (double v : rhs) rhs_norm = std::max(rhs_norm, std::abs(v));
        double last = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 8; ++iter) {
            ldl_->multiply(sol, kx);
            double err = 0.0;
            for (int i = 0; i < dim; ++i) {
                res[i] = rhs[i] - kx[i];
                err = std::max(err, std::abs(res[i]));
            }
            if (err <= 1e-14 * (1.0 + rhs_norm) || err > 0.5 * last) break;
            last = err;
            ldl_->solve(res);
            for (int i = 0; i < dim; ++i) sol[i] += res[i];
        }
        x = Eigen::Map<Vec>(sol.data(), n);
        y = Eigen::Map<Vec>(sol.data() + n, p);
        z = Eigen::Map<Vec>(sol.data() + n + p, m);
    }

private:
    static constexpr double kStaticReg = 1e-9;
    const StandardForm& sf_;
    std::optional<QuasiDefiniteLdl> ldl_;
};

struct Iterate {
    Vec x, y, s, z;
    double tau = 1.0, kappa = 1.0;
};

struct Metrics {
    double pcost = 0, dcost = 0, gap = 0, relgap = 0, pres = 0, dres = 0, mu = 0;
};

class InteriorPoint final : public Backend {
public:
    std::string name() const override { return "hsd-ipm"; }
    bool supports_psd() const override { return true; }

    Solution solve(const ConicProgram& prog, const Settings& settings) const override {
        StandardForm sf = to_standard_form(prog);
        equilibrate(sf);
        return run(sf, settings);
    }

private:
    static Solution run(const StandardForm& sf, const Settings& st) {
        const int n = sf.n, p = sf.p, m = sf.m;
        const auto& cones = sf.cones;
        const double degree = cones.degree();
        Solution out;
        KktSolver kkt(sf);

        // Starting point: least-squares primal/dual points, shifted into K.
        Iterate it;
        kkt.factor(std::nullopt);
        {
            Vec x, y, z;
            kkt.solve(Vec::Zero(n), sf.b, sf.h, x, y, z);
            it.x = x;
            it.s = -z;
            const double ts = -detail::min_eigenvalue(cones, it.s);
            if (m > 0 && ts >= -1e-8 * std::max(it.s.norm(), 1.0)) detail::add_identity(cones, it.s, 1.0 + ts);
            kkt.solve(-sf.c, Vec::Zero(p), Vec::Zero(m), x, y, z);
            it.y = y;
            it.z = z;
            const double tz = -detail::min_eigenvalue(cones, it.z);
            if (m > 0 && tz >= -1e-8 * std::max(it.z.norm(), 1.0)) detail::add_identity(cones, it.z, 1.0 + tz);
        }

        const double bnorm = std::max(1.0, sf.b.size() ? sf.b.norm() : 0.0);
        const double hnorm = std::max(1.0, sf.h.size() ? sf.h.norm() : 0.0);
        const double cnorm = std::max(1.0, sf.c.norm());

        auto finish = [&](Status status, const Iterate& at, std::string msg) {
            out.status = status;
            out.message = std::move(msg);
            const Vec xs = sf.col_scale.cwiseProduct(at.x / at.tau);
            out.x.assign(xs.data(), xs.data() + n);
            return out;
        };

        Iterate best = it;
        double best_score = std::numeric_limits<double>::infinity();
        Metrics best_metrics;

        for (int iter = 0; iter <= st.max_iterations; ++iter) {
            out.iterations = iter;
            // residuals
            const Vec rx = (p ? Vec(sf.a.transpose() * it.y) : Vec::Zero(n)) + sf.g.transpose() * it.z + sf.c * it.tau;
            const Vec ry = sf.b * it.tau - (p ? Vec(sf.a * it.x) : Vec::Zero(0));
            const Vec rz = it.s + sf.g * it.x - sf.h * it.tau;
            const double cx = sf.c.dot(it.x), by = sf.b.dot(it.y), hz = sf.h.dot(it.z);
            const double rt = it.kappa + cx + by + hz;

            Metrics mt;
            mt.gap = it.s.dot(it.z);
            mt.mu = (mt.gap + it.tau * it.kappa) / (degree + 1.0);
            mt.pcost = cx / it.tau;
            mt.dcost = -(by + hz) / it.tau;
            const double ax_res = p ? (sf.a * it.x - sf.b * it.tau).norm() : 0.0;
            const double gx_res = (sf.g * it.x + it.s - sf.h * it.tau).norm();
            mt.pres = std::max(ax_res / bnorm, gx_res / hnorm) / it.tau;
            mt.dres = rx.norm() / cnorm / it.tau;
            const double gap_t = mt.gap / (it.tau * it.tau);
            if (mt.pcost < 0)
                mt.relgap = gap_t / -mt.pcost;
            else if (mt.dcost > 0)
                mt.relgap = gap_t / mt.dcost;
            else
                mt.relgap = std::numeric_limits<double>::quiet_NaN();

            if (st.verbose)
                std::fprintf(stderr, "%3d pcost=% .9e dcost=% .9e gap=%.2e pres=%.2e dres=%.2e k/t=%.2e\n",
                             iter, mt.pcost, mt.dcost, gap_t, mt.pres, mt.dres, it.kappa / it.tau);

            const bool gap_ok = gap_t < st.gap_abs_tol || (std::isfinite(mt.relgap) && mt.relgap < st.gap_rel_tol);
            if (mt.pres < st.feas_tol && mt.dres < st.feas_tol && gap_ok)
                return finish(Status::Optimal, it, "optimal");

            // infeasibility certificates
            if (by + hz < 0.0) {
                const Vec aty = (p ? Vec(sf.a.transpose() * it.y) : Vec::Zero(n)) + sf.g.transpose() * it.z;
                if (aty.norm() / -(by + hz) < st.feas_tol && it.tau < 1e-3 * it.kappa) {
                    out.status = Status::Infeasible;
                    out.message = "primal infeasibility certificate found";
                    return out;
                }
            }
            if (cx < 0.0) {
                const double r1 = p ? (sf.a * it.x).norm() / bnorm : 0.0;
                const double r2 = (sf.g * it.x + it.s).norm() / hnorm;
                if (std::max(r1, r2) / -cx < st.feas_tol && it.tau < 1e-3 * it.kappa) {
                    out.status = Status::Unbounded;
                    out.message = "dual infeasibility certificate found";
                    return out;
                }
            }

            const double score = std::max({mt.pres, mt.dres, std::isfinite(mt.relgap) ? mt.relgap : gap_t});
            if (score < best_score) {
                best_score = score;
                best = it;
                best_metrics = mt;
            }
            if (iter == st.max_iterations) break;

            // Newton steps
            std::optional<NtScaling> w;
            w.emplace(cones, it.s, it.z);
            kkt.factor(w);
            const Vec& lam = w->lambda();

            Vec x1, y1, z1;
            kkt.solve(-sf.c, sf.b, sf.h, x1, y1, z1);
            const double denom1 = sf.c.dot(x1) + sf.b.dot(y1) + sf.h.dot(z1) - it.kappa / it.tau;

            struct Dir {
                Vec dx, dy, dz, ds;
                double dtau, dkappa;
            };
            auto direction = [&](double eta, const Vec& ds_target, double dk_target) {
                Dir d;
                const Vec ldiv = w->lambda_divide(ds_target);
                const Vec wt = w->apply_wt(ldiv);
                Vec x2, y2, z2;
                kkt.solve(-eta * rx, eta * ry, -eta * rz - wt, x2, y2, z2);
                d.dtau = (-eta * rt - dk_target / it.tau - sf.c.dot(x2) - sf.b.dot(y2) - sf.h.dot(z2)) / denom1;
                d.dx = x2 + d.dtau * x1;
                d.dy = y2 + d.dtau * y1;
                d.dz = z2 + d.dtau * z1;
                d.ds = wt - w->apply_wt(w->apply_w(d.dz));
                d.dkappa = (dk_target - it.kappa * d.dtau) / it.tau;
                return d;
            };
            auto step_len = [&](const Dir& d) {
                double a = std::min(detail::max_step(cones, it.s, d.ds), detail::max_step(cones, it.z, d.dz));
                if (d.dtau < 0) a = std::min(a, -it.tau / d.dtau);
                if (d.dkappa < 0) a = std::min(a, -it.kappa / d.dkappa);
                return a;
            };

            // predictor
            const Vec lam_sq = detail::jordan_product(cones, lam, lam);
            Dir aff = direction(1.0, -lam_sq, -it.tau * it.kappa);
            const double alpha_aff = std::min(1.0, step_len(aff));
            const double sigma = std::pow(std::clamp(1.0 - alpha_aff, 0.0, 1.0), 3);

            // corrector
            Vec ds_target = -lam_sq - detail::jordan_product(cones, w->apply_winv_t(aff.ds), w->apply_w(aff.dz));
            detail::add_identity(cones, ds_target, sigma * mt.mu);
            const double dk_target = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mt.mu;
            Dir d = direction(1.0 - sigma, ds_target, dk_target);
            const double alpha = std::min(1.0, 0.99 * step_len(d));
            if (!(alpha > 1e-10) || !std::isfinite(d.dtau)) break;

            it.x += alpha * d.dx;
            it.y += alpha * d.dy;
            it.z += alpha * d.dz;
            it.s += alpha * d.ds;
            it.tau += alpha * d.dtau;
            it.kappa += alpha * d.dkappa;
        }

        const double relax = 100.0;
        const auto& bm = best_metrics;
        const bool near = bm.pres < relax * st.feas_tol && bm.dres < relax * st.feas_tol &&
                          ((std::isfinite(bm.relgap) && bm.relgap < relax * st.gap_rel_tol) ||
                           bm.gap / (best.tau * best.tau) < relax * st.gap_abs_tol);
        if (near) return finish(Status::Optimal, best, "optimal (reduced accuracy)");
        return finish(Status::NumericalLimit, best, "stalled before reaching tolerance");
    }
};

}  // namespace

std::shared_ptr<const Backend> interior_point_backend() {
    static const auto instance = std::make_shared<const InteriorPoint>();
    return instance;
}

}  // namespace dne::conic

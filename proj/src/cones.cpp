#include "cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dne::conic::detail {

namespace {

constexpr double kInfStep = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

}  // namespace

int ConeLayout::dimension() const {
    int m = nonneg;
    for (int q : soc) m += q;
    for (int n : psd) m += svec_size(n);
    return m;
}

int ConeLayout::degree() const {
    int d = nonneg + static_cast<int>(soc.size());
    for (int n : psd) d += n;
    return d;
}

int ConeLayout::soc_offset(std::size_t c) const {
    int off = nonneg;
    for (std::size_t i = 0; i < c; ++i) off += soc[i];
    return off;
}

int ConeLayout::psd_offset(std::size_t c) const {
    int off = nonneg;
    for (int q : soc) off += q;
    for (std::size_t i = 0; i < c; ++i) off += svec_size(psd[i]);
    return off;
}

int svec_index(int n, int i, int j) {
    // column j starts after columns 0..j-1, which hold n, n-1, ... entries
    return j * n - j * (j - 1) / 2 + (i - j);
}

Mat smat(const double* v, int n) {
    Mat m(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i) {
            const double x = v[svec_index(n, i, j)];
            if (i == j)
                m(i, i) = x;
            else
                m(i, j) = m(j, i) = x / kSqrt2;
        }
    return m;
}

void svec(const Mat& m, double* v) {
    const int n = static_cast<int>(m.rows());
    for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i)
            v[svec_index(n, i, j)] = (i == j) ? m(i, i) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
}

double max_step(const ConeLayout& k, const Vec& s, const Vec& ds) {
    double alpha = kInfStep;
    for (int i = 0; i < k.nonneg; ++i)
        if (ds[i] < 0.0) alpha = std::min(alpha, -s[i] / ds[i]);
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        const auto sv = s.segment(off, q);
        const auto dv = ds.segment(off, q);
        const double norm2 = sv[0] * sv[0] - sv.tail(q - 1).squaredNorm();
        const double norm = std::sqrt(std::max(norm2, 1e-300));
        const Vec bar = sv / norm;
        const double bar_d = bar[0] * dv[0] - bar.tail(q - 1).dot(dv.tail(q - 1));
        const double rho0 = bar_d / norm;
        const double factor = (bar_d + dv[0]) / (bar[0] + 1.0);
        const Vec rho1 = (dv.tail(q - 1) - factor * bar.tail(q - 1)) / norm;
        const double sigma = rho1.norm() - rho0;
        if (sigma > 0.0) alpha = std::min(alpha, 1.0 / sigma);
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat sm = smat(s.data() + off, n);
        const Mat dm = smat(ds.data() + off, n);
        Eigen::LLT<Mat> llt(sm);
        if (llt.info() != Eigen::Success) return 0.0;
        const Mat l = llt.matrixL();
        const Mat linv = l.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
        const Mat g = linv * dm * linv.transpose();
        const double ev = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
        if (ev < 0.0) alpha = std::min(alpha, -1.0 / ev);
    }
    return alpha;
}

double min_eigenvalue(const ConeLayout& k, const Vec& s) {
    double m = kInfStep;
    for (int i = 0; i < k.nonneg; ++i) m = std::min(m, s[i]);
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        m = std::min(m, s[off] - s.segment(off + 1, q - 1).norm());
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat sm = smat(s.data() + off, n);
        m = std::min(m, Eigen::SelfAdjointEigenSolver<Mat>(sm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());
    }
    return m;
}

void add_identity(const ConeLayout& k, Vec& s, double alpha) {
    for (int i = 0; i < k.nonneg; ++i) s[i] += alpha;
    for (std::size_t c = 0; c < k.soc.size(); ++c) s[k.soc_offset(c)] += alpha;
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        for (int i = 0; i < n; ++i) s[off + svec_index(n, i, i)] += alpha;
    }
}

double identity_dot(const ConeLayout& k, const Vec& v) {
    double t = 0.0;
    for (int i = 0; i < k.nonneg; ++i) t += v[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) t += v[k.soc_offset(c)];
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        for (int i = 0; i < n; ++i) t += v[off + svec_index(n, i, i)];
    }
    return t;
}

Vec jordan_product(const ConeLayout& k, const Vec& x, const Vec& y) {
    Vec r(x.size());
    for (int i = 0; i < k.nonneg; ++i) r[i] = x[i] * y[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        r[off] = x.segment(off, q).dot(y.segment(off, q));
        r.segment(off + 1, q - 1) = x[off] * y.segment(off + 1, q - 1) + y[off] * x.segment(off + 1, q - 1);
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat xm = smat(x.data() + off, n), ym = smat(y.data() + off, n);
        svec(0.5 * (xm * ym + ym * xm), r.data() + off);
    }
    return r;
}

NtScaling::NtScaling(const ConeLayout& k, const Vec& s, const Vec& z) : k_(k), lambda_(s.size()) {
    lin_w_.resize(k.nonneg);
    for (int i = 0; i < k.nonneg; ++i) {
        lin_w_[i] = std::sqrt(s[i] / z[i]);
        lambda_[i] = std::sqrt(s[i] * z[i]);
    }
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        const Vec sv = s.segment(off, q), zv = z.segment(off, q);
        const double sn = std::sqrt(std::max(sv[0] * sv[0] - sv.tail(q - 1).squaredNorm(), 1e-300));
        const double zn = std::sqrt(std::max(zv[0] * zv[0] - zv.tail(q - 1).squaredNorm(), 1e-300));
        const Vec sb = sv / sn, zb = zv / zn;
        const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
        Vec w(q);
        w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
        w.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
        const double eta = std::sqrt(sn / zn);
        Mat wm(q, q), wi(q, q);
        const Vec w1 = w.tail(q - 1);
        wm(0, 0) = w[0];
        wm.block(0, 1, 1, q - 1) = w1.transpose();
        wm.block(1, 0, q - 1, 1) = w1;
        wm.block(1, 1, q - 1, q - 1) = Mat::Identity(q - 1, q - 1) + w1 * w1.transpose() / (1.0 + w[0]);
        wi = wm;
        wi.block(0, 1, 1, q - 1) *= -1.0;
        wi.block(1, 0, q - 1, 1) *= -1.0;
        soc_w_.push_back(eta * wm);
        soc_winv_.push_back(wi / eta);
        lambda_.segment(off, q) = soc_w_.back() * zv;
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat sm = smat(s.data() + off, n), zm = smat(z.data() + off, n);
        const Mat ls = Eigen::LLT<Mat>(sm).matrixL();
        const Mat lz = Eigen::LLT<Mat>(zm).matrixL();
        Eigen::JacobiSVD<Mat> svd(lz.transpose() * ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec sig = svd.singularValues();
        const Vec isq = sig.cwiseSqrt().cwiseInverse();
        const Mat r = ls * svd.matrixV() * isq.asDiagonal();
        const Mat rinv = isq.asDiagonal() * svd.matrixU().transpose() * lz.transpose();
        psd_r_.push_back(r);
        psd_rinv_.push_back(rinv);
        Mat lam = Mat::Zero(n, n);
        lam.diagonal() = sig;
        svec(lam, lambda_.data() + off);
    }
}

Vec NtScaling::apply_w(const Vec& v) const {
    Vec r(v.size());
    const auto& k = k_;
    for (int i = 0; i < k.nonneg; ++i) r[i] = lin_w_[i] * v[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        r.segment(off, q) = soc_w_[c] * v.segment(off, q);
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat vm = smat(v.data() + off, n);
        svec(psd_r_[c].transpose() * vm * psd_r_[c], r.data() + off);
    }
    return r;
}

Vec NtScaling::apply_wt(const Vec& v) const {
    Vec r(v.size());
    const auto& k = k_;
    for (int i = 0; i < k.nonneg; ++i) r[i] = lin_w_[i] * v[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        r.segment(off, q) = soc_w_[c] * v.segment(off, q);
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat vm = smat(v.data() + off, n);
        svec(psd_r_[c] * vm * psd_r_[c].transpose(), r.data() + off);
    }
    return r;
}

Vec NtScaling::apply_winv_t(const Vec& v) const {
    Vec r(v.size());
    const auto& k = k_;
    for (int i = 0; i < k.nonneg; ++i) r[i] = v[i] / lin_w_[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        r.segment(off, q) = soc_winv_[c] * v.segment(off, q);
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        const Mat vm = smat(v.data() + off, n);
        svec(psd_rinv_[c] * vm * psd_rinv_[c].transpose(), r.data() + off);
    }
    return r;
}

Vec NtScaling::lambda_divide(const Vec& d) const {
    Vec x(d.size());
    const auto& k = k_;
    for (int i = 0; i < k.nonneg; ++i) x[i] = d[i] / lambda_[i];
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        const auto l = lambda_.segment(off, q);
        const auto dv = d.segment(off, q);
        const double rho = l[0] * l[0] - l.tail(q - 1).squaredNorm();
        const double x0 = (l[0] * dv[0] - l.tail(q - 1).dot(dv.tail(q - 1))) / rho;
        x[off] = x0;
        x.segment(off + 1, q - 1) = (dv.tail(q - 1) - x0 * l.tail(q - 1)) / l[0];
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c];
        for (int j = 0; j < n; ++j)
            for (int i = j; i < n; ++i) {
                const int p = off + svec_index(n, i, j);
                const double li = lambda_[off + svec_index(n, i, i)];
                const double lj = lambda_[off + svec_index(n, j, j)];
                x[p] = 2.0 * d[p] / (li + lj);
            }
    }
    return x;
}

void NtScaling::for_each_wtw(const std::function<void(int, int, double)>& emit) const {
    const auto& k = k_;
    for (int i = 0; i < k.nonneg; ++i) emit(i, i, lin_w_[i] * lin_w_[i]);
    for (std::size_t c = 0; c < k.soc.size(); ++c) {
        const int off = k.soc_offset(c), q = k.soc[c];
        const Mat w2 = soc_w_[c] * soc_w_[c];
        for (int b = 0; b < q; ++b)
            for (int a = 0; a <= b; ++a) emit(off + a, off + b, w2(a, b));
    }
    for (std::size_t c = 0; c < k.psd.size(); ++c) {
        const int off = k.psd_offset(c), n = k.psd[c], dim = svec_size(n);
        const Mat m = psd_r_[c] * psd_r_[c].transpose();
        Mat op(dim, dim);
        Vec e = Vec::Zero(dim), col(dim);
        for (int a = 0; a < dim; ++a) {
            e.setZero();
            e[a] = 1.0;
            const Mat em = smat(e.data(), n);
            svec(m * em * m, col.data());
            op.col(a) = col;
        }
        for (int b = 0; b < dim; ++b)
            for (int a = 0; a <= b; ++a) emit(off + a, off + b, 0.5 * (op(a, b) + op(b, a)));
    }
}

}  // namespace dne::conic::detail

#pragma once

// Symmetric-cone algebra for the interior-point backend: the nonnegative
// orthant, second-order cones and PSD cones (stored as svec: lower triangle,
// column by column, off-diagonal entries scaled by sqrt(2) so that
// <svec X, svec Y> = tr(XY)).

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dne::conic::detail {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ConeLayout {
    int nonneg = 0;
    std::vector<int> soc;  // cone sizes
    std::vector<int> psd;  // matrix orders

    int dimension() const;
    /// Barrier degree: nonneg + #soc + sum of PSD orders.
    int degree() const;
    int soc_offset(std::size_t c) const;
    int psd_offset(std::size_t c) const;
};

inline int svec_size(int n) { return n * (n + 1) / 2; }
/// Position of (i, j), i >= j, in svec order.
int svec_index(int n, int i, int j);
Mat smat(const double* v, int n);
void svec(const Mat& m, double* v);

/// Largest alpha with s + alpha*ds in the cone (s interior); may be +inf.
double max_step(const ConeLayout& k, const Vec& s, const Vec& ds);
/// Smallest "eigenvalue" of s across all cones (+inf for an empty cone).
double min_eigenvalue(const ConeLayout& k, const Vec& s);
void add_identity(const ConeLayout& k, Vec& s, double alpha);
double identity_dot(const ConeLayout& k, const Vec& v);
Vec jordan_product(const ConeLayout& k, const Vec& x, const Vec& y);

/// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
class NtScaling {
public:
    NtScaling(const ConeLayout& k, const Vec& s, const Vec& z);

    const Vec& lambda() const { return lambda_; }
    Vec apply_w(const Vec& v) const;        // W v
    Vec apply_wt(const Vec& v) const;       // W' v
    Vec apply_winv_t(const Vec& v) const;   // W^{-T} v
    /// Solves lambda o x = d.
    Vec lambda_divide(const Vec& d) const;
    /// Upper triangle of each diagonal block of W'W, in order
    /// (nonneg entries first, then SOC blocks, then PSD blocks).
    void for_each_wtw(const std::function<void(int, int, double)>& emit) const;

private:
    const ConeLayout& k_;
    Vec lin_w_;
    std::vector<Mat> soc_w_, soc_winv_;
    std::vector<Mat> psd_r_, psd_rinv_;
    Vec lambda_;
};

}  // namespace dne::conic::detail

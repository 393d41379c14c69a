#pragma once

// Sparse LDL' factorization for quasi-definite KKT matrices. The numeric
// phase is an up-looking factorization over an elimination tree; pivots
// with the wrong sign (relative to the expected inertia) are replaced by a
// small regularization so that near-singular interior-point systems stay
// factorizable.

#include <vector>

namespace dne::conic::detail {

class QuasiDefiniteLdl {
public:
    /// `rows`/`cols` give the upper-triangular pattern (row <= col) of an
    /// n x n symmetric matrix, one entry per call of set_value(k, ...).
    /// `signs[i]` is +1 or -1, the expected sign of pivot i. When `groups`
    /// is given, pivots are eliminated group by group (ascending); group 0
    /// goes first and the rest follow a fill-reducing order of what remains.
    QuasiDefiniteLdl(int n, const std::vector<int>& rows, const std::vector<int>& cols,
                     std::vector<int> signs, const std::vector<int>& groups = {});

    int size() const { return n_; }
    std::size_t entries() const { return slot_.size(); }

    /// Zeroes all values; entries may then be accumulated.
    void clear_values();
    void add_value(std::size_t entry, double v) { ax_[slot_[entry]] += v; }

    /// Factorizes P(A + static_reg * diag(signs))P'. Returns the number of
    /// pivots that needed dynamic regularization.
    int factorize(double static_reg, double dynamic_eps, double dynamic_reg);

    /// Solves the factored (regularized) system in place.
    void solve(std::vector<double>& b) const;

    /// y = A x with the unregularized values.
    void multiply(const std::vector<double>& x, std::vector<double>& y) const;

private:
    void order_plain(int n, const std::vector<int>& rows, const std::vector<int>& cols);
    void order_grouped(int n, const std::vector<int>& rows, const std::vector<int>& cols,
                       const std::vector<int>& groups);

    int n_;
    std::vector<int> perm_, iperm_;  // perm_[new] = old
    std::vector<int> signs_;          // in permuted order
    // upper CSC of the permuted matrix
    std::vector<int> ap_, ai_;
    std::vector<double> ax_;
    std::vector<std::size_t> slot_;
    // factor
    std::vector<int> etree_, lnz_, lp_, li_;
    std::vector<double> lx_, d_, dinv_;
    // workspace
    mutable std::vector<double> work_;
};

}  // namespace dne::conic::detail

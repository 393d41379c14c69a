#include "ldl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <suitesparse/amd.h>

namespace dne::conic::detail {

namespace {

using Pattern = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// AMD permutation (new -> old) of the symmetric pattern given by edge pairs
// over m nodes; the diagonal is implicit.
std::vector<int> amd_order(int m, const std::vector<std::pair<int, int>>& edges) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * edges.size());
    for (const auto& [a, b] : edges) {
        trip.emplace_back(a, b, 1.0);
        trip.emplace_back(b, a, 1.0);
    }
    Pattern pattern(m, m);
    pattern.setFromTriplets(trip.begin(), trip.end());
    pattern.makeCompressed();
    std::vector<int> perm(m);
    if (edges.empty()) {  // AMD rejects an empty index array
        std::iota(perm.begin(), perm.end(), 0);
        return perm;
    }
    if (::amd_order(m, pattern.outerIndexPtr(), pattern.innerIndexPtr(), perm.data(), nullptr, nullptr) < AMD_OK)
        throw std::runtime_error("amd ordering failed");
    return perm;
}

}  // namespace

void QuasiDefiniteLdl::order_plain(int n, const std::vector<int>& rows, const std::vector<int>& cols) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t k = 0; k < rows.size(); ++k)
        if (rows[k] != cols[k]) edges.emplace_back(rows[k], cols[k]);
    perm_ = amd_order(n, edges);
    iperm_.assign(n, 0);
    for (int i = 0; i < n; ++i) iperm_[perm_[i]] = i;
}

// Group 0 is eliminated first; the remaining groups are ordered by AMD on the
// graph left after that elimination (each connected group-0 component turns
// its outside neighbours into a clique), then stably sorted by group.
void QuasiDefiniteLdl::order_grouped(int n, const std::vector<int>& rows, const std::vector<int>& cols,
                                     const std::vector<int>& groups) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t k = 0; k < rows.size(); ++k)
        if (groups[rows[k]] == 0 && groups[cols[k]] == 0) parent[find(rows[k])] = find(cols[k]);

    std::vector<int> local(n, -1), outside;
    for (int i = 0; i < n; ++i)
        if (groups[i] != 0) {
            local[i] = static_cast<int>(outside.size());
            outside.push_back(i);
        }
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> touch(n);  // component root -> outside neighbours
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const int a = rows[k], b = cols[k];
        if (a == b) continue;
        const bool za = groups[a] == 0, zb = groups[b] == 0;
        if (!za && !zb)
            edges.emplace_back(local[a], local[b]);
        else if (za && !zb)
            touch[find(a)].push_back(local[b]);
        else if (zb && !za)
            touch[find(b)].push_back(local[a]);
    }
    for (auto& t : touch) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = i + 1; j < t.size(); ++j) edges.emplace_back(t[i], t[j]);
    }
    const std::vector<int> sub = amd_order(static_cast<int>(outside.size()), edges);

    perm_.clear();
    perm_.reserve(n);
    for (int i = 0; i < n; ++i)
        if (groups[i] == 0) perm_.push_back(i);
    const auto first = perm_.size();
    for (int j : sub) perm_.push_back(outside[j]);
    std::stable_sort(perm_.begin() + static_cast<std::ptrdiff_t>(first), perm_.end(),
                     [&](int a, int b) { return groups[a] < groups[b]; });
    iperm_.assign(n, 0);
    for (int i = 0; i < n; ++i) iperm_[perm_[i]] = i;
}

QuasiDefiniteLdl::QuasiDefiniteLdl(int n, const std::vector<int>& rows, const std::vector<int>& cols,
                                   std::vector<int> signs, const std::vector<int>& groups)
    : n_(n) {
    if (groups.empty())
        order_plain(n, rows, cols);
    else
        order_grouped(n, rows, cols, groups);
    signs_.resize(n);
    for (int i = 0; i < n; ++i) signs_[i] = signs[perm_[i]];

    // Upper CSC pattern of the permuted matrix, diagonal always present.
    struct Item {
        int col, row;
        std::size_t entry;
    };
    std::vector<Item> items;
    items.reserve(rows.size() + n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        int r = iperm_[rows[k]], c = iperm_[cols[k]];
        if (r > c) std::swap(r, c);
        items.push_back({c, r, k});
    }
    const std::size_t diag_base = rows.size();
    for (int i = 0; i < n; ++i) items.push_back({i, i, diag_base + i});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    ap_.assign(n + 1, 0);
    slot_.assign(rows.size() + n, 0);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const auto& it = items[k];
        if (ai_.empty() || it.col != items[k - 1].col || it.row != items[k - 1].row) {
            ai_.push_back(it.row);
            ap_[it.col + 1]++;
        }
        slot_[it.entry] = ai_.size() - 1;
    }
    slot_.resize(rows.size());  // synthetic diagonal entries are not user-visible
    for (int j = 0; j < n; ++j) ap_[j + 1] += ap_[j];
    ax_.assign(ai_.size(), 0.0);

    // Elimination tree and column counts.
    etree_.assign(n, -1);
    lnz_.assign(n, 0);
    std::vector<int> flag(n, -1);
    for (int j = 0; j < n; ++j) {
        flag[j] = j;
        for (int p = ap_[j]; p < ap_[j + 1]; ++p) {
            int i = ai_[p];
            while (i != j && flag[i] != j) {
                if (etree_[i] == -1) etree_[i] = j;
                lnz_[i]++;
                flag[i] = j;
                i = etree_[i];
            }
        }
    }
    lp_.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) lp_[i + 1] = lp_[i] + lnz_[i];
    li_.assign(lp_[n], 0);
    lx_.assign(lp_[n], 0.0);
    d_.assign(n, 0.0);
    dinv_.assign(n, 0.0);
    work_.assign(n, 0.0);
}

void QuasiDefiniteLdl::clear_values() { std::fill(ax_.begin(), ax_.end(), 0.0); }

int QuasiDefiniteLdl::factorize(double static_reg, double dynamic_eps, double dynamic_reg) {
    const int n = n_;
    std::vector<double> y(n, 0.0);
    std::vector<char> marked(n, 0);
    std::vector<int> pattern(n), stack(n), next_space(n);
    for (int i = 0; i < n; ++i) next_space[i] = lp_[i];
    int regularized = 0;

    for (int k = 0; k < n; ++k) {
        d_[k] = signs_[k] * static_reg;
        int npat = 0;
        for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
            const int i = ai_[p];
            if (i == k) {
                d_[k] += ax_[p];
                continue;
            }
            y[i] = ax_[p];
            if (marked[i]) continue;
            int depth = 0;
            int node = i;
            while (node != -1 && node < k && !marked[node]) {
                marked[node] = 1;
                stack[depth++] = node;
                node = etree_[node];
            }
            while (depth > 0) pattern[npat++] = stack[--depth];
        }
        for (int q = npat - 1; q >= 0; --q) {
            const int c = pattern[q];
            const double yc = y[c];
            for (int p = lp_[c]; p < next_space[c]; ++p) y[li_[p]] -= lx_[p] * yc;
            const double l = yc * dinv_[c];
            li_[next_space[c]] = k;
            lx_[next_space[c]] = l;
            next_space[c]++;
            d_[k] -= yc * l;
            y[c] = 0.0;
            marked[c] = 0;
        }
        if (signs_[k] * d_[k] <= dynamic_eps) {
            d_[k] = signs_[k] * dynamic_reg;
            ++regularized;
        }
        dinv_[k] = 1.0 / d_[k];
    }
    return regularized;
}

void QuasiDefiniteLdl::solve(std::vector<double>& b) const {
    const int n = n_;
    auto& x = work_;
    for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (int i = 0; i < n; ++i)
        for (int p = lp_[i]; p < lp_[i + 1]; ++p) x[li_[p]] -= lx_[p] * x[i];
    for (int i = 0; i < n; ++i) x[i] *= dinv_[i];
    for (int i = n - 1; i >= 0; --i)
        for (int p = lp_[i]; p < lp_[i + 1]; ++p) x[i] -= lx_[p] * x[li_[p]];
    for (int i = 0; i < n; ++i) b[perm_[i]] = x[i];
}

void QuasiDefiniteLdl::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    const int n = n_;
    y.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const double xj = x[perm_[j]];
        for (int p = ap_[j]; p < ap_[j + 1]; ++p) {
            const int i = ai_[p];
            y[perm_[i]] += ax_[p] * xj;
            if (i != j) y[perm_[j]] += ax_[p] * x[perm_[i]];
        }
    }
}

}  // namespace dne::conic::detail

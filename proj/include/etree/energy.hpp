#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "etree/dataset.hpp"
#include "etree/distances.hpp"
#include "etree/error.hpp"
#include "etree/matrix.hpp"
#include "etree/parallel.hpp"
#include "etree/rng.hpp"

namespace etree {

// Numerical floor for the distance covariance, which is nonnegative in exact
// arithmetic but can dip below zero by rounding.
inline constexpr double kDcovFloor = 1e-12;

struct IndependenceTest {
    double statistic = 0.0;  // m * V^2_m
    double p_value = 1.0;    // in [1/(B+1), 1]
    int n_permutations = 0;
    int covariate_index = -1;
};

// ------------------------------------------------------------------------
// Distance covariance
// ------------------------------------------------------------------------

// Double-centered distances: A_kl = a_kl - rowmean_k - colmean_l + grandmean.
struct CenteredDistances {
    int m = 0;
    std::vector<double> a;  // m*m, row-major
    const double* row(int k) const { return a.data() + static_cast<std::size_t>(k) * m; }
};

inline CenteredDistances double_center(const DistanceMatrix& d) {
    const int m = d.m;
    CenteredDistances out;
    out.m = m;
    out.a.resize(static_cast<std::size_t>(m) * m);
    std::vector<double> row_mean(static_cast<std::size_t>(m), 0.0);
    for (int k = 0; k < m; ++k) {
        const double* r = d.row(k);
        double s = 0.0;
        for (int l = 0; l < m; ++l) s += r[l];
        row_mean[static_cast<std::size_t>(k)] = s / m;
    }
    // symmetric input: column means equal row means
    double grand = 0.0;
    for (double v : row_mean) grand += v;
    grand /= m;
    for (int k = 0; k < m; ++k) {
        const double* r = d.row(k);
        double* o = out.a.data() + static_cast<std::size_t>(k) * m;
        const double rk = row_mean[static_cast<std::size_t>(k)];
        for (int l = 0; l < m; ++l)
            o[l] = r[l] - rk - row_mean[static_cast<std::size_t>(l)] + grand;
    }
    return out;
}

namespace detail {

// V^2 with the response's centered matrix reindexed by perm (reshuffling the
// indices of Y and recentering gives exactly this).
inline double dcov_sq_permuted(const CenteredDistances& ax, const CenteredDistances& by,
                               std::span<const int> perm) {
    const int m = ax.m;
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
        const double* arow = ax.row(k);
        const double* brow = by.row(perm[static_cast<std::size_t>(k)]);
        double s = 0.0;
        for (int l = 0; l < m; ++l) s += arow[l] * brow[perm[static_cast<std::size_t>(l)]];
        acc += s;
    }
    double v = acc / (static_cast<double>(m) * static_cast<double>(m));
    if (v < 0.0 && v >= -kDcovFloor) v = 0.0;
    return v;
}

inline double dcov_sq_identity(const CenteredDistances& ax, const CenteredDistances& by) {
    const int m = ax.m;
    double acc = 0.0;
    for (std::size_t i = 0; i < ax.a.size(); ++i) acc += ax.a[i] * by.a[i];
    double v = acc / (static_cast<double>(m) * static_cast<double>(m));
    if (v < 0.0 && v >= -kDcovFloor) v = 0.0;
    return v;
}

}  // namespace detail

// Squared sample distance covariance V^2_m of two same-size distance
// matrices; values within the numerical floor are clamped to zero.
inline double dcov_squared(const DistanceMatrix& dx, const DistanceMatrix& dy) {
    if (dx.m != dy.m) throw DataError("dcov_squared: size mismatch");
    if (dx.m < 1) throw DataError("dcov_squared: empty matrices");
    return detail::dcov_sq_identity(double_center(dx), double_center(dy));
}

// ------------------------------------------------------------------------
// Permutation test of independence
// ------------------------------------------------------------------------

// Test statistic m * V^2_m; the null distribution is estimated by B random
// reshuffles of the response indices. The add-one estimator keeps the
// p-value in [1/(B+1), 1]. Replicate b draws its permutation from substream
// key.child(b), so replicates are reproducible under any scheduling.
inline IndependenceTest energy_test(const DistanceMatrix& dx, const DistanceMatrix& dy,
                                    int n_permutations, StreamKey key) {
    if (dx.m != dy.m) throw DataError("energy_test: size mismatch");
    if (dx.m < 2) throw DataError("energy_test: need at least 2 observations");
    if (n_permutations < 1) throw DataError("energy_test: need at least 1 permutation");
    const int m = dx.m;
    const CenteredDistances ax = double_center(dx);
    const CenteredDistances by = double_center(dy);
    const double observed = static_cast<double>(m) * detail::dcov_sq_identity(ax, by);

    std::vector<unsigned char> ge(static_cast<std::size_t>(n_permutations), 0);
    parallel_for(static_cast<std::size_t>(n_permutations), [&](std::size_t b) {
        std::mt19937_64 g = key.child(b).engine();
        const std::vector<int> perm = random_permutation(m, g);
        const double replicate = static_cast<double>(m) * detail::dcov_sq_permuted(ax, by, perm);
        ge[b] = replicate >= observed ? 1 : 0;
    });
    const int count = std::accumulate(ge.begin(), ge.end(), 0);

    IndependenceTest t;
    t.statistic = observed;
    t.p_value = (1.0 + count) / (n_permutations + 1.0);
    t.n_permutations = n_permutations;
    return t;
}

inline IndependenceTest energy_test(const DistanceMatrix& dx, const Response& y,
                                    const NodeView& view, int n_permutations, StreamKey key) {
    return energy_test(dx, response_distances(y, view), n_permutations, key);
}

// ------------------------------------------------------------------------
// Benjamini-Hochberg step-up adjustment
// ------------------------------------------------------------------------

inline std::vector<double> bh_adjust(const std::vector<double>& p) {
    const int J = static_cast<int>(p.size());
    for (double v : p)
        if (!(v > 0.0 && v <= 1.0)) throw DataError("bh_adjust: p-value outside (0,1]");
    if (J == 0) return {};
    std::vector<int> order(static_cast<std::size_t>(J));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return p[static_cast<std::size_t>(a)] < p[static_cast<std::size_t>(b)]; });
    std::vector<double> sorted_adj(static_cast<std::size_t>(J));
    for (int i = 0; i < J; ++i) {
        // factor first: J/(i+1) >= 1 exactly, so adjusted >= raw holds in
        // floating point as well
        const double factor = static_cast<double>(J) / (i + 1);
        sorted_adj[static_cast<std::size_t>(i)] =
            p[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] * factor;
    }
    for (int i = J - 2; i >= 0; --i)
        sorted_adj[static_cast<std::size_t>(i)] =
            std::min(sorted_adj[static_cast<std::size_t>(i)], sorted_adj[static_cast<std::size_t>(i) + 1]);
    std::vector<double> out(static_cast<std::size_t>(J));
    for (int i = 0; i < J; ++i)
        out[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            std::min(1.0, sorted_adj[static_cast<std::size_t>(i)]);
    return out;
}

// ------------------------------------------------------------------------
// Variable selection with the FDR-corrected global stop
// ------------------------------------------------------------------------

struct SelectionOutcome {
    bool stopped = false;
    int selected = -1;  // argmin raw p-value, ties to the lowest index
    std::vector<IndependenceTest> tests;
    std::vector<double> adjusted_p;
};

// Tests every covariate against the response, adjusts the raw p-values with
// BH, and stops when the minimum adjusted p-value fails the level alpha.
// alpha = 1 disables stopping: a split is forced whenever any covariate shows
// a sub-unit p-value (only fully degenerate nodes, all p = 1, still stop).
// Covariate j draws from substream key.child(j).
inline SelectionOutcome select_variable(std::span<const DistanceMatrix> dx_per_covariate,
                                        const DistanceMatrix& dy, double alpha,
                                        int n_permutations, StreamKey key) {
    const int J = static_cast<int>(dx_per_covariate.size());
    if (J < 1) throw DataError("select_variable: need at least one covariate");

    SelectionOutcome out;
    out.tests.resize(static_cast<std::size_t>(J));
    parallel_for(static_cast<std::size_t>(J), [&](std::size_t j) {
        IndependenceTest t = energy_test(dx_per_covariate[j], dy, n_permutations, key.child(j));
        t.covariate_index = static_cast<int>(j);
        out.tests[j] = t;
    });

    std::vector<double> raw(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) raw[static_cast<std::size_t>(j)] = out.tests[static_cast<std::size_t>(j)].p_value;
    out.adjusted_p = bh_adjust(raw);

    const double min_raw = *std::min_element(raw.begin(), raw.end());
    const double min_adj = *std::min_element(out.adjusted_p.begin(), out.adjusted_p.end());
    out.stopped = alpha >= 1.0 ? min_raw >= 1.0 : min_adj >= alpha;
    if (!out.stopped)
        out.selected = static_cast<int>(std::min_element(raw.begin(), raw.end()) - raw.begin());
    return out;
}

}  // namespace etree

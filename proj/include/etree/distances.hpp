#pragma once
#include <cmath>
#include <span>
#include <string>

#include "etree/dataset.hpp"
#include "etree/error.hpp"
#include "etree/matrix.hpp"
#include "etree/parallel.hpp"

namespace etree {

// ------------------------------------------------------------------------
// Per-type distance kernels
// ------------------------------------------------------------------------

inline double dist_numeric(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw DataError("dist_numeric: non-finite input");
    return std::abs(a - b);
}

inline double dist_nominal(int a, int b, int n_levels) {
    if (a < 0 || a >= n_levels || b < 0 || b >= n_levels)
        throw DataError("dist_nominal: level code out of range");
    return a == b ? 0.0 : 1.0;
}

// L2 distance between two curves sampled on a shared grid, trapezoidal rule.
inline double dist_functional(std::span<const double> f, std::span<const double> g,
                              std::span<const double> grid) {
    const std::size_t G = grid.size();
    if (f.size() != G || g.size() != G)
        throw DataError("dist_functional: curve/grid length mismatch");
    if (G < 2) throw DataError("dist_functional: grid needs >= 2 points");
    double acc = 0.0;
    double prev = (f[0] - g[0]) * (f[0] - g[0]);
    for (std::size_t i = 1; i < G; ++i) {
        const double cur = (f[i] - g[i]) * (f[i] - g[i]);
        acc += 0.5 * (grid[i] - grid[i - 1]) * (prev + cur);
        prev = cur;
    }
    return std::sqrt(acc);
}

// Edge difference distance: Frobenius norm of the adjacency difference. The
// double sum runs over all ordered vertex pairs, so both triangles count.
inline double dist_graph(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DataError("dist_graph: adjacency dimension mismatch");
    double acc = 0.0;
    const std::vector<double>& da = a.data();
    const std::vector<double>& db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// ------------------------------------------------------------------------
// Node-local pairwise matrices
// ------------------------------------------------------------------------

namespace detail {

template <class Dist>
DistanceMatrix pairwise(int m, Dist&& dist, bool parallel_rows) {
    DistanceMatrix out = DistanceMatrix::zeros(m);
    auto fill_row = [&](std::size_t k) {
        for (int l = static_cast<int>(k) + 1; l < m; ++l)
            out.at(static_cast<int>(k), l) = dist(static_cast<int>(k), l);
    };
    if (parallel_rows)
        parallel_for(static_cast<std::size_t>(m), fill_row);
    else
        for (int k = 0; k < m; ++k) fill_row(static_cast<std::size_t>(k));
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < k; ++l) out.at(k, l) = out(l, k);
    return out;
}

}  // namespace detail

// Pairwise distances of a plain numeric vector (also used for indicator
// vectors, where |a-b| coincides with the Gower distance on {0,1}).
inline DistanceMatrix numeric_pairwise(std::span<const double> v) {
    const int m = static_cast<int>(v.size());
    return detail::pairwise(m, [&](int k, int l) {
        return std::abs(v[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(l)]);
    }, false);
}

// Distance matrix of one covariate over a node view, using the type's kernel.
inline DistanceMatrix pairwise_matrix(const Covariate& cov, const NodeView& view) {
    const int m = view.size();
    if (m == 0) throw DataError("pairwise_matrix: empty view");
    const std::vector<int>& rows = view.rows;
    switch (cov.kind()) {
        case CovariateKind::numeric: {
            const std::vector<double>& x = cov.numeric().values;
            return detail::pairwise(m, [&](int k, int l) {
                return dist_numeric(x[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])],
                                    x[static_cast<std::size_t>(rows[static_cast<std::size_t>(l)])]);
            }, false);
        }
        case CovariateKind::nominal: {
            const NominalColumn& c = cov.nominal();
            const int K = static_cast<int>(c.levels.size());
            return detail::pairwise(m, [&](int k, int l) {
                return dist_nominal(c.codes[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])],
                                    c.codes[static_cast<std::size_t>(rows[static_cast<std::size_t>(l)])], K);
            }, false);
        }
        case CovariateKind::functional: {
            const FunctionalColumn& c = cov.functional();
            return detail::pairwise(m, [&](int k, int l) {
                return dist_functional(c.values.row_span(rows[static_cast<std::size_t>(k)]),
                                       c.values.row_span(rows[static_cast<std::size_t>(l)]),
                                       c.grid);
            }, true);
        }
        case CovariateKind::graph: {
            const GraphColumn& c = cov.graph();
            return detail::pairwise(m, [&](int k, int l) {
                return dist_graph(c.adjacency[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])],
                                  c.adjacency[static_cast<std::size_t>(rows[static_cast<std::size_t>(l)])]);
            }, true);
        }
    }
    throw DataError("pairwise_matrix: unknown covariate kind");
}

// Response distances: |Y_k - Y_l| for regression, Gower for classification.
inline DistanceMatrix response_distances(const Response& y, const NodeView& view) {
    const int m = view.size();
    if (m == 0) throw DataError("response_distances: empty view");
    const std::vector<int>& rows = view.rows;
    if (y.kind == ResponseKind::numeric) {
        return detail::pairwise(m, [&](int k, int l) {
            return dist_numeric(y.values[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])],
                                y.values[static_cast<std::size_t>(rows[static_cast<std::size_t>(l)])]);
        }, false);
    }
    const int K = static_cast<int>(y.levels.size());
    return detail::pairwise(m, [&](int k, int l) {
        return dist_nominal(y.codes[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])],
                            y.codes[static_cast<std::size_t>(rows[static_cast<std::size_t>(l)])], K);
    }, false);
}

}  // namespace etree

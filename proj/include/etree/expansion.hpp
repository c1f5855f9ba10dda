#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "etree/error.hpp"
#include "etree/matrix.hpp"

namespace etree {

// ------------------------------------------------------------------------
// Expansion metadata, persisted in split rules so a new observation expands
// identically at predict time.
// ------------------------------------------------------------------------

struct BsplineMeta {
    int n_basis = 0;
    double t_min = 0.0;
    double t_max = 0.0;
    friend bool operator==(const BsplineMeta&, const BsplineMeta&) = default;
};

struct KcoreMeta {  // binary graphs: counts indexed by shell, length |V|
    int n_vertices = 0;
    friend bool operator==(const KcoreMeta&, const KcoreMeta&) = default;
};

struct ShellBinsMeta {  // weighted graphs: histogram over fixed bin edges
    std::vector<double> edges;
    friend bool operator==(const ShellBinsMeta&, const ShellBinsMeta&) = default;
};

using ExpansionMeta = std::variant<BsplineMeta, KcoreMeta, ShellBinsMeta>;

// m x s matrix of expansion components; column s is one component across the
// node's observations.
struct ComponentMatrix {
    Matrix values;
    ExpansionMeta meta;
};

// ------------------------------------------------------------------------
// Cubic B-spline basis on a clamped uniform knot vector
// ------------------------------------------------------------------------

class BsplineBasis {
public:
    static constexpr int kOrder = 4;  // cubic

    BsplineBasis(double t_min, double t_max, int n_basis)
        : n_basis_(n_basis), t_min_(t_min), t_max_(t_max) {
        if (n_basis < kOrder)
            throw DataError("bspline: need at least " + std::to_string(kOrder) + " basis functions");
        if (!(t_min < t_max)) throw DataError("bspline: degenerate knot span");
        // clamped: order-fold end knots, equally spaced interior knots
        const int interior = n_basis - kOrder;
        knots_.assign(kOrder, t_min);
        for (int i = 1; i <= interior; ++i)
            knots_.push_back(t_min + (t_max - t_min) * i / (interior + 1));
        knots_.insert(knots_.end(), kOrder, t_max);
    }

    int size() const { return n_basis_; }

    // All n_basis function values at t (Cox-de Boor). The last basis is taken
    // right-continuous at t_max so the closed interval is covered.
    std::vector<double> evaluate(double t) const {
        const int n_spans = static_cast<int>(knots_.size()) - 1;
        std::vector<double> n_prev(static_cast<std::size_t>(n_spans), 0.0);
        if (t >= t_max_) {
            // membership in the last nondegenerate span
            for (int i = n_spans - 1; i >= 0; --i)
                if (knots_[static_cast<std::size_t>(i)] < knots_[static_cast<std::size_t>(i) + 1]) {
                    n_prev[static_cast<std::size_t>(i)] = 1.0;
                    break;
                }
        } else {
            for (int i = 0; i < n_spans; ++i)
                if (knots_[static_cast<std::size_t>(i)] <= t && t < knots_[static_cast<std::size_t>(i) + 1]) {
                    n_prev[static_cast<std::size_t>(i)] = 1.0;
                    break;
                }
        }
        std::vector<double> n_cur(static_cast<std::size_t>(n_spans), 0.0);
        for (int k = 2; k <= kOrder; ++k) {
            for (int i = 0; i + k <= n_spans; ++i) {
                const double left_den = knots_[static_cast<std::size_t>(i + k - 1)] - knots_[static_cast<std::size_t>(i)];
                const double right_den = knots_[static_cast<std::size_t>(i + k)] - knots_[static_cast<std::size_t>(i + 1)];
                double v = 0.0;
                if (left_den > 0.0) v += (t - knots_[static_cast<std::size_t>(i)]) / left_den * n_prev[static_cast<std::size_t>(i)];
                if (right_den > 0.0)
                    v += (knots_[static_cast<std::size_t>(i + k)] - t) / right_den * n_prev[static_cast<std::size_t>(i) + 1];
                n_cur[static_cast<std::size_t>(i)] = v;
            }
            std::swap(n_prev, n_cur);
            std::fill(n_cur.begin(), n_cur.end(), 0.0);
        }
        n_prev.resize(static_cast<std::size_t>(n_basis_));
        return n_prev;
    }

    Eigen::MatrixXd design(std::span<const double> grid) const {
        Eigen::MatrixXd d(static_cast<Eigen::Index>(grid.size()), n_basis_);
        for (std::size_t r = 0; r < grid.size(); ++r) {
            const std::vector<double> row = evaluate(grid[r]);
            for (int c = 0; c < n_basis_; ++c) d(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
        }
        return d;
    }

private:
    int n_basis_;
    double t_min_, t_max_;
    std::vector<double> knots_;
};

namespace detail {

// Shared least-squares solver; curves are solved one right-hand side at a
// time so fit-time and predict-time expansions follow the identical path.
struct BsplineFitter {
    BsplineBasis basis;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    int grid_size;

    BsplineFitter(std::span<const double> grid, int n_basis)
        : basis(grid.front(), grid.back(), n_basis),
          grid_size(static_cast<int>(grid.size())) {
        if (static_cast<int>(grid.size()) < n_basis)
            throw DataError("bspline: grid has fewer points than basis functions");
        Eigen::MatrixXd d = basis.design(grid);
        qr.compute(d);
        if (qr.rank() < n_basis) throw DataError("bspline: rank-deficient design matrix");
    }

    std::vector<double> solve(std::span<const double> curve) const {
        Eigen::Map<const Eigen::VectorXd> rhs(curve.data(), static_cast<Eigen::Index>(curve.size()));
        Eigen::VectorXd c = qr.solve(rhs);
        return std::vector<double>(c.data(), c.data() + c.size());
    }
};

}  // namespace detail

// Least-squares coefficients of each curve in the cubic B-spline basis with
// equally spaced knots over the grid span. Row i holds curve i's coefficients.
inline ComponentMatrix bspline_coefficients(const Matrix& curves, std::span<const double> grid,
                                            int n_basis) {
    if (curves.cols() != static_cast<int>(grid.size()))
        throw DataError("bspline: curves/grid length mismatch");
    const detail::BsplineFitter fitter(grid, n_basis);
    ComponentMatrix out;
    out.values = Matrix(curves.rows(), n_basis);
    for (int i = 0; i < curves.rows(); ++i) {
        const std::vector<double> c = fitter.solve(curves.row_span(i));
        for (int s = 0; s < n_basis; ++s) out.values(i, s) = c[static_cast<std::size_t>(s)];
    }
    out.meta = BsplineMeta{n_basis, grid.front(), grid.back()};
    return out;
}

inline std::vector<double> bspline_expand_one(std::span<const double> curve,
                                              std::span<const double> grid,
                                              const BsplineMeta& meta) {
    if (curve.size() != grid.size()) throw DataError("bspline: curve/grid length mismatch");
    return detail::BsplineFitter(grid, meta.n_basis).solve(curve);
}

// ------------------------------------------------------------------------
// Core decompositions
// ------------------------------------------------------------------------

// Shell index of each vertex of a binary graph: the largest k such that the
// vertex survives iterative pruning of vertices with degree < k.
inline std::vector<int> k_core_shell_indices(const Matrix& adjacency) {
    const int V = adjacency.rows();
    if (adjacency.cols() != V) throw DataError("k_core: adjacency not square");
    std::vector<int> degree(static_cast<std::size_t>(V), 0);
    for (int u = 0; u < V; ++u)
        for (int v = 0; v < V; ++v) {
            const double w = adjacency(u, v);
            if (w != 0.0 && w != 1.0) throw DataError("k_core: non-binary adjacency entry");
            if (w == 1.0) ++degree[static_cast<std::size_t>(u)];
        }
    std::vector<int> shell(static_cast<std::size_t>(V), 0);
    std::vector<char> alive(static_cast<std::size_t>(V), 1);
    int k = 0;
    int removed = 0;
    while (removed < V) {
        int victim = -1;
        for (int v = 0; v < V; ++v)
            if (alive[static_cast<std::size_t>(v)] && degree[static_cast<std::size_t>(v)] <= k) {
                victim = v;
                break;
            }
        if (victim < 0) {
            ++k;
            continue;
        }
        shell[static_cast<std::size_t>(victim)] = k;
        alive[static_cast<std::size_t>(victim)] = 0;
        ++removed;
        for (int u = 0; u < V; ++u)
            if (alive[static_cast<std::size_t>(u)] && adjacency(victim, u) == 1.0)
                --degree[static_cast<std::size_t>(u)];
    }
    return shell;
}

// Weighted analogue: shell value of a vertex is the largest strength
// threshold it survives, swept over the observed strength levels. Strengths
// are recomputed from the remaining subgraph at every removal to keep the
// sweep exact.
inline std::vector<double> s_core_shell_values(const Matrix& adjacency) {
    const int V = adjacency.rows();
    if (adjacency.cols() != V) throw DataError("s_core: adjacency not square");
    for (std::size_t i = 0; i < adjacency.data().size(); ++i)
        if (adjacency.data()[i] < 0.0) throw DataError("s_core: negative edge weight");

    std::vector<double> shell(static_cast<std::size_t>(V), 0.0);
    std::vector<char> alive(static_cast<std::size_t>(V), 1);
    auto strength = [&](int v) {
        double s = 0.0;
        for (int u = 0; u < V; ++u)
            if (alive[static_cast<std::size_t>(u)]) s += adjacency(v, u);
        return s;
    };
    int removed = 0;
    double level = 0.0;
    while (removed < V) {
        double smin = std::numeric_limits<double>::infinity();
        for (int v = 0; v < V; ++v)
            if (alive[static_cast<std::size_t>(v)]) smin = std::min(smin, strength(v));
        if (smin > level) level = smin;
        // prune everything at or below the level; removals cascade
        for (;;) {
            int victim = -1;
            for (int v = 0; v < V; ++v)
                if (alive[static_cast<std::size_t>(v)] && strength(v) <= level) {
                    victim = v;
                    break;
                }
            if (victim < 0) break;
            shell[static_cast<std::size_t>(victim)] = level;
            alive[static_cast<std::size_t>(victim)] = 0;
            ++removed;
        }
    }
    return shell;
}

// ------------------------------------------------------------------------
// Shell distributions
// ------------------------------------------------------------------------

// Binary graphs: entry j counts the vertices with shell index j, 0..|V|-1.
inline std::vector<double> shell_distribution(std::span<const int> shells) {
    if (shells.empty()) throw DataError("shell_distribution: empty vertex set");
    const int V = static_cast<int>(shells.size());
    std::vector<double> counts(static_cast<std::size_t>(V), 0.0);
    for (int s : shells) {
        if (s < 0 || s >= V) throw DataError("shell_distribution: shell index out of range");
        counts[static_cast<std::size_t>(s)] += 1.0;
    }
    return counts;
}

// Weighted graphs: histogram of shell values over fixed bin edges. Values
// outside the edge span clamp to the boundary bins so predict-time vectors
// keep the training length.
inline std::vector<double> shell_distribution(std::span<const double> shells,
                                              std::span<const double> edges) {
    if (shells.empty()) throw DataError("shell_distribution: empty vertex set");
    if (edges.size() < 2) throw DataError("shell_distribution: empty bin specification");
    const int bins = static_cast<int>(edges.size()) - 1;
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double s : shells) {
        int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), s) - edges.begin()) - 1;
        b = std::clamp(b, 0, bins - 1);
        counts[static_cast<std::size_t>(b)] += 1.0;
    }
    return counts;
}

inline std::vector<double> equal_width_edges(double lo, double hi, int bins) {
    if (bins < 1) throw DataError("equal_width_edges: need at least one bin");
    if (!(hi > lo)) hi = lo + 1.0;  // degenerate range: one meaningful bin
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    return edges;
}

}  // namespace etree

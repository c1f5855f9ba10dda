#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etree/dataset.hpp"
#include "etree/distances.hpp"
#include "etree/energy.hpp"
#include "etree/error.hpp"
#include "etree/expansion.hpp"
#include "etree/parallel.hpp"
#include "etree/rng.hpp"
#include "etree/split.hpp"

namespace etree {

// ------------------------------------------------------------------------
// Configuration and model types
// ------------------------------------------------------------------------

enum class SplitMethod { fve, clustering };

inline const char* to_string(SplitMethod m) {
    return m == SplitMethod::fve ? "fve" : "clustering";
}

struct FitConfig {
    double alpha = 0.05;  // alpha = 1 disables stopping (forced splits)
    int min_bucket = 5;
    int n_permutations = 999;
    SplitMethod split_method = SplitMethod::fve;
    int n_basis = 10;     // default basis size per functional covariate
    int shell_bins = 10;  // default bin count per weighted-graph covariate
    std::map<std::string, int> n_basis_by_covariate;
    std::map<std::string, int> shell_bins_by_covariate;
    std::uint64_t seed = 0;
    int max_depth = -1;  // < 0: unlimited
};

enum class StopReason {
    not_stopped,
    alpha,          // global independence not rejected
    min_size,       // node smaller than 2 * min_bucket
    pure,           // zero response variance / single class
    max_depth,
    no_valid_split,  // selected covariate admits no candidate respecting min_bucket
    no_covariates
};

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::not_stopped: return "none";
        case StopReason::alpha: return "alpha";
        case StopReason::min_size: return "min_size";
        case StopReason::pure: return "pure";
        case StopReason::max_depth: return "max_depth";
        case StopReason::no_valid_split: return "no_valid_split";
        case StopReason::no_covariates: return "no_covariates";
    }
    return "?";
}

struct CovariateSchema {
    std::string name;
    CovariateKind kind = CovariateKind::numeric;
    std::vector<std::string> levels;       // nominal
    std::vector<double> grid;              // functional
    GraphKind graph_kind = GraphKind::binary;
    int n_vertices = 0;
    int n_basis = 0;                       // resolved basis size (functional)
    int shell_bins = 0;                    // resolved bin count (weighted graph)
    std::vector<double> shell_bin_edges;   // persisted once the expansion is built
};

struct Schema {
    ResponseKind response_kind = ResponseKind::numeric;
    std::vector<std::string> response_levels;
    std::vector<CovariateSchema> covariates;
};

struct TreeNode {
    int id = -1;
    int depth = 0;
    std::vector<int> weights;  // case weights over the learning sample
    int size = 0;              // sum of weights
    std::vector<double> p_raw;  // per-covariate test record (empty if untested)
    std::vector<double> p_adj;
    int selected = -1;
    StopReason stop = StopReason::not_stopped;
    std::optional<SplitRule> rule;
    std::optional<double> split_p_value;
    int left = -1, right = -1;
    // terminal payload
    double mean = 0.0;
    std::vector<int> class_counts;
    int modal_class = -1;

    bool is_leaf() const { return !rule.has_value(); }
};

struct EnergyTree {
    FitConfig config;
    Schema schema;
    std::vector<TreeNode> nodes;
    int root = 0;
};

// ------------------------------------------------------------------------
// Fit
// ------------------------------------------------------------------------

namespace detail {

// RNG derivation tags; node keys chain along the tree path, so subtree
// results are independent of sibling evaluation order.
inline constexpr std::uint64_t kKeyRoot = 1;
inline constexpr std::uint64_t kKeySelect = 2;
inline constexpr std::uint64_t kKeySplit = 3;
inline constexpr std::uint64_t kKeyLeft = 4;
inline constexpr std::uint64_t kKeyRight = 5;

inline constexpr int kMaxNominalLevels = 15;

// Full-column component matrices, built on first use and shared by every
// node (expansions are observation-determined once bins are fixed).
class ExpansionCache {
public:
    ExpansionCache(const Dataset& ds, Schema& schema) : ds_(ds), schema_(schema) {
        columns_.resize(ds.covariates.size());
    }

    const ComponentMatrix& column(int j) {
        std::lock_guard<std::mutex> lock(mu_);
        std::optional<ComponentMatrix>& slot = columns_[static_cast<std::size_t>(j)];
        if (!slot) {
            try {
                slot = build(j);
            } catch (const DataError& e) {
                throw DataError("covariate '" + ds_.covariates[static_cast<std::size_t>(j)].name +
                                "': " + e.what());
            }
        }
        return *slot;
    }

private:
    ComponentMatrix build(int j) {
        const Covariate& cov = ds_.covariates[static_cast<std::size_t>(j)];
        CovariateSchema& cs = schema_.covariates[static_cast<std::size_t>(j)];
        if (cov.kind() == CovariateKind::functional) {
            const FunctionalColumn& c = cov.functional();
            return bspline_coefficients(c.values, c.grid, cs.n_basis);
        }
        if (cov.kind() != CovariateKind::graph)
            throw DataError("expansion requested for a traditional covariate");
        const GraphColumn& g = cov.graph();
        ComponentMatrix out;
        if (g.kind == GraphKind::binary) {
            out.values = Matrix(ds_.n, g.n_vertices);
            for (int i = 0; i < ds_.n; ++i) {
                const std::vector<double> dist =
                    shell_distribution(k_core_shell_indices(g.adjacency[static_cast<std::size_t>(i)]));
                for (int s = 0; s < g.n_vertices; ++s) out.values(i, s) = dist[static_cast<std::size_t>(s)];
            }
            out.meta = KcoreMeta{g.n_vertices};
            return out;
        }
        // weighted: equal-width bins over the shell values observed across
        // the whole training column, persisted for predict-time consistency
        std::vector<std::vector<double>> shells(static_cast<std::size_t>(ds_.n));
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < ds_.n; ++i) {
            shells[static_cast<std::size_t>(i)] =
                s_core_shell_values(g.adjacency[static_cast<std::size_t>(i)]);
            for (double s : shells[static_cast<std::size_t>(i)]) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
        cs.shell_bin_edges = equal_width_edges(lo, hi, cs.shell_bins);
        out.values = Matrix(ds_.n, cs.shell_bins);
        for (int i = 0; i < ds_.n; ++i) {
            const std::vector<double> dist =
                shell_distribution(shells[static_cast<std::size_t>(i)], cs.shell_bin_edges);
            for (int s = 0; s < cs.shell_bins; ++s) out.values(i, s) = dist[static_cast<std::size_t>(s)];
        }
        out.meta = ShellBinsMeta{cs.shell_bin_edges};
        return out;
    }

    const Dataset& ds_;
    Schema& schema_;
    std::mutex mu_;
    std::vector<std::optional<ComponentMatrix>> columns_;
};

struct SplitAttempt {
    SplitRule rule;
    std::optional<double> p_value;
    std::vector<std::uint8_t> assignment;  // per node position: 0 left, 1 right
};

struct FitDriver {
    const Dataset& ds;
    const FitConfig& cfg;
    EnergyTree& tree;
    std::vector<DistanceMatrix> root_dx;
    DistanceMatrix root_dy;
    ExpansionCache cache;

    FitDriver(const Dataset& d, const FitConfig& c, EnergyTree& t)
        : ds(d), cfg(c), tree(t), cache(d, t.schema) {}

    bool pure(const std::vector<int>& rows) const {
        const Response& y = ds.response;
        if (y.kind == ResponseKind::numeric) {
            const double first = y.values[static_cast<std::size_t>(rows.front())];
            for (int r : rows)
                if (y.values[static_cast<std::size_t>(r)] != first) return false;
        } else {
            const int first = y.codes[static_cast<std::size_t>(rows.front())];
            for (int r : rows)
                if (y.codes[static_cast<std::size_t>(r)] != first) return false;
        }
        return true;
    }

    void fill_leaf_payload(TreeNode& node, const std::vector<int>& rows) const {
        const Response& y = ds.response;
        if (y.kind == ResponseKind::numeric) {
            double s = 0.0;
            for (int r : rows) s += y.values[static_cast<std::size_t>(r)];
            node.mean = s / static_cast<double>(rows.size());
        } else {
            node.class_counts.assign(y.levels.size(), 0);
            for (int r : rows) ++node.class_counts[static_cast<std::size_t>(y.codes[static_cast<std::size_t>(r)])];
            node.modal_class = static_cast<int>(
                std::max_element(node.class_counts.begin(), node.class_counts.end()) -
                node.class_counts.begin());  // ties to the lowest code
        }
    }

    std::optional<SplitAttempt> try_split(int j, const std::vector<int>& rows,
                                          const DistanceMatrix& dxj, const DistanceMatrix& dy,
                                          StreamKey key) {
        const Covariate& cov = ds.covariates[static_cast<std::size_t>(j)];
        const int m = static_cast<int>(rows.size());
        switch (cov.kind()) {
            case CovariateKind::numeric: {
                std::vector<double> xs(static_cast<std::size_t>(m));
                for (int k = 0; k < m; ++k)
                    xs[static_cast<std::size_t>(k)] =
                        cov.numeric().values[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
                std::set<double> uniq(xs.begin(), xs.end());
                if (uniq.size() < 2) return std::nullopt;
                const std::optional<NumericSplit> s =
                    best_numeric_split(xs, dy, cfg.n_permutations, key, cfg.min_bucket);
                if (!s) return std::nullopt;
                SplitAttempt out;
                out.rule = NumericThreshold{j, s->threshold};
                out.p_value = s->p_value;
                out.assignment.resize(static_cast<std::size_t>(m));
                for (int k = 0; k < m; ++k)
                    out.assignment[static_cast<std::size_t>(k)] =
                        xs[static_cast<std::size_t>(k)] <= s->threshold ? 0 : 1;
                return out;
            }
            case CovariateKind::nominal: {
                std::vector<int> codes(static_cast<std::size_t>(m));
                for (int k = 0; k < m; ++k)
                    codes[static_cast<std::size_t>(k)] =
                        cov.nominal().codes[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])];
                std::set<int> present(codes.begin(), codes.end());
                if (present.size() < 2) return std::nullopt;
                if (static_cast<int>(present.size()) > kMaxNominalLevels)
                    throw DataError("covariate '" + cov.name + "': " +
                                    std::to_string(present.size()) +
                                    " levels exceed the subset-enumeration limit of " +
                                    std::to_string(kMaxNominalLevels));
                const std::optional<NominalSplit> s = best_nominal_split(
                    codes, dy, cfg.n_permutations, key, cfg.min_bucket, kMaxNominalLevels);
                if (!s) return std::nullopt;
                SplitAttempt out;
                out.rule = NominalSubset{j, s->subset};
                out.p_value = s->p_value;
                out.assignment.resize(static_cast<std::size_t>(m));
                for (int k = 0; k < m; ++k)
                    out.assignment[static_cast<std::size_t>(k)] =
                        std::binary_search(s->subset.begin(), s->subset.end(),
                                           codes[static_cast<std::size_t>(k)])
                            ? 0
                            : 1;
                return out;
            }
            case CovariateKind::functional:
            case CovariateKind::graph:
                if (cfg.split_method == SplitMethod::fve) return fve_attempt(j, rows, dy, key);
                return clustering_attempt(j, rows, dxj);
        }
        return std::nullopt;
    }

    std::optional<SplitAttempt> fve_attempt(int j, const std::vector<int>& rows,
                                            const DistanceMatrix& dy, StreamKey key) {
        const ComponentMatrix& full = cache.column(j);
        const int m = static_cast<int>(rows.size());
        const int s_count = full.values.cols();
        Matrix comp(m, s_count);
        for (int k = 0; k < m; ++k)
            for (int s = 0; s < s_count; ++s)
                comp(k, s) = full.values(rows[static_cast<std::size_t>(k)], s);
        bool any_varying = false;
        for (int s = 0; s < s_count && !any_varying; ++s)
            for (int k = 1; k < m; ++k)
                if (comp(k, s) != comp(0, s)) {
                    any_varying = true;
                    break;
                }
        if (!any_varying) return std::nullopt;
        const std::optional<FveSplit> s =
            fve_split(comp, dy, cfg.n_permutations, key, cfg.min_bucket);
        if (!s) return std::nullopt;
        SplitAttempt out;
        out.rule = ComponentThreshold{j, full.meta, s->component, s->threshold};
        out.p_value = s->p_value;
        out.assignment.resize(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k)
            out.assignment[static_cast<std::size_t>(k)] = comp(k, s->component) <= s->threshold ? 0 : 1;
        return out;
    }

    std::optional<SplitAttempt> clustering_attempt(int j, const std::vector<int>& rows,
                                                   const DistanceMatrix& dxj) {
        bool any_positive = false;
        for (double v : dxj.d)
            if (v > 0.0) {
                any_positive = true;
                break;
            }
        if (!any_positive) return std::nullopt;
        const PamResult pam = pam_two_medoids(dxj);
        int left = 0;
        for (std::uint8_t a : pam.assignment) left += a == 0 ? 1 : 0;
        const int right = static_cast<int>(pam.assignment.size()) - left;
        if (left < cfg.min_bucket || right < cfg.min_bucket) return std::nullopt;

        const Covariate& cov = ds.covariates[static_cast<std::size_t>(j)];
        MedoidPair rule;
        rule.covariate = j;
        rule.kind = cov.kind();
        rule.c1_row = rows[static_cast<std::size_t>(pam.medoid1)];
        rule.c2_row = rows[static_cast<std::size_t>(pam.medoid2)];
        if (cov.kind() == CovariateKind::functional) {
            const FunctionalColumn& c = cov.functional();
            const auto r1 = c.values.row_span(rule.c1_row);
            const auto r2 = c.values.row_span(rule.c2_row);
            rule.c1.curve.assign(r1.begin(), r1.end());
            rule.c2.curve.assign(r2.begin(), r2.end());
        } else {
            const GraphColumn& g = cov.graph();
            rule.c1.adjacency = g.adjacency[static_cast<std::size_t>(rule.c1_row)];
            rule.c2.adjacency = g.adjacency[static_cast<std::size_t>(rule.c2_row)];
        }
        SplitAttempt out;
        out.rule = rule;
        out.assignment = pam.assignment;  // no significance concept for clustering splits
        return out;
    }

    int build(const std::vector<int>& rows, StreamKey key, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        {
            TreeNode& node = tree.nodes.back();
            node.id = id;
            node.depth = depth;
            node.size = static_cast<int>(rows.size());
            node.weights.assign(static_cast<std::size_t>(ds.n), 0);
            for (int r : rows) ++node.weights[static_cast<std::size_t>(r)];
        }
        auto leaf = [&](StopReason reason) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
            node.stop = reason;
            fill_leaf_payload(node, rows);
            return id;
        };

        if (ds.covariates.empty()) return leaf(StopReason::no_covariates);
        if (cfg.max_depth >= 0 && depth >= cfg.max_depth) return leaf(StopReason::max_depth);
        if (static_cast<int>(rows.size()) < 2 * cfg.min_bucket) return leaf(StopReason::min_size);
        if (pure(rows)) return leaf(StopReason::pure);

        const std::span<const int> rows_span(rows);
        const DistanceMatrix dy = slice(root_dy, rows_span);
        std::vector<DistanceMatrix> dx(ds.covariates.size());
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = slice(root_dx[j], rows_span);

        const SelectionOutcome sel =
            select_variable(dx, dy, cfg.alpha, cfg.n_permutations, key.child(kKeySelect));
        {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
            node.p_raw.resize(sel.tests.size());
            for (std::size_t j = 0; j < sel.tests.size(); ++j) node.p_raw[j] = sel.tests[j].p_value;
            node.p_adj = sel.adjusted_p;
            node.selected = sel.selected;
        }
        if (sel.stopped) return leaf(StopReason::alpha);

        const int j = sel.selected;
        const std::optional<SplitAttempt> attempt =
            try_split(j, rows, dx[static_cast<std::size_t>(j)], dy, key.child(kKeySplit));
        if (!attempt) return leaf(StopReason::no_valid_split);

        std::vector<int> left_rows, right_rows;
        for (std::size_t k = 0; k < rows.size(); ++k)
            (attempt->assignment[k] == 0 ? left_rows : right_rows).push_back(rows[k]);

        {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
            node.rule = attempt->rule;
            node.split_p_value = attempt->p_value;
        }
        const int left = build(left_rows, key.child(kKeyLeft), depth + 1);
        const int right = build(right_rows, key.child(kKeyRight), depth + 1);
        tree.nodes[static_cast<std::size_t>(id)].left = left;
        tree.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }
};

inline void check_config(const FitConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
        throw std::invalid_argument("fit: alpha must lie in (0, 1]");
    if (cfg.min_bucket < 1) throw std::invalid_argument("fit: min_bucket must be >= 1");
    if (cfg.n_permutations < 1) throw std::invalid_argument("fit: n_permutations must be >= 1");
    if (cfg.n_basis < 4) throw std::invalid_argument("fit: n_basis must be >= 4");
    if (cfg.shell_bins < 1) throw std::invalid_argument("fit: shell_bins must be >= 1");
    for (const auto& [name, v] : cfg.n_basis_by_covariate)
        if (v < 4) throw std::invalid_argument("fit: n_basis override for '" + name + "' must be >= 4");
    for (const auto& [name, v] : cfg.shell_bins_by_covariate)
        if (v < 1) throw std::invalid_argument("fit: shell_bins override for '" + name + "' must be >= 1");
}

inline Schema make_schema(const Dataset& ds, const FitConfig& cfg) {
    Schema schema;
    schema.response_kind = ds.response.kind;
    schema.response_levels = ds.response.levels;
    for (const Covariate& cov : ds.covariates) {
        CovariateSchema cs;
        cs.name = cov.name;
        cs.kind = cov.kind();
        switch (cov.kind()) {
            case CovariateKind::numeric: break;
            case CovariateKind::nominal: cs.levels = cov.nominal().levels; break;
            case CovariateKind::functional: {
                cs.grid = cov.functional().grid;
                const auto it = cfg.n_basis_by_covariate.find(cov.name);
                cs.n_basis = it != cfg.n_basis_by_covariate.end() ? it->second : cfg.n_basis;
                break;
            }
            case CovariateKind::graph: {
                cs.graph_kind = cov.graph().kind;
                cs.n_vertices = cov.graph().n_vertices;
                const auto it = cfg.shell_bins_by_covariate.find(cov.name);
                cs.shell_bins = it != cfg.shell_bins_by_covariate.end() ? it->second : cfg.shell_bins;
                break;
            }
        }
        schema.covariates.push_back(std::move(cs));
    }
    return schema;
}

}  // namespace detail

inline EnergyTree fit(const Dataset& ds, const FitConfig& cfg) {
    detail::check_config(cfg);
    const std::vector<std::string> violations = validate(ds);
    if (!violations.empty()) {
        std::string msg = "fit: invalid dataset:";
        for (const std::string& v : violations) msg += "\n  " + v;
        throw DataError(msg);
    }

    EnergyTree tree;
    tree.config = cfg;
    tree.schema = detail::make_schema(ds, cfg);

    detail::FitDriver driver(ds, cfg, tree);
    const NodeView root = full_view(ds);
    driver.root_dy = response_distances(ds.response, root);
    driver.root_dx.resize(ds.covariates.size());
    for (std::size_t j = 0; j < ds.covariates.size(); ++j)
        driver.root_dx[j] = pairwise_matrix(ds.covariates[j], root);

    driver.build(root.rows, StreamKey{cfg.seed}.child(detail::kKeyRoot), 0);
    tree.root = 0;
    return tree;
}

// ------------------------------------------------------------------------
// Predict
// ------------------------------------------------------------------------

struct Predictions {
    ResponseKind kind = ResponseKind::numeric;
    std::vector<double> values;  // regression
    std::vector<int> codes;      // classification, model level codes
    std::vector<int> leaf_ids;
};

namespace detail {

// Checks that new data matches the fitted schema and re-encodes nominal
// columns into the model's level codes.
inline std::vector<Covariate> conform(const Schema& schema, const Dataset& data) {
    if (data.covariates.size() != schema.covariates.size())
        throw SchemaError("predict: expected " + std::to_string(schema.covariates.size()) +
                          " covariates, got " + std::to_string(data.covariates.size()));
    std::vector<Covariate> out;
    out.reserve(data.covariates.size());
    for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
        const CovariateSchema& cs = schema.covariates[j];
        const Covariate& cov = data.covariates[j];
        if (cov.name != cs.name)
            throw SchemaError("predict: covariate " + std::to_string(j) + " is '" + cov.name +
                              "', model expects '" + cs.name + "'");
        if (cov.kind() != cs.kind)
            throw SchemaError("predict: covariate '" + cov.name + "' has kind " +
                              to_string(cov.kind()) + ", model expects " + to_string(cs.kind));
        Covariate routed = cov;
        switch (cs.kind) {
            case CovariateKind::numeric: break;
            case CovariateKind::nominal: {
                std::map<std::string, int> lookup;
                for (std::size_t c = 0; c < cs.levels.size(); ++c)
                    lookup[cs.levels[c]] = static_cast<int>(c);
                NominalColumn recoded;
                recoded.levels = cs.levels;
                const NominalColumn& src = cov.nominal();
                recoded.codes.resize(src.codes.size());
                for (std::size_t i = 0; i < src.codes.size(); ++i) {
                    const std::string& name = src.levels[static_cast<std::size_t>(src.codes[i])];
                    const auto it = lookup.find(name);
                    if (it == lookup.end())
                        throw SchemaError("predict: covariate '" + cov.name + "', row " +
                                          std::to_string(i) + ": unknown level '" + name + "'");
                    recoded.codes[i] = it->second;
                }
                routed.payload = std::move(recoded);
                break;
            }
            case CovariateKind::functional: {
                const FunctionalColumn& c = cov.functional();
                if (c.grid.size() != cs.grid.size())
                    throw SchemaError("predict: covariate '" + cov.name + "': grid length " +
                                      std::to_string(c.grid.size()) + ", model expects " +
                                      std::to_string(cs.grid.size()));
                if (c.grid != cs.grid)
                    throw SchemaError("predict: covariate '" + cov.name +
                                      "': evaluation grid differs from the training grid");
                break;
            }
            case CovariateKind::graph: {
                const GraphColumn& g = cov.graph();
                if (g.kind != cs.graph_kind)
                    throw SchemaError("predict: covariate '" + cov.name + "': graph kind mismatch");
                if (g.n_vertices != cs.n_vertices)
                    throw SchemaError("predict: covariate '" + cov.name + "': graphs have " +
                                      std::to_string(g.n_vertices) + " vertices, model expects " +
                                      std::to_string(cs.n_vertices));
                break;
            }
        }
        out.push_back(std::move(routed));
    }
    return out;
}

}  // namespace detail

inline Predictions predict(const EnergyTree& tree, const Dataset& data) {
    const std::vector<std::string> violations = validate(data);
    if (!violations.empty()) throw DataError("predict: invalid dataset: " + violations.front());
    const std::vector<Covariate> routed = detail::conform(tree.schema, data);

    Predictions out;
    out.kind = tree.schema.response_kind;
    out.leaf_ids.resize(static_cast<std::size_t>(data.n));
    if (out.kind == ResponseKind::numeric)
        out.values.resize(static_cast<std::size_t>(data.n));
    else
        out.codes.resize(static_cast<std::size_t>(data.n));

    parallel_for(static_cast<std::size_t>(data.n), [&](std::size_t i) {
        int id = tree.root;
        for (;;) {
            const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
            if (node.is_leaf()) break;
            const int j = rule_covariate(*node.rule);
            const Side side = apply_rule(*node.rule, routed[static_cast<std::size_t>(j)],
                                         static_cast<int>(i));
            id = side == Side::left ? node.left : node.right;
        }
        const TreeNode& leaf = tree.nodes[static_cast<std::size_t>(id)];
        out.leaf_ids[i] = id;
        if (out.kind == ResponseKind::numeric)
            out.values[i] = leaf.mean;
        else
            out.codes[i] = leaf.modal_class;
    });
    return out;
}

// ------------------------------------------------------------------------
// Text rendering
// ------------------------------------------------------------------------

namespace detail {

inline std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string rule_summary(const EnergyTree& tree, const TreeNode& node) {
    const Schema& schema = tree.schema;
    const SplitRule& rule = *node.rule;
    std::string text;
    if (const auto* r = std::get_if<NumericThreshold>(&rule)) {
        text = schema.covariates[static_cast<std::size_t>(r->covariate)].name + " <= " +
               short_num(r->threshold);
    } else if (const auto* r = std::get_if<NominalSubset>(&rule)) {
        const CovariateSchema& cs = schema.covariates[static_cast<std::size_t>(r->covariate)];
        text = cs.name + " in {";
        for (std::size_t i = 0; i < r->subset.size(); ++i) {
            if (i > 0) text += ", ";
            text += cs.levels[static_cast<std::size_t>(r->subset[i])];
        }
        text += "}";
    } else if (const auto* r = std::get_if<ComponentThreshold>(&rule)) {
        text = schema.covariates[static_cast<std::size_t>(r->covariate)].name + "[component " +
               std::to_string(r->component + 1) + "] <= " + short_num(r->threshold);
    } else {
        const auto& mp = std::get<MedoidPair>(rule);
        text = schema.covariates[static_cast<std::size_t>(mp.covariate)].name + " nearer medoid[obs " +
               std::to_string(mp.c1_row) + "] than medoid[obs " + std::to_string(mp.c2_row) + "]";
    }
    if (node.split_p_value) text += " (p=" + short_num(*node.split_p_value) + ")";
    return text;
}

inline void render_node(const EnergyTree& tree, int id, int depth, std::string& out) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    out.append(static_cast<std::size_t>(2 * depth), ' ');
    out += "[" + std::to_string(node.id) + "] n=" + std::to_string(node.size);
    if (node.is_leaf()) {
        if (tree.schema.response_kind == ResponseKind::numeric) {
            out += " leaf: mean=" + short_num(node.mean);
        } else {
            out += " leaf: class=" +
                   tree.schema.response_levels[static_cast<std::size_t>(node.modal_class)] + " (";
            for (std::size_t c = 0; c < node.class_counts.size(); ++c) {
                if (c > 0) out += ", ";
                out += tree.schema.response_levels[c] + ":" + std::to_string(node.class_counts[c]);
            }
            out += ")";
        }
        out += "\n";
        return;
    }
    out += " split: " + rule_summary(tree, node) + "\n";
    render_node(tree, node.left, depth + 1, out);
    render_node(tree, node.right, depth + 1, out);
}

}  // namespace detail

inline std::string render_text(const EnergyTree& tree) {
    std::string out;
    detail::render_node(tree, tree.root, 0, out);
    return out;
}

}  // namespace etree

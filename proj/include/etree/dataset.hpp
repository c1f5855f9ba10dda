#pragma once
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "etree/error.hpp"
#include "etree/matrix.hpp"

namespace etree {

enum class ResponseKind { numeric, categorical };
enum class GraphKind { binary, weighted };
enum class CovariateKind { numeric, nominal, functional, graph };

inline const char* to_string(CovariateKind k) {
    switch (k) {
        case CovariateKind::numeric: return "numeric";
        case CovariateKind::nominal: return "nominal";
        case CovariateKind::functional: return "functional";
        case CovariateKind::graph: return "graph";
    }
    return "?";
}

struct Response {
    ResponseKind kind = ResponseKind::numeric;
    std::vector<double> values;        // regression
    std::vector<int> codes;            // classification, 0..K-1
    std::vector<std::string> levels;   // classification level names
    int n() const {
        return kind == ResponseKind::numeric ? static_cast<int>(values.size())
                                             : static_cast<int>(codes.size());
    }
};

struct NumericColumn {
    std::vector<double> values;
};

struct NominalColumn {
    std::vector<std::string> levels;  // encoded by first appearance
    std::vector<int> codes;
};

struct FunctionalColumn {
    std::vector<double> grid;  // shared, strictly increasing
    Matrix values;             // n x G
};

struct GraphColumn {
    GraphKind kind = GraphKind::binary;
    int n_vertices = 0;
    std::vector<Matrix> adjacency;  // n matrices, |V| x |V|
};

using CovariatePayload = std::variant<NumericColumn, NominalColumn, FunctionalColumn, GraphColumn>;

struct Covariate {
    std::string name;
    CovariatePayload payload;

    CovariateKind kind() const { return static_cast<CovariateKind>(payload.index()); }

    const NumericColumn& numeric() const { return expect<NumericColumn>(); }
    const NominalColumn& nominal() const { return expect<NominalColumn>(); }
    const FunctionalColumn& functional() const { return expect<FunctionalColumn>(); }
    const GraphColumn& graph() const { return expect<GraphColumn>(); }

    int n() const {
        switch (kind()) {
            case CovariateKind::numeric: return static_cast<int>(numeric().values.size());
            case CovariateKind::nominal: return static_cast<int>(nominal().codes.size());
            case CovariateKind::functional: return functional().values.rows();
            case CovariateKind::graph: return static_cast<int>(graph().adjacency.size());
        }
        return 0;
    }

private:
    template <class T>
    const T& expect() const {
        if (const T* p = std::get_if<T>(&payload)) return *p;
        throw SchemaError("covariate '" + name + "': payload is not " + to_string(kind()));
    }
};

struct Dataset {
    int n = 0;
    Response response;
    std::vector<Covariate> covariates;
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void validate_graph(const Covariate& cov, std::vector<std::string>& out) {
    const GraphColumn& g = cov.graph();
    for (std::size_t i = 0; i < g.adjacency.size(); ++i) {
        const Matrix& a = g.adjacency[i];
        const std::string where = "covariate '" + cov.name + "', observation " + std::to_string(i);
        if (a.rows() != g.n_vertices || a.cols() != g.n_vertices) {
            out.push_back(where + ": adjacency is " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + ", expected " + std::to_string(g.n_vertices));
            continue;
        }
        for (int u = 0; u < a.rows(); ++u) {
            if (a(u, u) != 0.0) {
                out.push_back(where + ": nonzero diagonal at vertex " + std::to_string(u));
                break;
            }
        }
        bool sym_ok = true, range_ok = true;
        for (int u = 0; u < a.rows() && (sym_ok || range_ok); ++u) {
            for (int v = 0; v < a.cols(); ++v) {
                const double w = a(u, v);
                if (range_ok && (!std::isfinite(w) || w < 0.0 ||
                                 (g.kind == GraphKind::binary && w != 0.0 && w != 1.0))) {
                    out.push_back(where + ": invalid edge weight at (" + std::to_string(u) + "," +
                                  std::to_string(v) + ")");
                    range_ok = false;
                }
                if (sym_ok && v > u && a(u, v) != a(v, u)) {
                    out.push_back(where + ": adjacency not symmetric at (" + std::to_string(u) +
                                  "," + std::to_string(v) + ")");
                    sym_ok = false;
                }
            }
        }
    }
}

}  // namespace detail

// Collects every invariant violation; an empty result means the dataset is
// valid. Violations are data, not failures, so nothing throws here.
inline std::vector<std::string> validate(const Dataset& ds) {
    std::vector<std::string> out;
    if (ds.n < 1) out.push_back("dataset: n must be >= 1, got " + std::to_string(ds.n));

    const Response& y = ds.response;
    if (y.n() != ds.n)
        out.push_back("response: length " + std::to_string(y.n()) + " != n = " + std::to_string(ds.n));
    if (y.kind == ResponseKind::numeric) {
        if (!detail::all_finite(y.values)) out.push_back("response: non-finite value");
    } else {
        const int K = static_cast<int>(y.levels.size());
        if (K < 2) out.push_back("response: categorical needs K >= 2 levels, got " + std::to_string(K));
        for (std::size_t i = 0; i < y.codes.size(); ++i)
            if (y.codes[i] < 0 || y.codes[i] >= K) {
                out.push_back("response: code out of range at row " + std::to_string(i));
                break;
            }
    }

    std::set<std::string> names;
    for (const Covariate& cov : ds.covariates) {
        if (!names.insert(cov.name).second)
            out.push_back("covariate '" + cov.name + "': duplicate name");
        if (cov.n() != ds.n) {
            out.push_back("covariate '" + cov.name + "': length " + std::to_string(cov.n()) +
                          " != n = " + std::to_string(ds.n));
            continue;
        }
        switch (cov.kind()) {
            case CovariateKind::numeric:
                if (!detail::all_finite(cov.numeric().values))
                    out.push_back("covariate '" + cov.name + "': non-finite value");
                break;
            case CovariateKind::nominal: {
                const NominalColumn& c = cov.nominal();
                const int K = static_cast<int>(c.levels.size());
                if (K < 1) out.push_back("covariate '" + cov.name + "': empty level table");
                for (std::size_t i = 0; i < c.codes.size(); ++i)
                    if (c.codes[i] < 0 || c.codes[i] >= K) {
                        out.push_back("covariate '" + cov.name + "': code out of range at row " +
                                      std::to_string(i));
                        break;
                    }
                break;
            }
            case CovariateKind::functional: {
                const FunctionalColumn& c = cov.functional();
                const int G = static_cast<int>(c.grid.size());
                if (G < 2) out.push_back("covariate '" + cov.name + "': grid needs >= 2 points");
                if (c.values.cols() != G)
                    out.push_back("covariate '" + cov.name + "': values have " +
                                  std::to_string(c.values.cols()) + " columns, grid has " +
                                  std::to_string(G));
                for (int i = 0; i + 1 < G; ++i)
                    if (!(c.grid[static_cast<std::size_t>(i)] < c.grid[static_cast<std::size_t>(i) + 1])) {
                        out.push_back("covariate '" + cov.name + "': grid not strictly increasing at index " +
                                      std::to_string(i));
                        break;
                    }
                if (!detail::all_finite(c.grid) || !detail::all_finite(c.values.data()))
                    out.push_back("covariate '" + cov.name + "': non-finite value");
                break;
            }
            case CovariateKind::graph:
                detail::validate_graph(cov, out);
                break;
        }
    }
    return out;
}

// Node-local view: observation i appears weights[i] times, ascending i then
// repetition order. Node size m = sum of weights.
struct NodeView {
    std::vector<int> rows;  // view position k -> dataset row
    int size() const { return static_cast<int>(rows.size()); }
};

inline NodeView subset_view(const Dataset& ds, std::span<const int> weights) {
    if (static_cast<int>(weights.size()) != ds.n)
        throw DataError("subset_view: weight vector length " + std::to_string(weights.size()) +
                        " != n = " + std::to_string(ds.n));
    NodeView view;
    for (int i = 0; i < ds.n; ++i) {
        const int w = weights[static_cast<std::size_t>(i)];
        if (w < 0)
            throw DataError("subset_view: negative weight at row " + std::to_string(i));
        for (int r = 0; r < w; ++r) view.rows.push_back(i);
    }
    return view;
}

inline NodeView full_view(const Dataset& ds) {
    NodeView view;
    view.rows.resize(static_cast<std::size_t>(ds.n));
    for (int i = 0; i < ds.n; ++i) view.rows[static_cast<std::size_t>(i)] = i;
    return view;
}

}  // namespace etree

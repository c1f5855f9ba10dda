#pragma once
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etree/error.hpp"
#include "etree/tree.hpp"

namespace etree {

inline constexpr const char* kModelFormat = "etree-model";
inline constexpr int kModelVersion = 1;

namespace detail {

using nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<int>(row.size()) != cols)
            throw DataError("model: ragged matrix payload");
        for (int c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

inline json meta_to_json(const ExpansionMeta& meta) {
    json j;
    if (const auto* b = std::get_if<BsplineMeta>(&meta)) {
        j["type"] = "bspline";
        j["n_basis"] = b->n_basis;
        j["t_min"] = b->t_min;
        j["t_max"] = b->t_max;
    } else if (const auto* k = std::get_if<KcoreMeta>(&meta)) {
        j["type"] = "kcore";
        j["n_vertices"] = k->n_vertices;
    } else {
        const auto& s = std::get<ShellBinsMeta>(meta);
        j["type"] = "score_bins";
        j["edges"] = s.edges;
    }
    return j;
}

inline ExpansionMeta meta_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "bspline")
        return BsplineMeta{j.at("n_basis").get<int>(), j.at("t_min").get<double>(),
                           j.at("t_max").get<double>()};
    if (type == "kcore") return KcoreMeta{j.at("n_vertices").get<int>()};
    if (type == "score_bins") return ShellBinsMeta{j.at("edges").get<std::vector<double>>()};
    throw DataError("model: unknown expansion type '" + type + "'");
}

inline json rule_to_json(const SplitRule& rule) {
    json j;
    if (const auto* r = std::get_if<NumericThreshold>(&rule)) {
        j["kind"] = "numeric_threshold";
        j["covariate"] = r->covariate;
        j["q"] = r->threshold;
    } else if (const auto* r = std::get_if<NominalSubset>(&rule)) {
        j["kind"] = "nominal_subset";
        j["covariate"] = r->covariate;
        j["subset"] = r->subset;
    } else if (const auto* r = std::get_if<ComponentThreshold>(&rule)) {
        j["kind"] = "component_threshold";
        j["covariate"] = r->covariate;
        j["component"] = r->component;
        j["q"] = r->threshold;
        j["expansion"] = meta_to_json(r->meta);
    } else {
        const auto& mp = std::get<MedoidPair>(rule);
        j["kind"] = "medoid_pair";
        j["covariate"] = mp.covariate;
        j["covariate_kind"] = to_string(mp.kind);
        j["c1_row"] = mp.c1_row;
        j["c2_row"] = mp.c2_row;
        if (mp.kind == CovariateKind::functional) {
            j["c1"] = {{"curve", mp.c1.curve}};
            j["c2"] = {{"curve", mp.c2.curve}};
        } else {
            j["c1"] = {{"adjacency", matrix_to_json(mp.c1.adjacency)}};
            j["c2"] = {{"adjacency", matrix_to_json(mp.c2.adjacency)}};
        }
    }
    return j;
}

inline SplitRule rule_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "numeric_threshold")
        return NumericThreshold{j.at("covariate").get<int>(), j.at("q").get<double>()};
    if (kind == "nominal_subset")
        return NominalSubset{j.at("covariate").get<int>(), j.at("subset").get<std::vector<int>>()};
    if (kind == "component_threshold")
        return ComponentThreshold{j.at("covariate").get<int>(), meta_from_json(j.at("expansion")),
                                  j.at("component").get<int>(), j.at("q").get<double>()};
    if (kind == "medoid_pair") {
        MedoidPair r;
        r.covariate = j.at("covariate").get<int>();
        const std::string ck = j.at("covariate_kind").get<std::string>();
        r.kind = ck == "functional" ? CovariateKind::functional : CovariateKind::graph;
        r.c1_row = j.at("c1_row").get<int>();
        r.c2_row = j.at("c2_row").get<int>();
        if (r.kind == CovariateKind::functional) {
            r.c1.curve = j.at("c1").at("curve").get<std::vector<double>>();
            r.c2.curve = j.at("c2").at("curve").get<std::vector<double>>();
        } else {
            r.c1.adjacency = matrix_from_json(j.at("c1").at("adjacency"));
            r.c2.adjacency = matrix_from_json(j.at("c2").at("adjacency"));
        }
        return r;
    }
    throw DataError("model: unknown rule kind '" + kind + "'");
}

inline json config_to_json(const FitConfig& cfg) {
    json j;
    j["alpha"] = cfg.alpha;
    j["min_bucket"] = cfg.min_bucket;
    j["n_permutations"] = cfg.n_permutations;
    j["split_method"] = to_string(cfg.split_method);
    j["n_basis"] = cfg.n_basis;
    j["shell_bins"] = cfg.shell_bins;
    j["n_basis_by_covariate"] = cfg.n_basis_by_covariate;
    j["shell_bins_by_covariate"] = cfg.shell_bins_by_covariate;
    j["seed"] = cfg.seed;
    j["max_depth"] = cfg.max_depth;
    return j;
}

inline FitConfig config_from_json(const json& j) {
    FitConfig cfg;
    cfg.alpha = j.at("alpha").get<double>();
    cfg.min_bucket = j.at("min_bucket").get<int>();
    cfg.n_permutations = j.at("n_permutations").get<int>();
    cfg.split_method = j.at("split_method").get<std::string>() == "clustering"
                           ? SplitMethod::clustering
                           : SplitMethod::fve;
    cfg.n_basis = j.at("n_basis").get<int>();
    cfg.shell_bins = j.at("shell_bins").get<int>();
    cfg.n_basis_by_covariate = j.at("n_basis_by_covariate").get<std::map<std::string, int>>();
    cfg.shell_bins_by_covariate = j.at("shell_bins_by_covariate").get<std::map<std::string, int>>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.max_depth = j.at("max_depth").get<int>();
    return cfg;
}

inline json schema_to_json(const Schema& schema) {
    json j;
    j["response_kind"] = schema.response_kind == ResponseKind::numeric ? "numeric" : "categorical";
    j["response_levels"] = schema.response_levels;
    json covs = json::array();
    for (const CovariateSchema& cs : schema.covariates) {
        json c;
        c["name"] = cs.name;
        c["kind"] = to_string(cs.kind);
        switch (cs.kind) {
            case CovariateKind::numeric: break;
            case CovariateKind::nominal: c["levels"] = cs.levels; break;
            case CovariateKind::functional:
                c["grid"] = cs.grid;
                c["n_basis"] = cs.n_basis;
                break;
            case CovariateKind::graph:
                c["graph_kind"] = cs.graph_kind == GraphKind::binary ? "binary" : "weighted";
                c["n_vertices"] = cs.n_vertices;
                c["shell_bins"] = cs.shell_bins;
                if (!cs.shell_bin_edges.empty()) c["shell_bin_edges"] = cs.shell_bin_edges;
                break;
        }
        covs.push_back(std::move(c));
    }
    j["covariates"] = std::move(covs);
    return j;
}

inline Schema schema_from_json(const json& j) {
    Schema schema;
    schema.response_kind = j.at("response_kind").get<std::string>() == "numeric"
                               ? ResponseKind::numeric
                               : ResponseKind::categorical;
    schema.response_levels = j.at("response_levels").get<std::vector<std::string>>();
    for (const json& c : j.at("covariates")) {
        CovariateSchema cs;
        cs.name = c.at("name").get<std::string>();
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "numeric") {
            cs.kind = CovariateKind::numeric;
        } else if (kind == "nominal") {
            cs.kind = CovariateKind::nominal;
            cs.levels = c.at("levels").get<std::vector<std::string>>();
        } else if (kind == "functional") {
            cs.kind = CovariateKind::functional;
            cs.grid = c.at("grid").get<std::vector<double>>();
            cs.n_basis = c.at("n_basis").get<int>();
        } else if (kind == "graph") {
            cs.kind = CovariateKind::graph;
            cs.graph_kind = c.at("graph_kind").get<std::string>() == "binary" ? GraphKind::binary
                                                                              : GraphKind::weighted;
            cs.n_vertices = c.at("n_vertices").get<int>();
            cs.shell_bins = c.at("shell_bins").get<int>();
            if (c.contains("shell_bin_edges"))
                cs.shell_bin_edges = c.at("shell_bin_edges").get<std::vector<double>>();
        } else {
            throw DataError("model: unknown covariate kind '" + kind + "'");
        }
        schema.covariates.push_back(std::move(cs));
    }
    return schema;
}

inline json node_to_json(const TreeNode& node) {
    json j;
    j["id"] = node.id;
    j["depth"] = node.depth;
    j["size"] = node.size;
    j["weights"] = node.weights;
    if (!node.p_raw.empty()) {
        j["p_raw"] = node.p_raw;
        j["p_adj"] = node.p_adj;
        j["selected"] = node.selected;
    }
    j["stop"] = to_string(node.stop);
    if (node.rule) {
        j["split"] = rule_to_json(*node.rule);
        if (node.split_p_value) j["split_p"] = *node.split_p_value;
        j["left"] = node.left;
        j["right"] = node.right;
    } else {
        json pred;
        if (!node.class_counts.empty()) {
            pred["counts"] = node.class_counts;
            pred["modal"] = node.modal_class;
        } else {
            pred["mean"] = node.mean;
        }
        j["prediction"] = std::move(pred);
    }
    return j;
}

inline TreeNode node_from_json(const json& j) {
    TreeNode node;
    node.id = j.at("id").get<int>();
    node.depth = j.at("depth").get<int>();
    node.size = j.at("size").get<int>();
    node.weights = j.at("weights").get<std::vector<int>>();
    if (j.contains("p_raw")) {
        node.p_raw = j.at("p_raw").get<std::vector<double>>();
        node.p_adj = j.at("p_adj").get<std::vector<double>>();
        node.selected = j.at("selected").get<int>();
    }
    const std::string stop = j.at("stop").get<std::string>();
    for (StopReason r : {StopReason::not_stopped, StopReason::alpha, StopReason::min_size,
                         StopReason::pure, StopReason::max_depth, StopReason::no_valid_split,
                         StopReason::no_covariates})
        if (stop == to_string(r)) node.stop = r;
    if (j.contains("split")) {
        node.rule = rule_from_json(j.at("split"));
        if (j.contains("split_p")) node.split_p_value = j.at("split_p").get<double>();
        node.left = j.at("left").get<int>();
        node.right = j.at("right").get<int>();
    } else {
        const json& pred = j.at("prediction");
        if (pred.contains("counts")) {
            node.class_counts = pred.at("counts").get<std::vector<int>>();
            node.modal_class = pred.at("modal").get<int>();
        } else {
            node.mean = pred.at("mean").get<double>();
        }
    }
    return node;
}

}  // namespace detail

inline std::string tree_to_string(const EnergyTree& tree) {
    detail::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["config"] = detail::config_to_json(tree.config);
    j["schema"] = detail::schema_to_json(tree.schema);
    j["root"] = tree.root;
    detail::json nodes = detail::json::array();
    for (const TreeNode& n : tree.nodes) nodes.push_back(detail::node_to_json(n));
    j["nodes"] = std::move(nodes);
    return j.dump(2) + "\n";
}

inline EnergyTree tree_from_string(const std::string& text) {
    detail::json j;
    try {
        j = detail::json::parse(text);
    } catch (const detail::json::exception& e) {
        throw DataError(std::string("model: corrupt payload: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw DataError("model: not an energy-tree model file");
        const int version = j.at("version").get<int>();
        if (version != kModelVersion)
            throw DataError("model: unsupported version " + std::to_string(version) +
                            " (this build reads version " + std::to_string(kModelVersion) + ")");
        EnergyTree tree;
        tree.config = detail::config_from_json(j.at("config"));
        tree.schema = detail::schema_from_json(j.at("schema"));
        tree.root = j.at("root").get<int>();
        for (const detail::json& n : j.at("nodes"))
            tree.nodes.push_back(detail::node_from_json(n));
        if (tree.nodes.empty() || tree.root != 0)
            throw DataError("model: empty or malformed node table");
        return tree;
    } catch (const detail::json::exception& e) {
        throw DataError(std::string("model: corrupt payload: ") + e.what());
    }
}

inline void save_tree(const EnergyTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << tree_to_string(tree);
    if (!out.good()) throw std::runtime_error("failed writing model to '" + path + "'");
}

inline EnergyTree load_tree(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return tree_from_string(text);
}

}  // namespace etree

#pragma once
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "etree/dataset.hpp"
#include "etree/error.hpp"

namespace etree {

namespace csv {

inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::string_view f = line.substr(start, i - start);
            while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
            while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
            out.push_back(f);
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(std::string_view field, const std::string& where) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw DataError(where + ": cannot parse '" + std::string(field) + "' as a number");
    return v;
}

inline int parse_int(std::string_view field, const std::string& where) {
    int v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw DataError(where + ": cannot parse '" + std::string(field) + "' as an integer");
    return v;
}

}  // namespace csv

namespace detail {

using nlohmann::json;

inline std::vector<double> read_numeric_column(const std::filesystem::path& path, int n,
                                               const std::string& what) {
    const std::vector<std::string> lines = csv::read_lines(path);
    if (static_cast<int>(lines.size()) != n)
        throw DataError(what + ": file '" + path.string() + "' has " +
                        std::to_string(lines.size()) + " rows, expected " + std::to_string(n));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            csv::parse_double(lines[static_cast<std::size_t>(i)], what + ", row " + std::to_string(i));
    return out;
}

inline NominalColumn read_nominal_column(const std::filesystem::path& path, int n,
                                         const std::string& what) {
    const std::vector<std::string> lines = csv::read_lines(path);
    if (static_cast<int>(lines.size()) != n)
        throw DataError(what + ": file '" + path.string() + "' has " +
                        std::to_string(lines.size()) + " rows, expected " + std::to_string(n));
    NominalColumn col;
    std::map<std::string, int> codes;  // levels encoded by first appearance
    for (int i = 0; i < n; ++i) {
        const std::string& name = lines[static_cast<std::size_t>(i)];
        if (name.empty()) throw DataError(what + ", row " + std::to_string(i) + ": empty level name");
        auto [it, inserted] = codes.try_emplace(name, static_cast<int>(col.levels.size()));
        if (inserted) col.levels.push_back(name);
        col.codes.push_back(it->second);
    }
    return col;
}

inline Matrix read_matrix(const std::filesystem::path& path, int rows, int cols,
                          const std::string& what) {
    const std::vector<std::string> lines = csv::read_lines(path);
    if (static_cast<int>(lines.size()) != rows)
        throw DataError(what + ": file '" + path.string() + "' has " +
                        std::to_string(lines.size()) + " rows, expected " + std::to_string(rows));
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const auto fields = csv::split_fields(lines[static_cast<std::size_t>(r)]);
        if (static_cast<int>(fields.size()) != cols)
            throw DataError(what + ", row " + std::to_string(r) + ": has " +
                            std::to_string(fields.size()) + " columns, expected " + std::to_string(cols));
        for (int c = 0; c < cols; ++c)
            m(r, c) = csv::parse_double(fields[static_cast<std::size_t>(c)],
                                        what + ", row " + std::to_string(r));
    }
    return m;
}

inline GraphColumn read_graph_edges(const std::filesystem::path& path, int n, int n_vertices,
                                    GraphKind kind, const std::string& what) {
    GraphColumn g;
    g.kind = kind;
    g.n_vertices = n_vertices;
    g.adjacency.assign(static_cast<std::size_t>(n), Matrix(n_vertices, n_vertices));
    const std::vector<std::string> lines = csv::read_lines(path);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const std::string where = what + ", edge row " + std::to_string(r);
        const auto fields = csv::split_fields(lines[r]);
        if (fields.size() != 4)
            throw DataError(where + ": expected 4 columns (obs_index,u,v,weight)");
        const int obs = csv::parse_int(fields[0], where);
        const int u = csv::parse_int(fields[1], where);
        const int v = csv::parse_int(fields[2], where);
        const double w = csv::parse_double(fields[3], where);
        if (obs < 0 || obs >= n) throw DataError(where + ": obs_index out of range");
        if (u < 0 || u >= n_vertices || v < 0 || v >= n_vertices)
            throw DataError(where + ": vertex index out of range");
        if (u == v && w != 0.0) throw DataError(where + ": self-loop with nonzero weight");
        Matrix& a = g.adjacency[static_cast<std::size_t>(obs)];
        a(u, v) = w;
        a(v, u) = w;
    }
    return g;
}

}  // namespace detail

// Loads a dataset from a JSON manifest; data file paths resolve relative to
// the manifest's directory. The result always passes validate().
inline Dataset load_dataset(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const fs::path mpath(manifest_path);
    std::ifstream in(mpath);
    if (!in) throw DataError("cannot open manifest '" + manifest_path + "'");
    detail::json manifest;
    try {
        manifest = detail::json::parse(in);
    } catch (const detail::json::exception& e) {
        throw DataError("manifest '" + manifest_path + "': invalid JSON: " + e.what());
    }
    const fs::path base = mpath.has_parent_path() ? mpath.parent_path() : fs::path(".");

    Dataset ds;
    try {
        ds.n = manifest.at("n").get<int>();
        if (ds.n < 1) throw DataError("manifest: n must be >= 1");

        const detail::json& resp = manifest.at("response");
        const std::string rkind = resp.at("kind").get<std::string>();
        const fs::path rfile = base / resp.at("file").get<std::string>();
        if (rkind == "numeric") {
            ds.response.kind = ResponseKind::numeric;
            ds.response.values = detail::read_numeric_column(rfile, ds.n, "response");
        } else if (rkind == "categorical") {
            ds.response.kind = ResponseKind::categorical;
            NominalColumn col = detail::read_nominal_column(rfile, ds.n, "response");
            ds.response.levels = std::move(col.levels);
            ds.response.codes = std::move(col.codes);
        } else {
            throw DataError("manifest: unknown response kind '" + rkind + "'");
        }

        for (const detail::json& c : manifest.at("covariates")) {
            Covariate cov;
            cov.name = c.at("name").get<std::string>();
            const std::string kind = c.at("kind").get<std::string>();
            const std::string what = "covariate '" + cov.name + "'";
            if (kind == "numeric") {
                cov.payload = NumericColumn{
                    detail::read_numeric_column(base / c.at("file").get<std::string>(), ds.n, what)};
            } else if (kind == "nominal") {
                cov.payload =
                    detail::read_nominal_column(base / c.at("file").get<std::string>(), ds.n, what);
            } else if (kind == "functional") {
                FunctionalColumn col;
                const fs::path gfile = base / c.at("grid_file").get<std::string>();
                const std::vector<std::string> glines = csv::read_lines(gfile);
                if (glines.size() != 1)
                    throw DataError(what + ": grid file must hold exactly one row");
                for (const auto f : csv::split_fields(glines[0]))
                    col.grid.push_back(csv::parse_double(f, what + " grid"));
                col.values = detail::read_matrix(base / c.at("values_file").get<std::string>(), ds.n,
                                                 static_cast<int>(col.grid.size()), what);
                cov.payload = std::move(col);
            } else if (kind == "graph") {
                const std::string gk = c.at("graph_kind").get<std::string>();
                if (gk != "binary" && gk != "weighted")
                    throw DataError(what + ": unknown graph_kind '" + gk + "'");
                const GraphKind gkind = gk == "binary" ? GraphKind::binary : GraphKind::weighted;
                if (c.contains("files")) {
                    const auto files = c.at("files").get<std::vector<std::string>>();
                    if (static_cast<int>(files.size()) != ds.n)
                        throw DataError(what + ": expected " + std::to_string(ds.n) +
                                        " adjacency files, got " + std::to_string(files.size()));
                    GraphColumn g;
                    g.kind = gkind;
                    for (int i = 0; i < ds.n; ++i) {
                        const std::vector<std::string> lines = csv::read_lines(base / files[static_cast<std::size_t>(i)]);
                        const int V = static_cast<int>(lines.size());
                        if (i == 0) g.n_vertices = V;
                        Matrix a = detail::read_matrix(base / files[static_cast<std::size_t>(i)], V, V,
                                                       what + ", observation " + std::to_string(i));
                        g.adjacency.push_back(std::move(a));
                    }
                    cov.payload = std::move(g);
                } else {
                    cov.payload = detail::read_graph_edges(
                        base / c.at("edges_file").get<std::string>(), ds.n,
                        c.at("n_vertices").get<int>(), gkind, what);
                }
            } else {
                throw DataError(what + ": unknown kind '" + kind + "'");
            }
            ds.covariates.push_back(std::move(cov));
        }
    } catch (const detail::json::exception& e) {
        throw DataError("manifest '" + manifest_path + "': " + e.what());
    }

    const std::vector<std::string> violations = validate(ds);
    if (!violations.empty()) {
        std::string msg = "manifest '" + manifest_path + "': invalid data:";
        for (const std::string& v : violations) msg += "\n  " + v;
        throw DataError(msg);
    }
    return ds;
}

// Writes a dataset as manifest + CSV files under dir; returns the manifest
// path. Doubles are written in shortest round-trip form, so load(save(ds))
// reproduces every value bit-exactly.
inline std::string save_dataset(const Dataset& ds, const std::string& dir,
                                const std::string& base_name = "data") {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    detail::json manifest;
    manifest["n"] = ds.n;

    auto write_lines = [](const fs::path& path, const std::vector<std::string>& lines) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        for (const std::string& l : lines) out << l << "\n";
    };

    {
        std::vector<std::string> lines;
        if (ds.response.kind == ResponseKind::numeric) {
            for (double v : ds.response.values) lines.push_back(csv::format_double(v));
        } else {
            for (int c : ds.response.codes)
                lines.push_back(ds.response.levels[static_cast<std::size_t>(c)]);
        }
        const std::string fname = base_name + "_response.csv";
        write_lines(base / fname, lines);
        manifest["response"] = {
            {"kind", ds.response.kind == ResponseKind::numeric ? "numeric" : "categorical"},
            {"file", fname}};
    }

    detail::json covs = detail::json::array();
    for (std::size_t j = 0; j < ds.covariates.size(); ++j) {
        const Covariate& cov = ds.covariates[j];
        const std::string stem = base_name + "_x" + std::to_string(j);
        detail::json c;
        c["name"] = cov.name;
        switch (cov.kind()) {
            case CovariateKind::numeric: {
                std::vector<std::string> lines;
                for (double v : cov.numeric().values) lines.push_back(csv::format_double(v));
                write_lines(base / (stem + ".csv"), lines);
                c["kind"] = "numeric";
                c["file"] = stem + ".csv";
                break;
            }
            case CovariateKind::nominal: {
                std::vector<std::string> lines;
                for (int code : cov.nominal().codes)
                    lines.push_back(cov.nominal().levels[static_cast<std::size_t>(code)]);
                write_lines(base / (stem + ".csv"), lines);
                c["kind"] = "nominal";
                c["file"] = stem + ".csv";
                break;
            }
            case CovariateKind::functional: {
                const FunctionalColumn& col = cov.functional();
                std::string grid_line;
                for (std::size_t i = 0; i < col.grid.size(); ++i) {
                    if (i > 0) grid_line += ",";
                    grid_line += csv::format_double(col.grid[i]);
                }
                write_lines(base / (stem + "_grid.csv"), {grid_line});
                std::vector<std::string> lines;
                for (int r = 0; r < col.values.rows(); ++r) {
                    std::string line;
                    for (int q = 0; q < col.values.cols(); ++q) {
                        if (q > 0) line += ",";
                        line += csv::format_double(col.values(r, q));
                    }
                    lines.push_back(std::move(line));
                }
                write_lines(base / (stem + "_values.csv"), lines);
                c["kind"] = "functional";
                c["grid_file"] = stem + "_grid.csv";
                c["values_file"] = stem + "_values.csv";
                break;
            }
            case CovariateKind::graph: {
                const GraphColumn& g = cov.graph();
                std::vector<std::string> lines;
                for (int i = 0; i < static_cast<int>(g.adjacency.size()); ++i) {
                    const Matrix& a = g.adjacency[static_cast<std::size_t>(i)];
                    for (int u = 0; u < a.rows(); ++u)
                        for (int v = u + 1; v < a.cols(); ++v)
                            if (a(u, v) != 0.0)
                                lines.push_back(std::to_string(i) + "," + std::to_string(u) + "," +
                                                std::to_string(v) + "," + csv::format_double(a(u, v)));
                }
                write_lines(base / (stem + "_edges.csv"), lines);
                c["kind"] = "graph";
                c["graph_kind"] = g.kind == GraphKind::binary ? "binary" : "weighted";
                c["edges_file"] = stem + "_edges.csv";
                c["n_vertices"] = g.n_vertices;
                break;
            }
        }
        covs.push_back(std::move(c));
    }
    manifest["covariates"] = std::move(covs);

    const fs::path mpath = base / (base_name + ".json");
    std::ofstream out(mpath, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + mpath.string() + "' for writing");
    out << manifest.dump(2) << "\n";
    return mpath.string();
}

}  // namespace etree

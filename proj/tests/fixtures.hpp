// Shared dataset builders for the unit and acceptance suites.
#pragma once
#include <random>
#include <string>
#include <vector>

#include "etree/dataset.hpp"
#include "etree/rng.hpp"
#include "etree/simulate.hpp"

namespace fixtures {

// Mixed-type dataset with a numeric response tied to x1 and to the functional
// covariate's level, so fits produce a few real splits.
inline etree::Dataset mixed_regression(int n, std::uint64_t seed, bool with_signal = true,
                                       int grid_points = 12, int vertices = 10) {
    etree::CovariateGenSpec spec;
    spec.grid_points = grid_points;
    spec.n_vertices = vertices;
    std::vector<double> gp_mean(static_cast<std::size_t>(n), 0.0);
    if (with_signal)
        for (int i = n / 2; i < n; ++i) gp_mean[static_cast<std::size_t>(i)] = 1.0;
    spec.gp_mean = gp_mean;
    spec.edge_prob = {0.3};
    const etree::StreamKey key{etree::mix64(seed)};
    etree::Dataset ds;
    ds.n = n;
    ds.covariates = etree::gen_covariates(n, spec, key.child(1));

    std::mt19937_64 g = key.child(2).engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    ds.response.kind = etree::ResponseKind::numeric;
    ds.response.values.resize(static_cast<std::size_t>(n));
    const std::vector<double>& x1 = ds.covariates[0].numeric().values;
    for (int i = 0; i < n; ++i) {
        double y = 0.3 * normal(g);
        if (with_signal) y += 2.0 * x1[static_cast<std::size_t>(i)] + (i >= n / 2 ? 1.5 : 0.0);
        ds.response.values[static_cast<std::size_t>(i)] = y;
    }
    return ds;
}

// Two-class dataset driven by a single numeric covariate.
inline etree::Dataset step_classification(int n, std::uint64_t seed) {
    std::mt19937_64 g = etree::StreamKey{etree::mix64(seed)}.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    etree::Dataset ds;
    ds.n = n;
    etree::NumericColumn x;
    x.values.resize(static_cast<std::size_t>(n));
    ds.response.kind = etree::ResponseKind::categorical;
    ds.response.levels = {"lo", "hi"};
    ds.response.codes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double v = unif(g);
        x.values[static_cast<std::size_t>(i)] = v;
        ds.response.codes[static_cast<std::size_t>(i)] = v > 0.5 ? 1 : 0;
    }
    ds.covariates.push_back(etree::Covariate{"x1", std::move(x)});
    return ds;
}

// Regression dataset with one weighted-graph covariate whose edge weights
// scale with the response group, plus a numeric noise covariate.
inline etree::Dataset weighted_graph_regression(int n, std::uint64_t seed, int vertices = 8) {
    std::mt19937_64 g = etree::StreamKey{etree::mix64(seed)}.engine();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal;
    etree::Dataset ds;
    ds.n = n;
    ds.response.kind = etree::ResponseKind::numeric;
    etree::NumericColumn noise;
    etree::GraphColumn graphs;
    graphs.kind = etree::GraphKind::weighted;
    graphs.n_vertices = vertices;
    for (int i = 0; i < n; ++i) {
        const bool heavy = i >= n / 2;
        etree::Matrix a(vertices, vertices);
        for (int u = 0; u < vertices; ++u)
            for (int v = u + 1; v < vertices; ++v)
                if (unif(g) < 0.5) {
                    const double w = (heavy ? 3.0 : 1.0) * (0.5 + unif(g));
                    a(u, v) = w;
                    a(v, u) = w;
                }
        graphs.adjacency.push_back(std::move(a));
        noise.values.push_back(unif(g));
        ds.response.values.push_back((heavy ? 2.0 : 0.0) + 0.3 * normal(g));
    }
    ds.covariates.push_back(etree::Covariate{"noise", std::move(noise)});
    ds.covariates.push_back(etree::Covariate{"net", std::move(graphs)});
    return ds;
}

inline etree::Matrix complete_graph(int vertices, double weight = 1.0) {
    etree::Matrix a(vertices, vertices);
    for (int u = 0; u < vertices; ++u)
        for (int v = 0; v < vertices; ++v)
            if (u != v) a(u, v) = weight;
    return a;
}

inline etree::Matrix path_graph(int vertices) {
    etree::Matrix a(vertices, vertices);
    for (int u = 0; u + 1 < vertices; ++u) {
        a(u, u + 1) = 1.0;
        a(u + 1, u) = 1.0;
    }
    return a;
}

}  // namespace fixtures

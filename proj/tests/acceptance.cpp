// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Heavier scenarios run at desk scale (n=100, G=20, V=30,
// B=199, R=1000) and parallelize across replications.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "etree/etree.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace etree;

namespace {

struct Criterion {
    std::string name;
    std::function<bool(std::string&)> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimulationConfig desk_config() {
    SimulationConfig cfg;  // G=100, V=30, B=199 desk defaults
    cfg.alpha = 0.05;
    return cfg;
}

// --- criterion 1 ---------------------------------------------------------
bool dcov_oracle_equivalence(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 g(424242);
    std::uniform_int_distribution<int> size(2, 25);
    double worst = 0.0;
    for (int instance = 0; instance < 200; ++instance) {
        const int m = size(g);
        const DistanceMatrix dx = oracle::random_distances_any_type(instance, m, g);
        const DistanceMatrix dy = oracle::random_distances_any_type(instance + 2, m, g);
        const double direct = dcov_squared(dx, dy);
        const double reference = oracle::dcov_squared(dx, dy);
        worst = std::max(worst, std::abs(direct - reference));
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream os;
    os << "max |diff| = " << worst << " over 200 instances, " << elapsed << " s";
    detail = os.str();
    return worst <= 1e-10 && elapsed < 5.0;
}

// --- criteria 2 and 4 ----------------------------------------------------
bool type_one_error(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    // exactly the stated configuration: n=100, G=20, V=30, B=199, R=1000
    SimulationConfig cfg = desk_config();
    cfg.grid_points = 20;
    const std::vector<double> mu = {0.0};
    const PowerResult fun =
        scenario_power(AssociatedCovariate::functional_cov, mu, 1000, 100, cfg, 2024);
    const PowerResult gph =
        scenario_power(AssociatedCovariate::graph_cov, mu, 1000, 100, cfg, 2025);
    std::ostringstream os;
    os << "root-split frequency at mu=0: functional = " << fun.points[0].power
       << ", graph = " << gph.points[0].power << " (limit 0.08), " << seconds_since(t0) << " s";
    detail = os.str();
    return fun.points[0].power <= 0.08 && gph.points[0].power <= 0.08;
}

bool power_and_recovery(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> mu = {1.0};
    const PowerResult fun =
        scenario_power(AssociatedCovariate::functional_cov, mu, 1000, 100, desk_config(), 2026);
    const PowerResult gph =
        scenario_power(AssociatedCovariate::graph_cov, mu, 1000, 100, desk_config(), 2027);
    std::ostringstream os;
    os << "mu=1: functional power = " << fun.points[0].power
       << " cond = " << fun.points[0].conditional << "; graph power = " << gph.points[0].power
       << " cond = " << gph.points[0].conditional << ", " << seconds_since(t0) << " s";
    detail = os.str();
    return fun.points[0].power >= 0.9 && fun.points[0].conditional >= 0.8 &&
           gph.points[0].power >= 0.9 && gph.points[0].conditional >= 0.8;
}

// --- criterion 3 ---------------------------------------------------------
bool unbiasedness(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const UnbiasednessResult res = scenario_unbiasedness(1000, 100, desk_config(), 7);
    int total = 0;
    double freq_sum = 0.0;
    bool in_band = true;
    std::ostringstream os;
    os << "frequencies:";
    for (const CovariateFrequency& f : res.frequencies) {
        total += f.count;
        freq_sum += f.estimate;
        in_band = in_band && f.estimate >= 0.21 && f.estimate <= 0.29;
        os << " " << f.name << "=" << f.estimate;
    }
    os << ", sum=" << freq_sum << ", " << seconds_since(t0) << " s";
    detail = os.str();
    return in_band && total == res.replications && std::abs(freq_sum - 1.0) <= 1e-12;
}

// --- criterion 5 ---------------------------------------------------------
bool bh_correction(std::string& detail) {
    const std::vector<double> adj = bh_adjust({0.01, 0.04, 0.03, 0.005});
    const std::vector<double> expected = {0.02, 0.04, 0.04, 0.02};
    for (std::size_t i = 0; i < 4; ++i)
        if (std::abs(adj[i] - expected[i]) > 1e-15) {
            detail = "worked example mismatch";
            return false;
        }
    std::mt19937_64 g(5150);
    std::uniform_real_distribution<double> unif(1e-9, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        std::vector<double> p(1 + g() % 10);
        for (double& v : p) v = unif(g);
        const std::vector<double> a = bh_adjust(p);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (a[i] < p[i] || a[i] > 1.0) {
                detail = "dominance violated";
                return false;
            }
            for (std::size_t j = 0; j < p.size(); ++j)
                if (p[i] <= p[j] && a[i] > a[j] + 1e-15) {
                    detail = "monotonicity violated";
                    return false;
                }
        }
        std::vector<int> perm(p.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), g);
        std::vector<double> permuted(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) permuted[i] = p[perm[i]];
        const std::vector<double> ap = bh_adjust(permuted);
        for (std::size_t i = 0; i < p.size(); ++i)
            if (ap[i] != a[perm[i]]) {
                detail = "permutation equivariance violated";
                return false;
            }
    }
    detail = "worked example exact; 1000 random vectors pass";
    return true;
}

// --- criterion 6 ---------------------------------------------------------
bool pam_optimality(std::string& detail) {
    std::mt19937_64 g(616);
    std::uniform_int_distribution<int> size(2, 10);
    int checked = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const DistanceMatrix d = oracle::random_distances_any_type(rep, size(g), g);
        bool all_zero = true;
        for (double v : d.d)
            if (v > 0.0) all_zero = false;
        if (all_zero) continue;
        const PamResult r = pam_two_medoids(d);
        worst = std::max(worst, std::abs(r.objective - oracle::pam_exhaustive_objective(d)));
        ++checked;
    }
    std::ostringstream os;
    os << checked << " matrices, max |objective gap| = " << worst;
    detail = os.str();
    return worst <= 1e-12;
}

// --- criterion 7 ---------------------------------------------------------
bool expansion_checks(std::string& detail) {
    const std::vector<double> k5 =
        shell_distribution(k_core_shell_indices(fixtures::complete_graph(5)));
    if (k5 != std::vector<double>{0, 0, 0, 0, 5}) {
        detail = "K5 shell distribution wrong";
        return false;
    }
    const std::vector<double> p4 =
        shell_distribution(k_core_shell_indices(fixtures::path_graph(4)));
    if (p4 != std::vector<double>{0, 4, 0, 0}) {
        detail = "P4 shell distribution wrong";
        return false;
    }

    std::vector<double> grid(100);
    for (int t = 0; t < 100; ++t) grid[t] = t / 99.0;
    Matrix curves(2, 100);
    for (int t = 0; t < 100; ++t) {
        curves(0, t) = std::sin(2.0 * std::numbers::pi * grid[t]);
        curves(1, t) = 7.0;
    }
    const ComponentMatrix cm = bspline_coefficients(curves, grid, 10);
    const BsplineBasis basis(0.0, 1.0, 10);
    double sq = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> phi = basis.evaluate(grid[t]);
        double v = 0.0;
        for (int s = 0; s < 10; ++s) v += cm.values(0, s) * phi[s];
        sq += (v - curves(0, t)) * (v - curves(0, t));
    }
    const double rmse = std::sqrt(sq / 100.0);
    double constant_err = 0.0;
    for (int s = 0; s < 10; ++s) constant_err = std::max(constant_err, std::abs(cm.values(1, s) - 7.0));
    std::ostringstream os;
    os << "sin reconstruction RMSE = " << rmse << ", constant coefficient error = " << constant_err;
    detail = os.str();
    return rmse < 1e-2 && constant_err <= 1e-10;
}

// --- criterion 8 ---------------------------------------------------------
void collect_partitions(const EnergyTree& tree, int id, const std::string& path,
                        std::map<std::string, std::vector<int>>& out) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    out[path] = node.weights;
    if (node.is_leaf()) return;
    collect_partitions(tree, node.left, path + "L", out);
    collect_partitions(tree, node.right, path + "R", out);
}

bool determinism_and_invariance(std::string& detail) {
    FitConfig cfg;
    cfg.alpha = 0.5;
    cfg.min_bucket = 5;
    cfg.n_permutations = 199;
    cfg.n_basis = 6;
    cfg.seed = 88;

    const Dataset ds = fixtures::mixed_regression(60, 808, true, 12, 10);
    set_worker_count(1);
    const std::string bytes_one = tree_to_string(fit(ds, cfg));
    set_worker_count(8);
    const std::string bytes_eight = tree_to_string(fit(ds, cfg));
    set_worker_count(0);
    if (bytes_one != bytes_eight) {
        detail = "models differ between 1 and 8 workers";
        return false;
    }

    std::map<std::string, std::vector<int>> base, scaled;
    collect_partitions(fit(ds, cfg), 0, "", base);
    Dataset ds_scaled = ds;
    for (double& v : std::get<NumericColumn>(ds_scaled.covariates[0].payload).values) v *= 3.7;
    collect_partitions(fit(ds_scaled, cfg), 0, "", scaled);
    if (base != scaled) {
        detail = "numeric scaling changed a node partition";
        return false;
    }

    // relabeling the nominal covariate's levels must not move any p-value
    Dataset ds_relabeled = ds;
    {
        NominalColumn col = ds.covariates[1].nominal();
        NominalColumn swapped;
        swapped.levels = {col.levels[1], col.levels[0]};
        swapped.codes.resize(col.codes.size());
        for (std::size_t i = 0; i < col.codes.size(); ++i)
            swapped.codes[i] = col.codes[i] == 0 ? 1 : 0;
        ds_relabeled.covariates[1] = Covariate{ds.covariates[1].name, std::move(swapped)};
    }
    const EnergyTree t1 = fit(ds, cfg);
    const EnergyTree t2 = fit(ds_relabeled, cfg);
    if (t1.nodes.size() != t2.nodes.size()) {
        detail = "relabeling changed the tree shape";
        return false;
    }
    for (std::size_t i = 0; i < t1.nodes.size(); ++i)
        if (t1.nodes[i].p_raw != t2.nodes[i].p_raw) {
            detail = "relabeling moved a p-value";
            return false;
        }
    detail = "byte-identical models across worker counts; partitions and p-values invariant";
    return true;
}

// --- criterion 9 ---------------------------------------------------------
bool ci_arithmetic(std::string& detail) {
    const Interval ci = binomial_ci(0.25, 10000);
    std::ostringstream os;
    os << "binomial_ci(0.25, 10000) = (" << ci.lo << ", " << ci.hi << ")";
    detail = os.str();
    return std::abs(ci.lo - 0.2415) < 5e-5 && std::abs(ci.hi - 0.2585) < 5e-5;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"dcov oracle equivalence (200 instances, 1e-10)", dcov_oracle_equivalence},
        {"type-I error at desk scale (<= 0.08, functional & graph)", type_one_error},
        {"unbiasedness at desk scale (each frequency in [0.21, 0.29])", unbiasedness},
        {"power and recovery at mu=1 (power >= 0.9, conditional >= 0.8)", power_and_recovery},
        {"Benjamini-Hochberg worked example and properties", bh_correction},
        {"PAM matches the exhaustive optimum for m <= 10", pam_optimality},
        {"expansion checks (K5, P4, B-spline reconstruction)", expansion_checks},
        {"determinism and invariance (workers, scaling, relabeling)", determinism_and_invariance},
        {"binomial CI reproduces the reference interval", ci_arithmetic},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("criterion %zu %s %s: %s\n", i + 1, ok ? "PASS" : "FAIL",
                    criteria[i].name.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    std::printf("ACCEPTANCE: %zu/%zu criteria passed\n", criteria.size() - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}

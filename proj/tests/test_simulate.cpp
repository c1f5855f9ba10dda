#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "etree/simulate.hpp"

using namespace etree;

namespace {

SimulationConfig tiny_config() {
    SimulationConfig cfg;
    cfg.grid_points = 8;
    cfg.n_vertices = 10;
    cfg.n_permutations = 99;
    return cfg;
}

}  // namespace

TEST_CASE("gen_covariates shapes and parameters", "[simulate]") {
    CovariateGenSpec spec;
    spec.grid_points = 100;
    spec.n_vertices = 100;
    spec.edge_prob = {0.2};
    const std::vector<Covariate> covs = gen_covariates(12, spec, StreamKey{3});
    REQUIRE(covs.size() == 4);
    CHECK(covs[0].numeric().values.size() == 12);
    CHECK(covs[1].nominal().codes.size() == 12);
    CHECK(covs[2].functional().values.rows() == 12);
    CHECK(covs[2].functional().values.cols() == 100);
    CHECK(covs[3].graph().n_vertices == 100);
    CHECK(covs[3].graph().adjacency.size() == 12);

    SECTION("zero connection probability gives empty graphs") {
        spec.edge_prob = {0.0};
        const std::vector<Covariate> empty = gen_covariates(3, spec, StreamKey{4});
        for (const Matrix& a : empty[3].graph().adjacency)
            for (double v : a.data()) CHECK(v == 0.0);
    }
    SECTION("invalid probability is rejected") {
        spec.edge_prob = {1.5};
        CHECK_THROWS_AS(gen_covariates(3, spec, StreamKey{5}), DataError);
    }
    SECTION("Gaussian-process mean shifts the sample mean") {
        spec.edge_prob = {0.2};
        spec.gp_mean = {0.5};
        spec.grid_points = 50;
        const std::vector<Covariate> shifted = gen_covariates(40, spec, StreamKey{6});
        double total = 0.0;
        const Matrix& vals = shifted[2].functional().values;
        for (double v : vals.data()) total += v;
        const double mean = total / (40.0 * 50.0);
        const double se = 1.0 / std::sqrt(40.0 * 50.0);
        CHECK(std::abs(mean - 0.5) <= 4.0 * se);
    }
}

TEST_CASE("binomial_ci", "[simulate]") {
    SECTION("reference value at p=0.25, R=10000") {
        const Interval ci = binomial_ci(0.25, 10000);
        CHECK(ci.lo == Catch::Approx(0.2415).margin(5e-5));
        CHECK(ci.hi == Catch::Approx(0.2585).margin(5e-5));
    }
    SECTION("degenerate p") {
        const Interval ci = binomial_ci(0.0, 50);
        CHECK(ci.lo == 0.0);
        CHECK(ci.hi == 0.0);
    }
    SECTION("p=0.5, R=100") {
        const Interval ci = binomial_ci(0.5, 100);
        CHECK(ci.lo == Catch::Approx(0.402).margin(5e-4));
        CHECK(ci.hi == Catch::Approx(0.598).margin(5e-4));
    }
    SECTION("clamping to [0,1]") {
        const Interval ci = binomial_ci(0.99, 10);
        CHECK(ci.hi == 1.0);
    }
}

TEST_CASE("corrected_frequencies", "[simulate]") {
    SECTION("unit availabilities reduce to normalized raw frequencies") {
        const std::vector<double> f = {0.1, 0.3};
        const std::vector<double> a = {1.0, 1.0};
        const std::vector<int> grouping = {0, 1};
        const std::vector<double> p = corrected_frequencies(f, a, grouping);
        CHECK(p[0] == Catch::Approx(0.25).margin(1e-15));
        CHECK(p[1] == Catch::Approx(0.75).margin(1e-15));
    }
    SECTION("worked example") {
        const std::vector<double> f = {0.2, 0.2};
        const std::vector<double> a = {0.5, 1.0};
        const std::vector<int> grouping = {0, 1};
        const std::vector<double> p = corrected_frequencies(f, a, grouping);
        CHECK(p[0] == Catch::Approx(2.0 / 3.0).margin(1e-15));
        CHECK(p[1] == Catch::Approx(1.0 / 3.0).margin(1e-15));
    }
    SECTION("frequencies always sum to one") {
        const std::vector<double> f = {0.05, 0.1, 0.2, 0.15};
        const std::vector<double> a = {0.5, 0.8, 0.9, 1.0};
        const std::vector<int> grouping = {0, 0, 1, 2};
        const std::vector<double> p = corrected_frequencies(f, a, grouping);
        double total = 0.0;
        for (double v : p) total += v;
        CHECK(total == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("scaling invariance of the normalization") {
        const std::vector<double> f = {0.1, 0.2};
        const std::vector<double> a = {0.4, 0.8};
        const std::vector<double> a2 = {0.2, 0.4};  // halves every availability
        const std::vector<int> grouping = {0, 1};
        CHECK(corrected_frequencies(f, a, grouping)[0] ==
              Catch::Approx(corrected_frequencies(f, a2, grouping)[0]).margin(1e-12));
    }
    SECTION("selection with zero availability is an error") {
        const std::vector<double> f = {0.1};
        const std::vector<double> a = {0.0};
        const std::vector<int> grouping = {0};
        CHECK_THROWS_AS(corrected_frequencies(f, a, grouping), DataError);
    }
}

TEST_CASE("scenario_unbiasedness", "[simulate]") {
    SECTION("one replication selects exactly one covariate") {
        const UnbiasednessResult res = scenario_unbiasedness(1, 24, tiny_config(), 5);
        int total = 0;
        for (const CovariateFrequency& f : res.frequencies) total += f.count;
        CHECK(total == 1);
    }
    SECTION("frequencies sum to one and results are worker-count independent") {
        set_worker_count(1);
        const UnbiasednessResult seq = scenario_unbiasedness(40, 24, tiny_config(), 7);
        set_worker_count(4);
        const UnbiasednessResult par = scenario_unbiasedness(40, 24, tiny_config(), 7);
        set_worker_count(0);
        double total = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            total += seq.frequencies[j].estimate;
            CHECK(seq.frequencies[j].count == par.frequencies[j].count);
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("scenario_power", "[simulate]") {
    SECTION("strong signal yields near-certain selection of the right covariate") {
        // a tiny grid carries little signal per curve, so the group separation
        // is boosted to keep this a mechanics check rather than a power study
        SimulationConfig cfg = tiny_config();
        cfg.gp_mean_assoc = 2.0;
        cfg.n_permutations = 199;
        const std::vector<double> mu = {1.0};
        const PowerResult res =
            scenario_power(AssociatedCovariate::functional_cov, mu, 30, 100, cfg, 11);
        CHECK(res.points[0].power >= 0.9);
        CHECK(res.points[0].conditional >= 0.8);
    }
    SECTION("power is monotone in alpha on the same replicates") {
        const std::vector<double> mu = {0.3};
        SimulationConfig strict = tiny_config();
        strict.alpha = 0.01;
        SimulationConfig loose = tiny_config();
        loose.alpha = 0.05;
        const PowerResult a =
            scenario_power(AssociatedCovariate::graph_cov, mu, 60, 24, strict, 13);
        const PowerResult b = scenario_power(AssociatedCovariate::graph_cov, mu, 60, 24, loose, 13);
        CHECK(a.points[0].power <= b.points[0].power);
    }
    SECTION("mu outside [0,1] is rejected") {
        const std::vector<double> mu = {1.5};
        CHECK_THROWS_AS(
            scenario_power(AssociatedCovariate::graph_cov, mu, 2, 10, tiny_config(), 1), DataError);
    }
}

TEST_CASE("scenario result files", "[simulate]") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "etree_sim_out";
    fs::create_directories(dir);
    const UnbiasednessResult res = scenario_unbiasedness(5, 20, tiny_config(), 3);
    const std::string path = (dir / "unbiasedness.csv").string();
    write_unbiasedness_csv(res, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "covariate,estimate,ci_lo,ci_hi");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);
    fs::remove_all(dir);
}

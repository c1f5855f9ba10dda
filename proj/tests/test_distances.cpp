#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "etree/distances.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace etree;

TEST_CASE("numeric distance is the absolute difference", "[distances]") {
    CHECK(dist_numeric(3.0, 3.0) == 0.0);
    CHECK(dist_numeric(1.0, 4.5) == 3.5);
    CHECK(dist_numeric(-2.0, 2.0) == 4.0);
    CHECK_THROWS_AS(dist_numeric(std::nan(""), 0.0), DataError);
    CHECK_THROWS_AS(dist_numeric(0.0, std::numeric_limits<double>::infinity()), DataError);
}

TEST_CASE("nominal distance is the mismatch indicator", "[distances]") {
    CHECK(dist_nominal(2, 2, 3) == 0.0);
    CHECK(dist_nominal(0, 1, 3) == 1.0);
    CHECK(dist_nominal(1, 0, 3) == 1.0);
    CHECK_THROWS_AS(dist_nominal(3, 0, 3), DataError);
    CHECK_THROWS_AS(dist_nominal(0, -1, 3), DataError);
}

TEST_CASE("functional distance: trapezoidal L2", "[distances]") {
    std::vector<double> grid(11), f(11), g(11);
    for (int i = 0; i <= 10; ++i) grid[i] = i / 10.0;

    SECTION("identical curves") {
        for (int i = 0; i <= 10; ++i) f[i] = g[i] = std::sin(i * 0.7);
        CHECK(dist_functional(f, g, grid) == 0.0);
    }
    SECTION("constant one vs zero integrates exactly") {
        std::fill(f.begin(), f.end(), 1.0);
        std::fill(g.begin(), g.end(), 0.0);
        CHECK(dist_functional(f, g, grid) == Catch::Approx(1.0).margin(1e-15));
    }
    SECTION("f(t)=t vs zero on 101 points approximates 1/sqrt(3)") {
        std::vector<double> grid101(101), t(101), zero(101, 0.0);
        for (int i = 0; i <= 100; ++i) {
            grid101[i] = i / 100.0;
            t[i] = grid101[i];
        }
        CHECK(dist_functional(t, zero, grid101) == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-3));
    }
    SECTION("length mismatch") {
        std::vector<double> shorter(10, 0.0);
        CHECK_THROWS_AS(dist_functional(shorter, g, grid), DataError);
    }
}

TEST_CASE("graph distance: Frobenius norm over both triangles", "[distances]") {
    Matrix a(3, 3), b(3, 3);
    SECTION("identical graphs") { CHECK(dist_graph(a, a) == 0.0); }
    SECTION("one edge differing by one weight unit contributes sqrt(2)") {
        b(0, 1) = 1.0;
        b(1, 0) = 1.0;
        CHECK(dist_graph(a, b) == Catch::Approx(std::sqrt(2.0)).margin(1e-15));
    }
    SECTION("empty vs complete K3") {
        const Matrix k3 = fixtures::complete_graph(3);
        CHECK(dist_graph(a, k3) == Catch::Approx(std::sqrt(6.0)).margin(1e-15));
    }
    SECTION("dimension mismatch") {
        Matrix c(4, 4);
        CHECK_THROWS_AS(dist_graph(a, c), DataError);
    }
}

TEST_CASE("pairwise_matrix on a numeric column", "[distances]") {
    Dataset ds;
    ds.n = 3;
    ds.response.kind = ResponseKind::numeric;
    ds.response.values = {0.0, 0.0, 0.0};
    ds.covariates.push_back(Covariate{"x", NumericColumn{{1.0, 2.0, 4.0}}});

    SECTION("full weights") {
        const DistanceMatrix d = pairwise_matrix(ds.covariates[0], full_view(ds));
        const std::vector<double> expected = {0, 1, 3, 1, 0, 2, 3, 2, 0};
        CHECK(d.d == expected);
    }
    SECTION("single observation") {
        const std::vector<int> w = {0, 1, 0};
        const DistanceMatrix d = pairwise_matrix(ds.covariates[0], subset_view(ds, w));
        CHECK(d.m == 1);
        CHECK(d.d == std::vector<double>{0.0});
    }
    SECTION("repetition semantics for weights (2,0,1)") {
        const std::vector<int> w = {2, 0, 1};
        const DistanceMatrix d = pairwise_matrix(ds.covariates[0], subset_view(ds, w));
        const std::vector<double> expected = {0, 0, 3, 0, 0, 3, 3, 3, 0};
        CHECK(d.d == expected);
    }
}

TEST_CASE("distance matrices are symmetric, zero-diagonal, nonnegative", "[distances]") {
    std::mt19937_64 g(991);
    for (int instance = 0; instance < 40; ++instance) {
        const DistanceMatrix d = oracle::random_distances_any_type(instance, 7, g);
        for (int k = 0; k < d.m; ++k) {
            CHECK(d(k, k) == 0.0);
            for (int l = 0; l < d.m; ++l) {
                CHECK(d(k, l) >= 0.0);
                CHECK(d(k, l) == d(l, k));
            }
        }
    }
}

TEST_CASE("all four kernels satisfy the triangle inequality", "[distances]") {
    std::mt19937_64 g(313);
    for (int instance = 0; instance < 40; ++instance) {
        const DistanceMatrix d = oracle::random_distances_any_type(instance, 3, g);
        const double slack = instance % 4 == 2 ? 1e-9 : 1e-12;  // quadrature slack for curves
        CHECK(d(0, 1) <= d(0, 2) + d(2, 1) + slack);
        CHECK(d(0, 2) <= d(0, 1) + d(1, 2) + slack);
        CHECK(d(1, 2) <= d(1, 0) + d(0, 2) + slack);
    }
}

TEST_CASE("scaling a numeric column scales its pairwise matrix", "[distances]") {
    std::mt19937_64 g(77);
    std::normal_distribution<double> normal;
    std::vector<double> x(12), scaled(12);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = normal(g);

    SECTION("power-of-two factors scale exactly") {
        for (double c : {2.0, 0.5, 8.0}) {
            for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = c * x[i];
            const DistanceMatrix base = numeric_pairwise(x);
            const DistanceMatrix after = numeric_pairwise(scaled);
            for (std::size_t i = 0; i < base.d.size(); ++i) CHECK(after.d[i] == c * base.d[i]);
        }
    }
    SECTION("general positive factors scale to rounding error") {
        const double c = 3.7;
        for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = c * x[i];
        const DistanceMatrix base = numeric_pairwise(x);
        const DistanceMatrix after = numeric_pairwise(scaled);
        for (std::size_t i = 0; i < base.d.size(); ++i)
            CHECK(after.d[i] == Catch::Approx(c * base.d[i]).epsilon(1e-14).margin(1e-300));
    }
}

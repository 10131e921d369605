#include "fbmfg/torus_grid.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fbmfg;
using std::numbers::pi;

TEST_CASE("grid construction validates its arguments") {
    CHECK_THROWS_AS(TorusGrid::make(3, 16, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid::make(1, 4, 4, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid::make(1, 16, 1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid::make(1, 16, 4, 0.0), std::invalid_argument);

    const auto g = TorusGrid::make(2, 12, 7, 0.3);
    CHECK(g.points() == 144);
    CHECK(g.coord(12) == 1.0);
    CHECK(g.time(g.nt()) == 0.3);
    CHECK(std::abs(g.dt() * g.nt() - g.T()) <= 1e-16);
    CHECK(g.index(-1, 13) == g.index(11, 1));
}

TEST_CASE("gradient of a constant vanishes") {
    const auto g = TorusGrid::make(2, 16, 2, 1.0);
    const auto D = gradient(Field(g, 3.5));
    REQUIRE(D.size() == 2);
    CHECK(D[0].sup() == 0.0);
    CHECK(D[1].sup() == 0.0);
}

TEST_CASE("central gradient of cos matches -2 pi sin to the Taylor bound") {
    const auto g = TorusGrid::make(1, 64, 2, 1.0);
    const auto f = Field::sample(g, [](const Vec& x) { return std::cos(2 * pi * x[0]); });
    const auto exact = Field::sample(g, [](const Vec& x) { return -2 * pi * std::sin(2 * pi * x[0]); });
    const double h = g.h();
    CHECK(testing::max_abs_diff(gradient(f)[0], exact) <= std::pow(2 * pi, 3) * h * h / 6);
}

TEST_CASE("field constant along the second axis has zero second component") {
    const auto g = TorusGrid::make(2, 16, 2, 1.0);
    const auto f = Field::sample(g, [](const Vec& x) { return std::sin(2 * pi * x[0]) + x[0]; });
    CHECK(gradient(f)[1].sup() == 0.0);
}

TEST_CASE("hessian oracles and second-order convergence") {
    auto errors = [](int n) {
        const auto g1 = TorusGrid::make(1, n, 2, 1.0);
        const auto f1 = Field::sample(g1, [](const Vec& x) { return std::cos(2 * pi * x[0]); });
        const auto H1 = hessian(f1);
        double e11 = 0.0;
        for (std::size_t k = 0; k < g1.points(); ++k) {
            e11 = std::max(e11, std::abs(H1.at(k)(0, 0) + 4 * pi * pi * std::cos(2 * pi * g1.position(k)[0])));
        }
        const auto g2 = TorusGrid::make(2, n, 2, 1.0);
        const auto f2 =
            Field::sample(g2, [](const Vec& x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); });
        const auto H2 = hessian(f2);
        double e12 = 0.0;
        for (std::size_t k = 0; k < g2.points(); ++k) {
            const Vec x = g2.position(k);
            const Mat H = H2.at(k);
            CHECK(H(0, 1) == H(1, 0));
            e12 = std::max(e12, std::abs(H(0, 1) - 4 * pi * pi * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1])));
        }
        return std::pair{e11, e12};
    };
    const auto [a11, a12] = errors(32);
    const auto [b11, b12] = errors(64);
    CHECK(b11 <= std::pow(2 * pi, 4) / (12.0 * 64 * 64) + 1e-10);
    CHECK(a11 / b11 >= 3.5);
    CHECK(a12 / b12 >= 3.5);

    const auto g = TorusGrid::make(2, 16, 2, 1.0);
    CHECK(hessian(Field(g, 2.0)).at(7).norm() == 0.0);
}

TEST_CASE("gradient and hessian are linear") {
    std::mt19937_64 rng(1);
    const auto g = TorusGrid::make(2, 16, 2, 1.0);
    const Field f = testing::random_smooth(g, rng), q = testing::random_smooth(g, rng);
    const double a = 0.7, b = -1.3;
    const Field comb = a * f + b * q;
    const auto Dc = gradient(comb), Df = gradient(f), Dq = gradient(q);
    const auto Hc = hessian(comb), Hf = hessian(f), Hq = hessian(q);
    double err = 0.0;
    for (std::size_t k = 0; k < g.points(); ++k) {
        for (int d = 0; d < 2; ++d) err = std::max(err, std::abs(Dc[d][k] - (a * Df[d][k] + b * Dq[d][k])));
        err = std::max(err, (Hc.at(k) - (a * Hf.at(k) + b * Hq.at(k))).cwiseAbs().maxCoeff() / 256.0);
    }
    CHECK(err <= 1e-12);
}

TEST_CASE("norm_C10 examples") {
    const auto g = TorusGrid::make(1, 64, 4, 1.0);
    CHECK(norm_C10(SpaceTimeField(g, 0.0)) == 0.0);
    CHECK(norm_C10(SpaceTimeField(g, 5.0)) == doctest::Approx(5.0).epsilon(1e-15));
    const auto f = SpaceTimeField::sample(g, [](const Vec& x, double) { return std::cos(2 * pi * x[0]); });
    const double h = g.h();
    CHECK(std::abs(norm_C10(f) - (1 + 2 * pi)) <= std::pow(2 * pi, 3) * h * h / 6);
}

TEST_CASE("norm_W21p examples") {
    const auto g = TorusGrid::make(1, 16, 10, 1.0);
    CHECK(norm_W21p(SpaceTimeField(g, 0.0), 4.0) == 0.0);
    CHECK(norm_W21p(SpaceTimeField(g, 1.0), 4.0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto g2 = TorusGrid::make(2, 8, 5, 1.0);
    CHECK(norm_W21p(SpaceTimeField(g2, 1.0), 5.0) == doctest::Approx(1.0).epsilon(1e-14));

    std::mt19937_64 rng(2);
    const auto f = testing::random_smooth_st(g, rng);
    CHECK(norm_W21p(-2.5 * f, 4.0) == doctest::Approx(2.5 * norm_W21p(f, 4.0)).epsilon(1e-13));
}

TEST_CASE("bounded field norm decays like T^(1/p)") {
    const double p = 4.0;
    std::vector<double> lt, ln;
    for (double T : {0.1, 0.05, 0.025, 0.0125}) {
        const auto g = TorusGrid::make(1, 16, 8, T);
        lt.push_back(std::log(T));
        ln.push_back(std::log(norm_W21p(SpaceTimeField(g, 3.0), p)));
    }
    const double slope = (ln.back() - ln.front()) / (lt.back() - lt.front());
    CHECK(slope == doctest::Approx(1.0 / p).epsilon(1e-10));
}

TEST_CASE("norms satisfy the triangle inequality on random pairs") {
    std::mt19937_64 rng(3);
    for (int dim : {1, 2}) {
        const auto g = TorusGrid::make(dim, 16, 6, 0.5);
        for (int trial = 0; trial < 20; ++trial) {
            const auto a = testing::random_smooth_st(g, rng), b = testing::random_smooth_st(g, rng);
            CHECK(norm_C10(a + b) <= norm_C10(a) + norm_C10(b) + 1e-12);
            CHECK(norm_W21p(a + b, dim + 3.0) <= norm_W21p(a, dim + 3.0) + norm_W21p(b, dim + 3.0) + 1e-10);
            CHECK(norm_C10(-3.0 * a) == doctest::Approx(3.0 * norm_C10(a)).epsilon(1e-14));
        }
    }
}

TEST_CASE("time derivative uses forward differences and a backward last slice") {
    const auto g = TorusGrid::make(1, 8, 4, 1.0);
    const auto f = SpaceTimeField::sample(g, [](const Vec&, double t) { return t * t; });
    CHECK(time_derivative(f, 0)[0] == doctest::Approx(0.25));
    CHECK(time_derivative(f, 4)[0] == doctest::Approx((1.0 - 0.5625) / 0.25));
}

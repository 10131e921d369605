#include "fbmfg/mfg_models.hpp"
#include "fbmfg/spectral_counterexample.hpp"
#include "fbmfg/truncation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fbmfg;
using namespace fbmfg::spectral;
using std::numbers::pi;

namespace {
const double lam1 = 4 * pi * pi;
}

TEST_CASE("mode labels") {
    const Mode c1 = parse_mode("c1", 1);
    CHECK(c1.k[0] == 1);
    CHECK(c1.kind[0] == Trig::cos);
    CHECK(mode_label(c1, 1) == "c1");
    const Mode m2 = parse_mode("c1xs2", 2);
    CHECK(m2.k == std::array<int, 2>{1, 2});
    CHECK(m2.lambda(2) == doctest::Approx(lam1 * 5));
    CHECK(mode_label(m2, 2) == "c1xs2");
    CHECK(Mode{{0, 0}, {Trig::sin, Trig::cos}}.degenerate(1));
    CHECK_THROWS_AS(parse_mode("s0", 1), std::invalid_argument);
    CHECK(c1.norm2(1) == 0.5);
    CHECK(parse_mode("c0", 1).norm2(1) == 1.0);
    CHECK(m2.norm2(2) == 0.25);

    for (const char* bad : {"", "x1", "c", "c-1", "c1xs2"}) CHECK_THROWS_AS(parse_mode(bad, 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_mode("c1", 2), std::invalid_argument);

    const auto modes = parse_modes("c0:1;c1:0.5;s2:-0.25", 1);
    REQUIRE(modes.size() == 3);
    CHECK(modes[2].m0 == -0.25);
    CHECK(parse_modes(format_modes(modes, 1), 1).size() == 3);
    CHECK_THROWS_AS(parse_modes("c1:1;c1:2", 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_modes("", 1), std::invalid_argument);
    CHECK_THROWS_AS(parse_modes("c1=1", 1), std::invalid_argument);
}

TEST_CASE("critical horizon") {
    const auto T1 = critical_times(-3.0, lam1);
    REQUIRE(T1.has_value());
    CHECK(*T1 == doctest::Approx(std::atanh(0.5) / lam1).epsilon(1e-15));
    CHECK(*T1 == doctest::Approx(0.013914087181483816).epsilon(1e-14));
    CHECK(std::abs(scaled_denominator(-3.0, lam1, *T1)) <= 1e-15);
    // Sign change across T1.
    CHECK(scaled_denominator(-3.0, lam1, 0.99 * *T1) > 0.0);
    CHECK(scaled_denominator(-3.0, lam1, 1.01 * *T1) < 0.0);

    CHECK_FALSE(critical_times(-2.0, lam1).has_value());
    CHECK_FALSE(critical_times(-1.0, lam1).has_value());
    CHECK_FALSE(critical_times(1.0, lam1).has_value());
    CHECK_FALSE(critical_times(-3.0, 0.0).has_value());

    // Higher modes go singular earlier.
    CHECK(*critical_times(-3.0, 4 * lam1) == doctest::Approx(*T1 / 4));
}

TEST_CASE("scaled denominator is finite for large lambda T and matches the unscaled form") {
    for (double a : {-3.0, -1.0, 0.5, 2.0}) {
        for (double lt : {0.0, 0.1, 1.0, 5.0}) {
            const double direct = ((a + 1) * std::sinh(lt) + std::cosh(lt)) * std::exp(-lt);
            CHECK(scaled_denominator(a, 1.0, lt) == doctest::Approx(direct).epsilon(1e-13));
        }
        CHECK(std::isfinite(scaled_denominator(a, 700.0, 1.0)));
    }
}

TEST_CASE("mode solution satisfies the ODE system and boundary conditions") {
    for (double alpha : {-3.0, -1.0, 0.0, 2.0}) {
        for (double T : {0.005, 0.01, 0.05}) {
            const auto sol = solve_spectral(alpha, parse_modes("c0:1;c1:0.5;s2:0.2", 1), T, 1);
            REQUIRE(sol.solvable);
            for (const auto& ms : sol.modes) {
                const double l = ms.lambda;
                CHECK(ms.m(0.0, alpha, T) == doctest::Approx(ms.coeff.m0).epsilon(1e-12));
                CHECK(ms.u(T, alpha, T) == doctest::Approx(alpha * ms.m(T, alpha, T)).epsilon(1e-12));
                for (double s : {0.1, 0.5, 0.9}) {
                    const double t = s * T;
                    const double scale = 1.0 + std::abs(ms.m(t, alpha, T)) * (1 + l);
                    // m' + lambda m = -lambda u  (m_t - Lap m = Lap u)
                    CHECK(std::abs(ms.dm(t, alpha, T) + l * ms.m(t, alpha, T) + l * ms.u(t, alpha, T)) <= 1e-10 * scale);
                    CHECK(std::abs(ms.d2m(t, alpha, T) - l * l * ms.m(t, alpha, T)) <= 1e-9 * scale * (1 + l));
                    // u' = lambda u  (-u_t - Lap u = 0)
                    const double e = 1e-6 * T;
                    const double du = (ms.u(t + e, alpha, T) - ms.u(t - e, alpha, T)) / (2 * e);
                    CHECK(du == doctest::Approx(l * ms.u(t, alpha, T)).epsilon(1e-6));
                }
            }
        }
    }
}

TEST_CASE("constant mode is frozen and u is the constant alpha m0") {
    const auto sol = solve_spectral(-3.0, parse_modes("c0:1", 1), 0.02, 1);
    REQUIRE(sol.solvable);
    const auto& c = sol.modes[0];
    CHECK(c.lambda == 0.0);
    CHECK(c.m(0.013, -3.0, 0.02) == doctest::Approx(1.0));
    CHECK(c.u(0.0, -3.0, 0.02) == doctest::Approx(-3.0));
}

TEST_CASE("large lambda T does not overflow") {
    const double alpha = 0.5, T = 1.0;
    const auto sol = solve_spectral(alpha, {{parse_mode("c3", 1), 1.0}}, T, 1);
    REQUIRE(sol.solvable);
    const auto& ms = sol.modes[0];
    REQUIRE(ms.lambda * T > 300.0);
    for (double t : {0.0, 0.5, 1.0}) {
        CHECK(std::isfinite(ms.m(t, alpha, T)));
        CHECK(std::isfinite(ms.u(t, alpha, T)));
        CHECK(std::isfinite(ms.d2m(t, alpha, T)));
    }
}

TEST_CASE("solvability at and near the critical horizon") {
    const double T1 = *critical_times(-3.0, lam1);
    const auto modes = parse_modes("c0:1;c1:0.5", 1);
    const auto at = solve_spectral(-3.0, modes, T1, 1);
    CHECK_FALSE(at.solvable);
    CHECK_FALSE(at.modes[1].solvable);
    CHECK(std::isnan(at.modes[1].A));
    CHECK(at.modes[0].solvable);
    CHECK(solve_spectral(-3.0, modes, 1.001 * T1, 1).solvable);
    CHECK(solve_spectral(-3.0, modes, 0.999 * T1, 1).solvable);

    // A mode with zero datum does not obstruct solvability.
    const auto zero = solve_spectral(-3.0, parse_modes("c0:1;c1:0", 1), T1, 1);
    CHECK(zero.solvable);
    CHECK(zero.modes[1].A == 0.0);

    const auto g = TorusGrid::make(1, 16, 10, T1);
    CHECK_THROWS_AS(synthesize_fields(at, g), std::invalid_argument);
    const auto ok = solve_spectral(-3.0, modes, 0.5 * T1, 1);
    CHECK_THROWS_AS(synthesize_fields(ok, g), std::invalid_argument);
}

TEST_CASE("synthesized fields match the datum and satisfy the final condition") {
    for (int dim : {1, 2}) {
        const std::string text = dim == 1 ? "c0:1;c1:0.5;s1:0.1" : "c0xc0:1;c1xc0:0.3;s1xs1:0.1";
        const auto modes = parse_modes(text, dim);
        const auto g = TorusGrid::make(dim, 16, 8, 0.004);
        const auto sol = solve_spectral(-3.0, modes, g.T(), dim);
        const auto [u, m] = synthesize_fields(sol, g);
        CHECK(testing::max_abs_diff(m.slice(0), sample_datum(modes, g)) <= 1e-13);
        CHECK(testing::max_abs_diff(u.slice(g.nt()), -3.0 * m.slice(g.nt())) <= 1e-12);
        // Mass is the constant mode.
        for (int j = 0; j <= g.nt(); ++j) CHECK(m.slice(j).integral() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("discrete projection") {
    const auto g = TorusGrid::make(1, 32, 2, 1.0);
    const std::vector<Mode> span{parse_mode("c0", 1), parse_mode("c1", 1)};
    const auto f = sample_datum(parse_modes("c0:0.7;c1:-0.4", 1), g);
    CHECK(testing::max_abs_diff(project(f, span), f) <= 1e-14);
    const auto off = sample_datum(parse_modes("s1:1;c3:2", 1), g);
    CHECK(project(off, span).sup() <= 1e-14);

    std::mt19937_64 rng(31);
    const Field r = testing::random_smooth(g, rng);
    const Field Pr = project(r, span);
    CHECK(testing::max_abs_diff(project(Pr, span), Pr) <= 1e-14);
    CHECK((r - Pr).integral() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("final costs") {
    const auto g = TorusGrid::make(1, 32, 2, 1.0);
    const auto pw = final_cost_pointwise(-3.0, g);
    CHECK_FALSE(pw.regularizing);
    const auto pw2 = final_cost_pointwise(-3.0, TorusGrid::make(1, 64, 2, 1.0));
    CHECK(pw2.lipschitz / pw.lipschitz == doctest::Approx(4.0).epsilon(0.01));

    const std::vector<Mode> span{parse_mode("c0", 1), parse_mode("c1", 1)};
    const auto pr = final_cost_projected(-3.0, span, g);
    // Range is a finite span of smooth modes.
    CHECK(pr.regularizing);
    CHECK(pr.lipschitz < pw.lipschitz);
    const auto in_span = sample_datum(parse_modes("c0:1;c1:0.5", 1), g);
    CHECK(testing::max_abs_diff(pr(in_span), pw(in_span)) <= 1e-13);

    std::mt19937_64 rng(32);
    for (int i = 0; i < 100; ++i) {
        Field a = testing::random_smooth(g, rng), b = testing::random_smooth(g, rng);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += U(rng);
        CHECK(norm_C2(pr(a) - pr(b)) <= pr.lipschitz * norm_C1(a - b) + 1e-9);
        CHECK(norm_C2(pw(a) - pw(b)) <= pw.lipschitz * norm_C1(a - b) + 1e-9);
    }
    // Modes above the Nyquist limit cannot be represented.
    CHECK_THROWS_AS(final_cost_projected(-3.0, {parse_mode("c16", 1)}, g), std::invalid_argument);
}

TEST_CASE("linear counterexample model") {
    const auto g = TorusGrid::make(1, 32, 10, 0.01);
    const auto modes = parse_modes("c0:1;c1:0.5", 1);
    const auto model = linear_counterexample_model(-3.0, modes, g);
    CHECK(model.delta == doctest::Approx(0.5).epsilon(1e-12));
    PointArgs a;
    a.u = 2.0;
    a.m = 3.0;
    a.Du = Vec(1.0, 0.0);
    Mat H = Mat::Zero();
    H(0, 0) = 7.0;
    CHECK(model.F(a) == 0.0);
    CHECK(model.G(a, H) == -7.0);
    CHECK(G_affinity_deviation(model, 100) <= 1e-12);
    CHECK(testing::max_abs_diff(model.m0, sample_datum(modes, g)) <= 1e-15);
    const auto pw = linear_counterexample_model(-3.0, modes, g, true);
    CHECK(pw.L_h > model.L_h);
    CHECK_THROWS_AS(linear_counterexample_model(-3.0, parse_modes("c0:1;c1:2", 1), g), ModelContractError);
}

// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance [OUT_DIR]

#include "fbmfg/fixed_point.hpp"
#include "fbmfg/mfg_models.hpp"
#include "fbmfg/runner.hpp"
#include "fbmfg/spectral_counterexample.hpp"
#include "model_fixtures.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

using namespace fbmfg;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path out_root;

// Tolerances.
constexpr double min_spatial_order = 1.8;
constexpr double min_temporal_order = 0.9;
constexpr double heat_runtime_limit = 10.0;  // seconds, n = 64
constexpr double spectral_factor = 5.0;      // |FD - spectral| <= 5 (h^2 + dt)
constexpr double mass_drift_limit = 1e-12;
constexpr double affinity_limit = 1e-8;
constexpr double ode_residual_limit = 1e-12;
constexpr double ce_alpha = -3.0;
const double lambda1 = 4 * pi * pi;

// 1. Heat oracle at n in {32, 64, 128}, nt = n^2 / 4.
Verdict heat_oracle() {
    const double T = 0.1;
    double err[3], h[3], dt[3], secs[3];
    const int ns[3] = {32, 64, 128};
    for (int i = 0; i < 3; ++i) {
        const int n = ns[i], nt = n * n / 4;
        const auto g = TorusGrid::make(1, n, nt, T);
        const auto t0 = std::chrono::steady_clock::now();
        const auto model = decoupled_heat_model(cosine_density(g, 0.5), 1.0, Field(g, 0.0));
        const auto res = picard_solve(model, g, select_K(model.m0, model.L_h, model.C0, model.delta), {});
        secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!res.report.converged) return {false, fmt("n=%d did not converge", n)};
        const double decay = std::exp(-4 * pi * pi * T);
        const auto exact =
            Field::sample(g, [&](const Vec& x) { return 1.0 + 0.5 * decay * std::cos(2 * pi * x[0]); });
        err[i] = testing::max_abs_diff(res.m.slice(nt), exact);
        h[i] = g.h();
        dt[i] = g.dt();
    }
    double sp = 1e9, tp = 1e9;
    for (int i = 0; i < 2; ++i) {
        sp = std::min(sp, std::log(err[i] / err[i + 1]) / std::log(h[i] / h[i + 1]));
        tp = std::min(tp, std::log(err[i] / err[i + 1]) / std::log(dt[i] / dt[i + 1]));
    }
    const bool ok = sp >= min_spatial_order && tp >= min_temporal_order && secs[1] < heat_runtime_limit;
    return {ok, fmt("errors %.3e %.3e %.3e; spatial order %.3f (>= %.1f), temporal order %.3f (>= %.1f); "
                    "n=64 run %.2fs (< %.0fs)",
                    err[0], err[1], err[2], sp, min_spatial_order, tp, min_temporal_order, secs[1],
                    heat_runtime_limit)};
}

// 2. Linear system, alpha = -3, T = 0.005: Picard fixed point vs the spectral solution.
Verdict spectral_vs_fd() {
    const double T = 0.005;
    const auto modes = spectral::parse_modes("c0:1;c1:0.5;s1:0.2", 1);
    int nonzero = 0;
    for (const auto& m : modes) nonzero += m.mode.k[0] != 0 && m.m0 != 0.0;
    if (nonzero < 2) return {false, "fewer than two nonzero modes"};
    const auto sol = spectral::solve_spectral(ce_alpha, modes, T, 1);
    double e[2], s[2];
    int iters[2];
    const int ns[2] = {32, 64}, nts[2] = {40, 160};
    for (int i = 0; i < 2; ++i) {
        const auto g = TorusGrid::make(1, ns[i], nts[i], T);
        const auto model = spectral::linear_counterexample_model(ce_alpha, modes, g);
        const auto r = picard_solve(model, g, select_K(model.m0, model.L_h, model.C0, model.delta), {});
        if (!r.report.converged) return {false, fmt("n=%d: picard_solve %s", ns[i], to_string(r.report.status))};
        const auto [ue, me] = spectral::synthesize_fields(sol, g);
        e[i] = std::max((r.u - ue).sup(), (r.m - me).sup());
        s[i] = g.h() * g.h() + g.dt();
        iters[i] = r.report.iterations();
    }
    // Errors must sit under the bound on both meshes and fall at least half as fast as it does.
    const double rate_e = e[0] / e[1], rate_s = s[0] / s[1];
    const bool ok = e[0] <= spectral_factor * s[0] && e[1] <= spectral_factor * s[1] && rate_e >= 0.5 * rate_s;
    return {ok, fmt("n=32: err %.3e <= %.3e (%d it); n=64: err %.3e <= %.3e (%d it); error ratio %.2f vs bound "
                    "ratio %.2f",
                    e[0], spectral_factor * s[0], iters[0], e[1], spectral_factor * s[1], iters[1], rate_e, rate_s)};
}

// 3. Sweep across the first critical horizon.
Verdict nonexistence() {
    const double T1 = *spectral::critical_times(ce_alpha, lambda1);
    const double formula = std::atanh(0.5) / lambda1;

    // Half-width of the unsolvability window |D(T)| <= tol, from the slope of D at T1.
    const double tol = 1e-8, dT = 1e-7 * T1;
    const double slope = (spectral::scaled_denominator(ce_alpha, lambda1, T1 + dT) -
                          spectral::scaled_denominator(ce_alpha, lambda1, T1 - dT)) /
                         (2 * dT);
    const double window = tol / std::abs(slope);

    // Independent root of the denominator by bisection.
    double lo = 0.5 * T1, hi = 1.5 * T1;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (spectral::scaled_denominator(ce_alpha, lambda1, mid) > 0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);

    const double factors[] = {0.8, 0.999, 0.9995, 1.0, 1.0005, 1.001, 1.2};
    std::vector<double> Ts;
    for (double f : factors) Ts.push_back(f * T1);

    RunConfig c = parse_config("model = linear-counterexample\n");
    c.n = 32;
    c.nt = 100;
    c.T = T1;  // fixes dt = T1 / 100
    c.max_iter = 500;
    c.write_fields = false;
    const auto out = sweep(c, Ts, (out_root / "c3_sweep").string(), thread_cap());

    bool ok = out.exit_code == exit_diverged && out.rows.front().converged;
    std::string rows;
    int in_window = 0;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& r = out.rows[i];
        const bool inside = std::abs(spectral::scaled_denominator(ce_alpha, lambda1, r.T)) <= tol;
        in_window += inside;
        if (inside && r.converged) ok = false;
        rows += fmt("%s%.5g:%s(%d)", i ? " " : "", factors[i], to_string(r.status), r.iterations);
    }
    const bool t_ok = std::abs(T1 - formula) <= window && std::abs(root - formula) <= window;
    ok = ok && t_ok && in_window >= 1;
    return {ok, fmt("T1=%.17g, |T1-formula|=%.1e, |bisection-formula|=%.1e (window %.1e); exit %d; "
                    "%d point(s) in window; %s",
                    T1, std::abs(T1 - formula), std::abs(root - formula), window, out.exit_code, in_window,
                    rows.c_str())};
}

RunConfig quadratic_config(double T) {
    RunConfig c = parse_config("model = quadratic-mfg\n");
    c.n = 32;
    c.T = T;
    c.nt = static_cast<int>(std::lround(T * 1280));
    return c;
}

std::optional<RunOutcome> c4_run;

// 4. Quadratic MFG at dt = 1/1280.
Verdict contraction() {
    c4_run = run(quadratic_config(0.05), (out_root / "c4_run").string());
    const auto& r = c4_run->result.report;
    bool all_below = !r.gammas.empty();
    for (double g : r.gammas) all_below = all_below && g < 1.0;
    const auto sw = sweep(quadratic_config(0.05), {0.05, 0.1, 0.2}, (out_root / "c4_sweep").string(), thread_cap());
    const auto& rows = sw.rows;
    bool all_conv = true;
    for (const auto& row : rows) all_conv = all_conv && row.converged;
    const bool monotone = rows[0].max_gamma < rows[1].max_gamma && rows[1].max_gamma < rows[2].max_gamma;
    const bool ok = r.converged && all_below && r.detrunc_ok && rows[0].max_gamma < rows[2].max_gamma && monotone;
    return {ok, fmt("T=0.05: %s in %d it, max gamma %.4f, detrunc_ok=%s; max gamma over T={0.05,0.1,0.2}: "
                    "%.4f %.4f %.4f (%s)",
                    to_string(r.status), r.iterations(), r.max_gamma(), r.detrunc_ok ? "true" : "false",
                    rows[0].max_gamma, rows[1].max_gamma, rows[2].max_gamma,
                    all_conv ? "all converged" : "not all converged")};
}

// 5. Exact de-truncation bounds at the fixed point of criterion 4.
Verdict detrunc() {
    if (!c4_run) return {false, "criterion 4 did not run"};
    const auto& r = c4_run->result.report;
    if (!r.converged) return {false, "criterion 4 run did not converge"};
    const double K = r.truncation.K;
    const Bounds b = measure_bounds(c4_run->result.u, c4_run->result.m);
    const bool ok = b.min_m >= 1.0 / K && b.max_m <= K && b.max_u <= K && b.max_Du <= K && b.max_Dm <= K;
    return {ok, fmt("K=%.6g: min m %.4f >= %.4f, max m %.4f, max|u| %.4f, max|Du| %.4f, max|Dm| %.4f <= K", K,
                    b.min_m, 1.0 / K, b.max_m, b.max_u, b.max_Du, b.max_Dm)};
}

// 6. Congestion model with the conservative density re-solve.
Verdict congestion() {
    const auto g = TorusGrid::make(1, 32, 26, 0.02);
    const auto model = congestion_model(cosine_density(g, 0.5), 1.0, 0.5, 1.0, 4.0 * g.h());
    const auto r = picard_solve(model, g, select_K(model.m0, model.L_h, model.C0, model.delta), {});
    if (!r.report.converged) return {false, fmt("picard_solve %s: %s", to_string(r.report.status), r.report.failure.c_str())};
    const auto c = conservative_fp_check(model, r.u, r.m);
    const bool ok = r.m.min() > 0.0 && c.min_m > 0.0 && c.max_step_mass_drift <= mass_drift_limit;
    return {ok, fmt("converged in %d it; min m %.4f (scheme) %.4f (conservative); mass drift per step %.2e <= %.0e",
                    r.report.iterations(), r.m.min(), c.min_m, c.max_step_mass_drift, mass_drift_limit)};
}

// 7. Property suites.
Verdict properties() {
    std::mt19937_64 rng(2024);
    std::string notes;
    bool ok = true;

    {  // clamps on 1000 random pairs
        std::uniform_real_distribution<double> U(-50.0, 50.0);
        const double K = 7.0;
        bool c = true;
        for (int i = 0; i < 1000; ++i) {
            const double x = U(rng), y = U(rng);
            c = c && clamp_positive(clamp_positive(x, K), K) == clamp_positive(x, K);
            c = c && clamp_symmetric(clamp_symmetric(x, K), K) == clamp_symmetric(x, K);
            c = c && std::abs(clamp_positive(x, K) - clamp_positive(y, K)) <= std::abs(x - y);
            c = c && std::abs(clamp_symmetric(x, K) - clamp_symmetric(y, K)) <= std::abs(x - y);
            const Vec p(U(rng), U(rng)), q(U(rng), U(rng));
            c = c && (clamp_vector(clamp_vector(p, K), K) - clamp_vector(p, K)).norm() <= 1e-14;
            c = c && (clamp_vector(p, K) - clamp_vector(q, K)).norm() <= (p - q).norm() + 1e-14;
        }
        ok = ok && c;
        notes += c ? "clamps ok" : "clamps FAIL";
    }
    {  // affinity of G in the Hessian slot
        double worst = 0.0;
        for (int dim : {1, 2}) {
            const auto g = TorusGrid::make(dim, 16, 4, 1.0);
            const Field m0 = cosine_density(g, 0.5);
            worst = std::max(worst, G_affinity_deviation(quadratic_mfg_model(m0, 0.5, 1.0, 0.2), 100));
            worst = std::max(worst, G_affinity_deviation(congestion_model(m0, 1.0, 0.5, 1.0, 0.2), 100));
            worst = std::max(worst, G_affinity_deviation(congestion_model(m0, 0.5, 0.5, 1.0, 0.2), 100));
            worst = std::max(worst, G_affinity_deviation(decoupled_heat_model(m0, 1.0, Field(g, 0.0)), 100));
        }
        const auto g1 = TorusGrid::make(1, 32, 4, 1.0);
        const Field m0 = cosine_density(g1, 0.5);
        worst = std::max(worst, G_affinity_deviation(build_mfg_coupling(testing::rich_spec(), m0,
                                                                        final_cost_constant(Field(g1, 0.0)),
                                                                        testing::loose_constants(m0)),
                                                     100));
        ok = ok && worst <= affinity_limit;
        notes += fmt("; affinity dev %.1e", worst);
    }
    {  // nondivergence vs divergence form
        const double e1 = testing::divergence_form_gap(32), e2 = testing::divergence_form_gap(64);
        const double order = std::log2(e1 / e2);
        ok = ok && order >= min_spatial_order;
        notes += fmt("; div-form gap %.2e -> %.2e (order %.2f)", e1, e2, order);
    }
    {  // final cost growth bound on 100 random densities
        const auto g = TorusGrid::make(1, 64, 4, 1.0);
        const Field m0 = cosine_density(g, 0.5);
        const auto conv = quadratic_mfg_model(m0, 0.5, 1.0, 4.0 * g.h());
        const auto proj = spectral::linear_counterexample_model(ce_alpha, spectral::parse_modes("c0:1;c1:0.5", 1), g);
        double worst = -1e300;
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (const auto* model : {&conv, &proj}) {
            for (int i = 0; i < 100; ++i) {
                Field m = testing::random_smooth(g, rng, 2.0);
                if (i % 2)
                    for (std::size_t k = 0; k < m.size(); ++k) m[k] += U(rng);
                const double slack = norm_C2(model->h(m)) - (model->L_h * norm_C1(m) + model->C0);
                worst = std::max(worst, slack);
            }
        }
        ok = ok && worst <= 0.0;
        notes += fmt("; growth bound slack max %.2e", worst);
    }
    {  // m_k ODE and its boundary conditions at 50 sampled t per mode
        const double T = 0.005;
        const auto sol = spectral::solve_spectral(ce_alpha, spectral::parse_modes("c0:1;c1:0.5;s1:0.2", 1), T, 1);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        double worst = 0.0;
        for (const auto& ms : sol.modes) {
            const double l = ms.lambda;
            for (int i = 0; i < 50; ++i) {
                const double t = U(rng) * T;
                worst = std::max(worst, std::abs(ms.d2m(t, ce_alpha, T) - l * l * ms.m(t, ce_alpha, T)));
            }
            worst = std::max(worst, std::abs(ms.m(0.0, ce_alpha, T) - ms.coeff.m0));
            worst = std::max(worst, std::abs(l * (ce_alpha + 1) * ms.m(T, ce_alpha, T) + ms.dm(T, ce_alpha, T)));
        }
        ok = ok && worst <= ode_residual_limit;
        notes += fmt("; mode ODE residual %.2e", worst);
    }
    return {ok, notes};
}

// 8. Byte-identical series.csv for two runs of criterion 4's configuration.
Verdict determinism() {
    const auto a = out_root / "c8_a", b = out_root / "c8_b";
    run(quadratic_config(0.05), a.string());
    run(quadratic_config(0.05), b.string());
    const std::string sa = slurp(a / "series.csv"), sb = slurp(b / "series.csv");
    const bool ok = !sa.empty() && sa == sb;
    return {ok, fmt("series.csv %zu bytes, sha256 %s vs %s", sa.size(), sha256_hex(sa).substr(0, 16).c_str(),
                    sha256_hex(sb).substr(0, 16).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    out_root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "fbmfg_acceptance";
    fs::create_directories(out_root);

    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"heat oracle", heat_oracle},       {"spectral vs FD", spectral_vs_fd},
        {"non-existence sweep", nonexistence}, {"short-time contraction", contraction},
        {"de-truncation", detrunc},         {"congestion", congestion},
        {"property suites", properties},    {"determinism", determinism},
    };
    int failed = 0, idx = 0;
    for (const auto& [name, fn] : criteria) {
        ++idx;
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d %-24s %s  %s [%.1fs]\n", idx, name, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                    secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}

#include "fbmfg/fixed_point.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fbmfg {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

/// Collapses to a single slice when the coefficient does not depend on t.
std::vector<DiffusionSlice> sample_coefficient(const TorusGrid& grid, const DiffusionFn& fn) {
    auto slices = sample_diffusion(grid, fn, true);
    const auto& s0 = slices.front();
    const bool constant = std::all_of(slices.begin(), slices.end(), [&](const DiffusionSlice& s) {
        return s.xx == s0.xx && s.xy == s0.xy && s.yy == s0.yy;
    });
    if (constant) slices.erase(slices.begin() + 1, slices.end());
    return slices;
}

Field regrid(const TorusGrid& grid, const Field& f) {
    return Field(grid, std::vector<double>(f.values().begin(), f.values().end()));
}

Vec to_vec(const std::vector<Field>& g, std::size_t k) {
    Vec v = Vec::Zero();
    for (std::size_t d = 0; d < g.size(); ++d) v[static_cast<Eigen::Index>(d)] = g[d][k];
    return v;
}

PointArgs args_at(const TorusGrid& g, int j, std::size_t k, const Field& u, const Field& m,
                  const std::vector<Field>& Du, const std::vector<Field>& Dm) {
    PointArgs a;
    a.u = u[k];
    a.m = m[k];
    a.Du = to_vec(Du, k);
    a.Dm = to_vec(Dm, k);
    a.x = g.position(k);
    a.t = g.time(j);
    return a;
}

double contract(const Mat& a, const Mat& H) { return a.cwiseProduct(H).sum(); }

}  // namespace

IterateNorms measure(const SpaceTimeField& u, const SpaceTimeField& m, double p) {
    return {norm_W21p(u, p), norm_C10(u), norm_C10(m)};
}

IterateState IterateState::initial(const CouplingModel& model, const TorusGrid& grid, double p, double M) {
    IterateState s{SpaceTimeField(grid, 0.0), SpaceTimeField::constant_in_time(grid, regrid(grid, model.m0)),
                   p, M, {}};
    s.norms = measure(s.u_hat, s.m_hat, p);
    return s;
}

Bounds measure_bounds(const SpaceTimeField& u, const SpaceTimeField& m) {
    Bounds b;
    b.min_m = m.min();
    b.max_m = m.max();
    b.max_u = u.sup();
    for (int j = 0; j < u.slices(); ++j) {
        b.max_Du = std::max(b.max_Du, sup_gradient(u.slice(j)));
        b.max_Dm = std::max(b.max_Dm, sup_gradient(m.slice(j)));
    }
    return b;
}

bool within_truncation(const Bounds& b, double K) {
    return b.min_m >= 1.0 / K && b.max_m <= K && b.max_u <= K && b.max_Du <= K && b.max_Dm <= K;
}

const char* to_string(PicardStatus s) {
    switch (s) {
        case PicardStatus::converged: return "converged";
        case PicardStatus::not_converged: return "not_converged";
        case PicardStatus::diverged: return "diverged";
    }
    return "unknown";
}

double IterationReport::max_gamma() const {
    double g = 0.0;
    for (double x : gammas) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        g = std::max(g, x);
    }
    return g;
}

double self_map_radius(const CouplingModel& model) {
    return 3.0 * ((model.L_h + 1.0) * norm_C1(model.m0) + model.C0);
}

std::pair<SpaceTimeField, SpaceTimeField> apply_T(const IterateState& state, const CouplingModel& model,
                                                  const TruncationParams& params, const SolverOptions& solver) {
    const TorusGrid& g = state.u_hat.grid();
    const int nt = g.nt();
    const auto hat = wrap_model(model.F, model.G, params);

    // Forward density solve with G-hat(u-hat, m-hat, D2u-hat) as source.
    ParabolicProblem fp(g, regrid(g, model.m0));
    fp.diffusion = sample_coefficient(g, model.c);
    fp.ellipticity = model.ellipticity;
    fp.solver = solver;
    SpaceTimeField gsrc(g);
    std::vector<std::vector<Field>> Du_hat;
    Du_hat.reserve(static_cast<std::size_t>(nt + 1));
    for (int j = 0; j <= nt; ++j) {
        const Field& u = state.u_hat.slice(j);
        const Field& m = state.m_hat.slice(j);
        Du_hat.push_back(gradient(u));
        const auto Dm = gradient(m);
        const auto D2u = hessian(u);
        Field& out = gsrc.slice(j);
        for (std::size_t k = 0; k < g.points(); ++k) {
            out[k] = hat.G(args_at(g, j, k, u, m, Du_hat.back(), Dm), D2u.at(k));
        }
    }
    fp.source = std::move(gsrc);
    SpaceTimeField m_bar = solve_forward(fp);

    // Backward value solve with F-hat(u-hat, m-bar) and u(T) = h[m-bar(T)].
    Field uT = model.h(m_bar.slice(nt));
    if (!uT.finite()) throw ModelContractError("final cost produced non-finite values");
    ParabolicProblem hjb(g, regrid(g, uT));
    hjb.diffusion = sample_coefficient(g, model.a);
    hjb.ellipticity = model.ellipticity;
    hjb.solver = solver;
    SpaceTimeField fsrc(g);
    for (int j = 0; j <= nt; ++j) {
        const Field& u = state.u_hat.slice(j);
        const Field& m = m_bar.slice(j);
        const auto Dm = gradient(m);
        Field& out = fsrc.slice(j);
        for (std::size_t k = 0; k < g.points(); ++k) {
            out[k] = hat.F(args_at(g, j, k, u, m, Du_hat[static_cast<std::size_t>(j)], Dm));
        }
    }
    hjb.source = std::move(fsrc);
    SpaceTimeField u_bar = solve_backward(hjb);
    u_bar.slice(nt) = regrid(g, uT);
    return {std::move(u_bar), std::move(m_bar)};
}

double iterate_distance(const SpaceTimeField& u1, const SpaceTimeField& m1, const SpaceTimeField& u0,
                        const SpaceTimeField& m0, double p) {
    const SpaceTimeField du = u1 - u0;
    const SpaceTimeField dm = m1 - m0;
    return norm_W21p(du, p) + norm_C10(du) + norm_C10(dm);
}

std::pair<double, double> pde_residuals(const CouplingModel& model, const SpaceTimeField& u,
                                        const SpaceTimeField& m) {
    const TorusGrid& g = u.grid();
    const double inv2dt = 0.5 / g.dt();
    double r_hjb = 0.0, r_fp = 0.0;
    for (int j = 1; j < g.nt(); ++j) {
        const Field& uj = u.slice(j);
        const Field& mj = m.slice(j);
        const auto Du = gradient(uj);
        const auto Dm = gradient(mj);
        const auto D2u = hessian(uj);
        const auto D2m = hessian(mj);
        const double t = g.time(j);
        for (std::size_t k = 0; k < g.points(); ++k) {
            const PointArgs a = args_at(g, j, k, uj, mj, Du, Dm);
            const double ut = (u.slice(j + 1)[k] - u.slice(j - 1)[k]) * inv2dt;
            const double mt = (m.slice(j + 1)[k] - m.slice(j - 1)[k]) * inv2dt;
            const Mat Hu = D2u.at(k);
            const double rh = -ut - contract(model.a(a.x, t), Hu) + model.F(a);
            const double rf = mt - contract(model.c(a.x, t), D2m.at(k)) + model.G(a, Hu);
            r_hjb = std::max(r_hjb, std::abs(rh));
            r_fp = std::max(r_fp, std::abs(rf));
        }
    }
    return {r_hjb, r_fp};
}

PicardResult picard_solve(const CouplingModel& model, const TorusGrid& grid, const TruncationParams& params,
                          const PicardOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (options.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (!(options.relaxation > 0.0 && options.relaxation <= 1.0)) {
        throw std::invalid_argument("relaxation must lie in (0, 1]");
    }
    if (!model.m0.grid().same_space(grid)) throw std::invalid_argument("model lives on a different grid");
    const double p = options.exponent(grid.dim());
    if (!(p > grid.dim() + 2.0)) throw std::invalid_argument("norm exponent must exceed dim + 2");

    IterationReport rep;
    rep.p = p;
    rep.truncation = params;
    rep.M1 = self_map_radius(model);
    IterateState state = IterateState::initial(model, grid, p, rep.M1);
    const double w = options.relaxation;

    int increases = 0;
    for (int k = 1; k <= options.max_iter; ++k) {
        SpaceTimeField ub(grid), mb(grid);
        try {
            std::tie(ub, mb) = apply_T(state, model, params, options.solver);
        } catch (const SolverError& e) {
            rep.status = PicardStatus::diverged;
            rep.failure = std::string("solver failure: ") + e.what();
            break;
        } catch (const ModelContractError& e) {
            rep.status = PicardStatus::diverged;
            rep.failure = std::string("model contract: ") + e.what();
            break;
        }
        if (w != 1.0) {
            ub = (1.0 - w) * state.u_hat + w * ub;
            mb = (1.0 - w) * state.m_hat + w * mb;
        }
        const double d = iterate_distance(ub, mb, state.u_hat, state.m_hat, p);

        IterationRecord rec;
        rec.iter = k;
        rec.d = d;
        rec.gamma = rep.distances.empty() ? nan_v : d / rep.distances.back();
        rec.norms = measure(ub, mb, p);
        rec.min_m = mb.min();
        rec.max_Du = 0.0;
        for (int j = 0; j <= grid.nt(); ++j) rec.max_Du = std::max(rec.max_Du, sup_gradient(ub.slice(j)));
        if (!rep.distances.empty()) {
            rep.gammas.push_back(rec.gamma);
            increases = d > rep.distances.back() ? increases + 1 : 0;
        }
        rep.distances.push_back(d);
        rep.records.push_back(rec);

        state.u_hat = std::move(ub);
        state.m_hat = std::move(mb);
        state.norms = rec.norms;

        if (!std::isfinite(d) || !state.u_hat.finite() || !state.m_hat.finite()) {
            rep.status = PicardStatus::diverged;
            rep.failure = "non-finite iterate at iteration " + std::to_string(k);
            break;
        }
        if (!state.in_ball()) {
            std::ostringstream os;
            os << "iteration " << k << ": iterate norm " << rec.norms.total() << " exceeds M1 = " << rep.M1;
            rep.warnings.push_back(os.str());
        }
        if (d <= options.tol) {
            rep.status = PicardStatus::converged;
            break;
        }
        if (increases >= options.divergence_window) {
            rep.status = PicardStatus::diverged;
            rep.failure = "distance increased for " + std::to_string(increases) + " consecutive iterations";
            break;
        }
    }
    if (rep.status == PicardStatus::not_converged && rep.failure.empty()) {
        rep.failure = "no convergence within " + std::to_string(options.max_iter) + " iterations";
    }
    rep.converged = rep.status == PicardStatus::converged;

    PicardResult out{state.u_hat, state.m_hat, {}};
    if (out.u.finite() && out.m.finite()) {
        rep.bounds = measure_bounds(out.u, out.m);
        rep.detrunc_ok = within_truncation(rep.bounds, params.K);
        try {
            std::tie(rep.residual_hjb, rep.residual_fp) = pde_residuals(model, out.u, out.m);
        } catch (const ModelContractError& e) {
            rep.residual_hjb = rep.residual_fp = std::numeric_limits<double>::infinity();
            rep.warnings.push_back(std::string("residual evaluation failed: ") + e.what());
        }
    } else {
        rep.residual_hjb = rep.residual_fp = std::numeric_limits<double>::infinity();
    }
    out.report = std::move(rep);
    return out;
}

std::vector<SweepRow> horizon_sweep(const CouplingModel& model, const TorusGrid& grid,
                                    const TruncationParams& params, const PicardOptions& options,
                                    const std::vector<double>& T_list, int threads) {
    if (T_list.empty()) throw std::invalid_argument("horizon list is empty");
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        if (!(T_list[i] > 0.0)) throw std::invalid_argument("horizons must be positive");
        if (i && !(T_list[i] > T_list[i - 1])) throw std::invalid_argument("horizons must increase");
    }
    const double dt = grid.dt();
    std::vector<SweepRow> rows(T_list.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            SweepRow& row = rows[i];
            row.T = T_list[i];
            row.nt = std::max(2, static_cast<int>(std::lround(row.T / dt)));
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const auto res = picard_solve(model, grid.with_horizon(row.T, row.nt), params, options);
                const auto& r = res.report;
                row.status = r.status;
                row.converged = r.converged;
                row.iterations = r.iterations();
                row.max_gamma = r.gammas.empty() ? 0.0 : r.max_gamma();
                row.final_gamma = r.gammas.empty() ? 0.0 : r.gammas.back();
                row.min_m = r.bounds.min_m;
                row.detrunc_ok = r.detrunc_ok;
                row.failure = r.failure;
            } catch (const std::exception& e) {
                row.status = PicardStatus::diverged;
                row.failure = e.what();
            }
            row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    const int n = std::clamp(threads, 1, static_cast<int>(rows.size()));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return rows;
}

ConservativeCheck conservative_fp_check(const CouplingModel& model, const SpaceTimeField& u,
                                        const SpaceTimeField& m) {
    if (!model.fp_drift) throw std::invalid_argument("model has no drift for the divergence-form check");
    const TorusGrid& g = u.grid();
    ParabolicProblem fp(g, regrid(g, model.m0));
    fp.diffusion = sample_coefficient(g, model.c);
    fp.ellipticity = model.ellipticity;
    fp.positivity = true;
    fp.solver.force_direct = true;
    std::vector<DriftSlice> drift;
    for (int j = 0; j <= g.nt(); ++j) {
        const auto Du = gradient(u.slice(j));
        const auto Dm = gradient(m.slice(j));
        DriftSlice s;
        s.components.assign(static_cast<std::size_t>(g.dim()), Field(g, 0.0));
        for (std::size_t k = 0; k < g.points(); ++k) {
            const Vec b = model.fp_drift(args_at(g, j, k, u.slice(j), m.slice(j), Du, Dm));
            for (int d = 0; d < g.dim(); ++d) s.components[static_cast<std::size_t>(d)][k] = b[d];
        }
        drift.push_back(std::move(s));
    }
    fp.drift = std::move(drift);

    ConservativeCheck out{0.0, 0.0, 0.0, solve_fp_conservative(fp)};
    const double mass0 = out.m.slice(0).integral();
    double prev = mass0;
    for (int j = 1; j <= g.nt(); ++j) {
        const double mass = out.m.slice(j).integral();
        out.max_step_mass_drift = std::max(out.max_step_mass_drift, std::abs(mass - prev) / std::abs(mass0));
        prev = mass;
    }
    out.min_m = out.m.min();
    out.max_deviation = (out.m - m).sup();
    return out;
}

}  // namespace fbmfg

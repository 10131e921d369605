#include "fbmfg/runner.hpp"

#include "fbmfg/mfg_models.hpp"
#include "fbmfg/spectral_counterexample.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace fbmfg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) { return format_double(v); }

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << bytes;
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Writes `bytes` and records its digest.
void emit(const fs::path& dir, const std::string& name, const std::string& bytes, json& artifacts) {
    write_file(dir / name, bytes);
    artifacts.push_back({{"file", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
}

json counterexample_block(const RunConfig& c) {
    const auto modes = spectral::parse_modes(c.params.modes, c.dim);
    const double alpha = c.params.counterexample_alpha;
    const auto sol = spectral::solve_spectral(alpha, modes, c.T, c.dim);
    json out;
    out["alpha"] = alpha;
    out["spectral_solvable"] = sol.solvable;
    json rows = json::array();
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : sol.modes) {
        json r;
        r["mode"] = spectral::mode_label(s.coeff.mode, c.dim);
        r["m0"] = s.coeff.m0;
        r["lambda"] = s.lambda;
        r["scaled_denominator"] = num(s.scaled_denominator);
        r["solvable"] = s.solvable;
        const auto Tk = spectral::critical_times(alpha, s.lambda);
        if (Tk) {
            const double rel = (c.T - *Tk) / *Tk;
            r["critical_time"] = *Tk;
            r["relative_offset"] = rel;
            if (s.coeff.m0 != 0.0 && std::abs(rel) < std::abs(nearest)) nearest = rel;
        } else {
            r["critical_time"] = nullptr;
        }
        rows.push_back(r);
    }
    out["modes"] = rows;
    out["nearest_relative_offset"] = num(nearest);
    return out;
}

}  // namespace

TorusGrid grid_of(const RunConfig& c) { return TorusGrid::make(c.dim, c.n, c.nt, c.T); }

PicardOptions options_of(const RunConfig& c) {
    PicardOptions o;
    o.p = c.p;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.relaxation = c.relaxation;
    return o;
}

ModelSetup build_setup(const RunConfig& c, const TorusGrid& grid) {
    validate(c);
    const auto& p = c.params;
    const double sigma = p.kernel_sigma > 0.0 ? p.kernel_sigma : 4.0 * grid.h();
    auto make = [&]() -> CouplingModel {
        switch (c.model) {
            case ModelKind::decoupled_heat: {
                const Field uT = cosine_density(grid, p.terminal_amplitude) - Field(grid, 1.0);
                return decoupled_heat_model(cosine_density(grid, p.m0_amplitude), p.nu, uT);
            }
            case ModelKind::quadratic_mfg:
                return quadratic_mfg_model(cosine_density(grid, p.m0_amplitude), p.nu, p.coupling, sigma);
            case ModelKind::congestion:
                return congestion_model(cosine_density(grid, p.m0_amplitude), p.alpha, p.nu, p.coupling, sigma);
            case ModelKind::linear_counterexample:
                return spectral::linear_counterexample_model(
                    p.counterexample_alpha, spectral::parse_modes(p.modes, c.dim), grid, p.pointwise_final_cost);
            case ModelKind::custom: break;
        }
        throw ConfigError("model 'custom' is only available through the library API");
    };
    try {
        CouplingModel model = make();
        const double delta = c.delta.value_or(model.delta);
        TruncationParams t = c.K ? with_K(model.m0, model.L_h, model.C0, delta, *c.K)
                                 : select_K(model.m0, model.L_h, model.C0, delta);
        return {std::move(model), t};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

int exit_code_for(const IterationReport& r) {
    if (!r.converged) return exit_diverged;
    return r.detrunc_ok ? exit_ok : exit_detrunc;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string series_csv(const IterationReport& r) {
    std::ostringstream os;
    os << "iter,d,gamma,norm_u_w21p,norm_u_c10,norm_m_c10,min_m,max_Du\n";
    for (const auto& rec : r.records) {
        os << rec.iter << ',' << fmt(rec.d) << ',' << (std::isnan(rec.gamma) ? "" : fmt(rec.gamma)) << ','
           << fmt(rec.norms.u_w21p) << ',' << fmt(rec.norms.u_c10) << ',' << fmt(rec.norms.m_c10) << ','
           << fmt(rec.min_m) << ',' << fmt(rec.max_Du) << '\n';
    }
    return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "T,converged,iterations,max_gamma,min_m,runtime\n";
    for (const auto& r : rows) {
        os << fmt(r.T) << ',' << (r.converged ? "true" : "false") << ',' << r.iterations << ','
           << fmt(r.max_gamma) << ',' << fmt(r.min_m) << ',' << fmt(r.runtime) << '\n';
    }
    return os.str();
}

std::string field_csv(const Field& u, const Field& m) {
    const TorusGrid& g = u.grid();
    std::ostringstream os;
    os << (g.dim() == 1 ? "x,u,m\n" : "x,y,u,m\n");
    for (std::size_t k = 0; k < g.points(); ++k) {
        const Vec x = g.position(k);
        os << fmt(x[0]) << ',';
        if (g.dim() == 2) os << fmt(x[1]) << ',';
        os << fmt(u[k]) << ',' << fmt(m[k]) << '\n';
    }
    return os.str();
}

RunOutcome run(const RunConfig& config, const std::string& out_dir) {
    RunConfig c = config;
    if (!out_dir.empty()) c.out_dir = out_dir;
    const auto t0 = std::chrono::steady_clock::now();
    const TorusGrid grid = grid_of(c);
    const ModelSetup setup = build_setup(c, grid);
    const fs::path dir = prepare_dir(c.out_dir);

    RunOutcome out{exit_ok, picard_solve(setup.model, grid, setup.truncation, options_of(c)), ""};
    const IterationReport& r = out.result.report;
    out.exit_code = exit_code_for(r);

    json artifacts = json::array();
    emit(dir, "series.csv", series_csv(r), artifacts);
    json snapshots = json::array();
    if (c.write_fields && out.result.u.finite() && out.result.m.finite()) {
        const std::pair<const char*, int> slices[] = {
            {"fields_t0.csv", 0}, {"fields_tmid.csv", grid.nt() / 2}, {"fields_tT.csv", grid.nt()}};
        for (const auto& [name, j] : slices) {
            emit(dir, name, field_csv(out.result.u.slice(j), out.result.m.slice(j)), artifacts);
            snapshots.push_back({{"file", name}, {"slice", j}, {"t", grid.time(j)}});
        }
    }

    json m;
    m["config"] = to_text(c);
    m["model"] = setup.model.name;
    m["final_cost"] = setup.model.h.kind;
    m["final_cost_lipschitz_derived"] = setup.model.h.lipschitz_derived;
    m["final_cost_regularizing"] = setup.model.h.regularizing;
    m["K"] = setup.truncation.K;
    m["delta"] = setup.truncation.delta;
    m["M1"] = r.M1;
    m["L_h"] = setup.model.L_h;
    m["C0"] = setup.model.C0;
    m["p"] = r.p;
    json table = json::array();
    for (const auto& rec : r.records) {
        table.push_back({{"k", rec.iter},
                         {"d", num(rec.d)},
                         {"gamma", num(rec.gamma)},
                         {"norm_u_w21p", num(rec.norms.u_w21p)},
                         {"norm_u_c10", num(rec.norms.u_c10)},
                         {"norm_m_c10", num(rec.norms.m_c10)}});
    }
    m["iterations"] = table;
    m["status"] = to_string(r.status);
    m["converged"] = r.converged;
    m["failure"] = r.failure;
    m["detrunc_ok"] = r.detrunc_ok;
    m["bounds"] = {{"min_m", num(r.bounds.min_m)}, {"max_m", num(r.bounds.max_m)},
                   {"max_u", num(r.bounds.max_u)}, {"max_Du", num(r.bounds.max_Du)},
                   {"max_Dm", num(r.bounds.max_Dm)}};
    m["residuals"] = {{"hjb", num(r.residual_hjb)}, {"fp", num(r.residual_fp)}};
    m["warnings"] = r.warnings;
    m["exit_code"] = out.exit_code;
    m["snapshots"] = snapshots;
    if (c.model == ModelKind::linear_counterexample) m["counterexample"] = counterexample_block(c);
    m["artifacts"] = artifacts;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.manifest = m.dump(2);
    write_file(dir / "manifest.json", out.manifest + "\n");
    return out;
}

SweepOutcome sweep(const RunConfig& config, const std::vector<double>& T_list, const std::string& out_dir,
                   int threads) {
    RunConfig c = config;
    if (!out_dir.empty()) c.out_dir = out_dir;
    const auto t0 = std::chrono::steady_clock::now();
    const TorusGrid grid = grid_of(c);
    const ModelSetup setup = build_setup(c, grid);
    const fs::path dir = prepare_dir(c.out_dir);

    SweepOutcome out;
    try {
        out.rows = horizon_sweep(setup.model, grid, setup.truncation, options_of(c), T_list, threads);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    bool all_converged = true, all_detrunc = true;
    for (const auto& r : out.rows) {
        all_converged = all_converged && r.converged;
        all_detrunc = all_detrunc && r.detrunc_ok;
    }
    out.exit_code = !all_converged ? exit_diverged : (all_detrunc ? exit_ok : exit_detrunc);

    json artifacts = json::array();
    emit(dir, "sweep.csv", sweep_csv(out.rows), artifacts);
    json m;
    m["config"] = to_text(c);
    m["dt"] = grid.dt();
    m["K"] = setup.truncation.K;
    m["L_h"] = setup.model.L_h;
    m["C0"] = setup.model.C0;
    json rows = json::array();
    for (const auto& r : out.rows) {
        rows.push_back({{"T", r.T},
                        {"nt", r.nt},
                        {"status", to_string(r.status)},
                        {"iterations", r.iterations},
                        {"max_gamma", num(r.max_gamma)},
                        {"final_gamma", num(r.final_gamma)},
                        {"detrunc_ok", r.detrunc_ok},
                        {"failure", r.failure}});
    }
    m["rows"] = rows;
    if (c.model == ModelKind::linear_counterexample) {
        const auto modes = spectral::parse_modes(c.params.modes, c.dim);
        json crit = json::array();
        for (const auto& mc : modes) {
            const auto Tk = spectral::critical_times(c.params.counterexample_alpha, mc.mode.lambda(c.dim));
            if (Tk && mc.m0 != 0.0) crit.push_back({{"mode", spectral::mode_label(mc.mode, c.dim)}, {"T", *Tk}});
        }
        m["critical_times"] = crit;
    }
    m["exit_code"] = out.exit_code;
    m["threads"] = threads;
    m["artifacts"] = artifacts;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(dir / "sweep_manifest.json", m.dump(2) + "\n");
    return out;
}

int thread_cap() {
    if (const char* env = std::getenv("FBMFG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256L));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace fbmfg

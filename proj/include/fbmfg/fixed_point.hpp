#pragma once

#include "fbmfg/coupling_model.hpp"
#include "fbmfg/parabolic_stepper.hpp"
#include "fbmfg/truncation.hpp"

#include <string>
#include <vector>

namespace fbmfg {

struct PicardOptions {
    /// Norm exponent; 0 selects dim + 3.
    double p = 0.0;
    double tol = 1e-8;
    int max_iter = 100;
    /// Next iterate is (1 - w) old + w T(old); 1 is the plain Picard map.
    double relaxation = 1.0;
    /// Consecutive increases of d that declare divergence.
    int divergence_window = 5;
    SolverOptions solver;

    double exponent(int dim) const { return p > 0.0 ? p : dim + 3.0; }
};

/// ||u||_p^(2), |u|^(1), |m|^(1).
struct IterateNorms {
    double u_w21p = 0.0;
    double u_c10 = 0.0;
    double m_c10 = 0.0;
    double total() const { return u_w21p + u_c10 + m_c10; }
};

IterateNorms measure(const SpaceTimeField& u, const SpaceTimeField& m, double p);

/// Current pair (u-hat, m-hat) and its membership in the ball of radius M.
struct IterateState {
    SpaceTimeField u_hat;
    SpaceTimeField m_hat;
    double p = 4.0;
    double M = 0.0;
    IterateNorms norms;

    bool in_ball() const { return norms.total() <= M; }

    /// u-hat = 0 and m-hat = m0 on every slice.
    static IterateState initial(const CouplingModel& model, const TorusGrid& grid, double p, double M);
};

/// Extremes of a solution pair over all slices.
struct Bounds {
    double min_m = 0.0;
    double max_m = 0.0;
    double max_u = 0.0;
    double max_Du = 0.0;
    double max_Dm = 0.0;
};

Bounds measure_bounds(const SpaceTimeField& u, const SpaceTimeField& m);
/// 1/K <= m <= K, |u|, |Du|, |Dm| <= K.
bool within_truncation(const Bounds& b, double K);

enum class PicardStatus { converged, not_converged, diverged };
const char* to_string(PicardStatus s);

/// One row per application of the map: distance to the previous iterate
/// and diagnostics of the new iterate.
struct IterationRecord {
    int iter = 0;
    double d = 0.0;
    /// d_k / d_{k-1}; NaN on the first row.
    double gamma = 0.0;
    IterateNorms norms;
    double min_m = 0.0;
    double max_Du = 0.0;
};

struct IterationReport {
    std::vector<IterationRecord> records;
    std::vector<double> distances;
    std::vector<double> gammas;  // distances.size() - 1 entries
    PicardStatus status = PicardStatus::not_converged;
    bool converged = false;
    std::string failure;

    /// Max-norm residuals of the untruncated equations at interior slices.
    double residual_hjb = 0.0;
    double residual_fp = 0.0;
    bool detrunc_ok = false;
    Bounds bounds;

    TruncationParams truncation;
    double M1 = 0.0;
    double p = 0.0;
    std::vector<std::string> warnings;

    int iterations() const { return static_cast<int>(distances.size()); }
    double max_gamma() const;
};

struct PicardResult {
    SpaceTimeField u;
    SpaceTimeField m;
    IterationReport report;
};

/// M1 = 3((L_h + 1)|m0|^(1) + C0).
double self_map_radius(const CouplingModel& model);

/// One application of the map: FP solve with the truncated G on the frozen
/// (u-hat, m-hat), then the backward HJB solve with the truncated F on
/// (u-hat, m-bar) and final datum h[m-bar(T)]. Returns (u-bar, m-bar).
std::pair<SpaceTimeField, SpaceTimeField> apply_T(const IterateState& state, const CouplingModel& model,
                                                  const TruncationParams& params,
                                                  const SolverOptions& solver = {});

/// Distance d = ||du||_p^(2) + |du|^(1) + |dm|^(1).
double iterate_distance(const SpaceTimeField& u1, const SpaceTimeField& m1, const SpaceTimeField& u0,
                        const SpaceTimeField& m0, double p);

/// Picard iteration from the initial state until d <= tol. Solver and
/// contract failures end the run as diverged rather than propagating.
PicardResult picard_solve(const CouplingModel& model, const TorusGrid& grid, const TruncationParams& params,
                          const PicardOptions& options);

/// Residuals of the original system at interior slices, time derivative
/// by central differences: {HJB, FP}.
std::pair<double, double> pde_residuals(const CouplingModel& model, const SpaceTimeField& u,
                                        const SpaceTimeField& m);

struct SweepRow {
    double T = 0.0;
    int nt = 0;
    bool converged = false;
    PicardStatus status = PicardStatus::not_converged;
    int iterations = 0;
    double max_gamma = 0.0;
    double final_gamma = 0.0;
    double min_m = 0.0;
    bool detrunc_ok = false;
    double runtime = 0.0;
    std::string failure;
};

/// One picard_solve per horizon with dt held at grid.dt(); rows in input
/// order. Requires an increasing T_list. Rows run on up to `threads` workers.
std::vector<SweepRow> horizon_sweep(const CouplingModel& model, const TorusGrid& grid,
                                    const TruncationParams& params, const PicardOptions& options,
                                    const std::vector<double>& T_list, int threads = 1);

struct ConservativeCheck {
    /// max_j |mass_j - mass_{j-1}| / mass_0.
    double max_step_mass_drift = 0.0;
    double min_m = 0.0;
    /// max |m_conservative - m| over all slices.
    double max_deviation = 0.0;
    SpaceTimeField m;
};

/// Re-solves the density equation in divergence form with the model's drift
/// evaluated on the given u (and m), using a direct solver.
ConservativeCheck conservative_fp_check(const CouplingModel& model, const SpaceTimeField& u,
                                        const SpaceTimeField& m);

}  // namespace fbmfg

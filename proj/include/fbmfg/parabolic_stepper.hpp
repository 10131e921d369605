#pragma once

#include "fbmfg/coupling_model.hpp"
#include "fbmfg/torus_grid.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace fbmfg {

/// Linear-solver failure or non-finite step, tagged with the offending slice.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, int slice) : std::runtime_error(what), slice_(slice) {}
    int slice() const { return slice_; }

private:
    int slice_;
};

/// Symmetric coefficient matrix sampled on one slice. xy and yy are
/// ignored in one dimension.
struct DiffusionSlice {
    Field xx;
    Field xy;
    Field yy;
};

/// Vector coefficient sampled on one slice, one component per dimension.
struct DriftSlice {
    std::vector<Field> components;
};

struct SolverOptions {
    /// Relative residual target for the 2D Krylov solver.
    double krylov_tol = 1e-10;
    /// Use the sparse LU factorization in 2D as well.
    bool force_direct = false;
};

/// v_t - c_ij(x,t) v_ij + r(x,t) v + g(x,t) = 0 on the torus with v(., 0) = v0.
///
/// `diffusion` holds either one slice (time-independent) or nt+1 slices.
/// When `drift` is present the problem is read in divergence form,
///   v_t - d_ij(c_ij v) - div(v b) = 0,
/// which is how solve_fp_conservative interprets it.
struct ParabolicProblem {
    TorusGrid grid;
    std::vector<DiffusionSlice> diffusion;
    Field initial;
    std::optional<SpaceTimeField> source;
    std::optional<SpaceTimeField> reaction;
    std::optional<std::vector<DriftSlice>> drift;
    /// Keep the discrete operator an M-matrix: mixed derivatives go to the
    /// explicit side and dt <= h^2 / (8 max|c_12|) is enforced.
    bool positivity = false;
    /// Declared lower bound on the smallest eigenvalue of c; checked on
    /// every slice when positive, otherwise only strict positivity is checked.
    double ellipticity = 0.0;
    SolverOptions solver;

    ParabolicProblem(const TorusGrid& g, Field v0) : grid(g), initial(std::move(v0)) {}
};

/// Samples a matrix coefficient on the grid. A time-independent coefficient
/// produces a single slice.
std::vector<DiffusionSlice> sample_diffusion(const TorusGrid& grid, const DiffusionFn& fn,
                                             bool time_dependent);
/// Constant isotropic coefficient nu * I.
std::vector<DiffusionSlice> isotropic_diffusion(const TorusGrid& grid, double nu);

/// One backward-Euler step: (I + dt L) v_j = v_{j-1} - dt g_j.
Field step_implicit(const ParabolicProblem& problem, const Field& previous, int j);

/// All slices; slice 0 equals the initial datum exactly.
SpaceTimeField solve_forward(const ParabolicProblem& problem);

/// Reverses coefficient, source, reaction and drift slices in time.
ParabolicProblem time_reversed(const ParabolicProblem& problem);

/// Solves -v_t - c_ij v_ij + r v + g = 0 with v(., T) = problem.initial.
/// Coefficients and source are given in the original time order.
SpaceTimeField solve_backward(const ParabolicProblem& problem);

/// Divergence-form Fokker-Planck solve with upwinded flux for the drift.
/// Total mass is conserved to solver precision and positivity of the
/// initial datum is preserved. Requires problem.drift.
SpaceTimeField solve_fp_conservative(const ParabolicProblem& problem);

}  // namespace fbmfg

#pragma once

#include "fbmfg/coupling_model.hpp"
#include "fbmfg/torus_grid.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fbmfg {

/// Exact solution of the linear backward-forward system
///   -u_t - Lap u = 0,  m_t - Lap m = Lap u,  u(T) = alpha m(T),  m(0) = m0
/// by expansion in Laplace eigenfunctions of the torus.
namespace spectral {

enum class Trig { cos, sin };

/// Tensor-product eigenfunction prod_d trig_d(2 pi k_d x_d); in one
/// dimension only the first factor is used.
struct Mode {
    std::array<int, 2> k{0, 0};
    std::array<Trig, 2> kind{Trig::cos, Trig::cos};

    /// Laplace eigenvalue 4 pi^2 |k|^2.
    double lambda(int dim) const;
    double eval(const Vec& x, int dim) const;
    /// sin with k = 0 vanishes identically.
    bool degenerate(int dim) const;
    /// Squared L2 norm on the unit torus (1, 1/2 or 1/4).
    double norm2(int dim) const;

    bool operator==(const Mode&) const = default;
};

/// Parses "c1" / "s2" (1D) or "c1xs0" (2D) mode labels; throws
/// std::invalid_argument on malformed input.
Mode parse_mode(const std::string& label, int dim);
std::string mode_label(const Mode& m, int dim);

struct ModeCoefficient {
    Mode mode;
    double m0 = 0.0;  // coefficient of the initial datum
};

/// Parses "c0:1.0;c1:0.5;s1:0.2".
std::vector<ModeCoefficient> parse_modes(const std::string& text, int dim);
std::string format_modes(const std::vector<ModeCoefficient>& modes, int dim);

/// Critical horizon (1/lambda) artanh(-1/(alpha+1)) where
/// (alpha+1) sinh(lambda T) + cosh(lambda T) vanishes. Defined only for alpha < -2.
std::optional<double> critical_times(double alpha, double lambda);

/// Denominator (alpha+1) sinh(lambda T) + cosh(lambda T) divided by e^{lambda T}.
double scaled_denominator(double alpha, double lambda, double T);

struct ModeSolution {
    ModeCoefficient coeff;
    double lambda = 0.0;
    double B = 0.0;
    /// A_k; non-finite for unsolvable modes.
    double A = 0.0;
    bool solvable = true;
    double scaled_denominator = 1.0;

    /// m_k(t) = A sinh(lambda t) + B cosh(lambda t), evaluated in a form
    /// that does not overflow for lambda T up to 700.
    double m(double t, double alpha, double T) const;
    double dm(double t, double alpha, double T) const;
    double d2m(double t, double alpha, double T) const;
    /// u_k(t) = alpha m_k(T) e^{lambda (t - T)}.
    double u(double t, double alpha, double T) const;
};

struct SpectralSolution {
    double alpha = 0.0;
    double T = 0.0;
    int dim = 1;
    std::vector<ModeSolution> modes;
    bool solvable = true;
};

/// Per-mode A_k, B_k. A mode is unsolvable when the scaled denominator is
/// within tol_denom of zero; an unsolvable mode with nonzero datum makes
/// the whole problem unsolvable.
SpectralSolution solve_spectral(double alpha, const std::vector<ModeCoefficient>& m0, double T, int dim,
                                double tol_denom = 1e-8);

/// Partial sums on the grid. Throws std::invalid_argument for unsolvable input
/// or a horizon different from the grid's.
std::pair<SpaceTimeField, SpaceTimeField> synthesize_fields(const SpectralSolution& sol,
                                                            const TorusGrid& grid);

/// Initial density sum_k m0_k phi_k sampled on the grid.
Field sample_datum(const std::vector<ModeCoefficient>& m0, const TorusGrid& grid);

/// L2 projection onto the span of the given modes: discrete coefficients
/// (sum_x f phi_k) / (sum_x phi_k^2).
Field project(const Field& f, const std::vector<Mode>& modes);

/// h[m] = scale * m pointwise; not regularizing. L_h is the discrete bound
/// for the grid, which grows like n^2.
FinalCost final_cost_pointwise(double scale, const TorusGrid& grid);

/// h[m] = scale * P m with P the projection onto `modes`. Coincides with
/// the pointwise map on the span of the modes, which is invariant under the
/// linear system, and does not amplify components outside it.
FinalCost final_cost_projected(double scale, const std::vector<Mode>& modes, const TorusGrid& grid);

/// The linear system above as a CouplingModel: a = c = I, F = 0,
/// G = -tr(D^2u), with the projected final coupling (or the pointwise one
/// when `pointwise` is set).
CouplingModel linear_counterexample_model(double alpha, const std::vector<ModeCoefficient>& m0,
                                          const TorusGrid& grid, bool pointwise = false);

}  // namespace spectral
}  // namespace fbmfg

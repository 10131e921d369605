#pragma once

#include "fbmfg/coupling_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fbmfg {

/// Hamiltonian H(x, t, p, m) with the derivatives needed to expand the
/// Fokker-Planck equation in nondivergence form, plus the diffusion
/// A = (1/2) Sigma Sigma^T and its spatial derivatives.
struct HamiltonianSpec {
    std::function<double(const Vec& x, double t, const Vec& p, double m)> H;
    /// D_p H.
    std::function<Vec(const Vec& x, double t, const Vec& p, double m)> H_p;
    /// sum_i d^2 H / dx_i dp_i.
    std::function<double(const Vec& x, double t, const Vec& p, double m)> H_xp;
    /// D_pp H.
    std::function<Mat(const Vec& x, double t, const Vec& p, double m)> H_pp;
    /// d/dm D_p H.
    std::function<Vec(const Vec& x, double t, const Vec& p, double m)> H_mp;

    DiffusionFn A;
    /// Component j: sum_i d A_ij / dx_i.
    std::function<Vec(const Vec& x, double t)> A_div;
    /// sum_ij d^2 A_ij / dx_i dx_j.
    std::function<double(const Vec& x, double t)> A_div2;
};

/// Worst discrepancy between the supplied derivative callables and central
/// finite differences of H (and A) at random probes.
struct DerivativeCheck {
    double max_error = 0.0;
    std::string worst;
    bool passed = false;
};

/// Cross-validates a HamiltonianSpec; probes are drawn with |p| <= radius,
/// m in [1/radius, radius]. Throws ModelContractError if a callable is missing.
DerivativeCheck cross_validate(const HamiltonianSpec& spec, int dim, int samples = 100,
                               double step = 1e-3, double tol = 1e-4, double radius = 2.0,
                               std::uint64_t seed = 7);

/// Declared constants of a model, see CouplingModel.
struct ModelConstants {
    BoundFn L_F;
    BoundFn L_G;
    double delta = 0.0;
    double ellipticity = 0.0;
};

/// F = H(x, t, Du, m);
/// G = -(d_ij A_ij) m - 2 (d_i A_ij) m_j - D_pH . Dm
///     - m (H_{x_i p_i} + H_{p_i p_j} u_ij + H_{m p_i} m_i),  a = c = A.
/// Rejects specs whose derivative callables are missing or fail cross-validation.
CouplingModel build_mfg_coupling(const HamiltonianSpec& spec, Field m0, FinalCost h,
                                 ModelConstants constants, std::string name = "mfg");

/// Scalar Hamiltonian H1(q) of the congestion model with its gradient and Hessian.
struct CongestionHamiltonian {
    std::function<double(const Vec& q)> H1;
    std::function<Vec(const Vec& q)> grad;
    std::function<Mat(const Vec& q)> hess;
};

/// Coupling cost f(x, t, m).
struct CouplingCost {
    std::function<double(const Vec& x, double t, double m)> f;
};

/// Congestion MFG with H(x, t, p, m) = m^alpha H1(p / m^alpha) - f(x, t, m):
///   F = m^alpha H1(Du / m^alpha) - f,
///   G = -(d_ij A_ij) m - 2 (d_i A_ij) m_j - D_pH1 . Dm
///       - m^(1-alpha) (H1)_pp : D^2u + alpha m^(-alpha) (H1)_pp Du . Dm.
/// F and G throw ModelContractError when evaluated at m <= 0.
CouplingModel build_congestion_coupling(double alpha, CongestionHamiltonian H1, CouplingCost f,
                                        DiffusionFn A, std::function<Vec(const Vec&, double)> A_div,
                                        std::function<double(const Vec&, double)> A_div2, Field m0,
                                        FinalCost h, ModelConstants constants);

/// Scalar function applied after the convolution. `slope` is set for affine
/// maps s -> slope * s + offset, for which L_h is derived exactly.
struct ScalarMap {
    std::function<double(double)> f;
    std::optional<double> slope;
    std::optional<double> offset;

    static ScalarMap affine(double slope, double offset = 0.0);
};

/// Periodic Gaussian of width sigma, normalized so that h^dim sum = 1.
Field periodic_gaussian_kernel(const TorusGrid& grid, double sigma);
/// Discrete delta (1/h^dim at the origin).
Field discrete_delta_kernel(const TorusGrid& grid);
/// Periodic convolution (m * kernel)(x) = h^dim sum_y m(y) kernel(x - y).
Field periodic_convolution(const Field& m, const Field& kernel);

/// h[m] = h0(m * kernel). Rejects negative or non-normalized kernels.
/// L_h = |slope| (1 + ||D^2 kernel||_1) for affine h0; otherwise
/// `declared_lipschitz` must be given and is reported as declared.
/// A discrete delta kernel is accepted and flagged non-regularizing.
FinalCost final_cost_convolution(ScalarMap h0, const Field& kernel,
                                 std::optional<double> declared_lipschitz = std::nullopt);

/// h[m] = u_T regardless of m; L_h = 0.
FinalCost final_cost_constant(const Field& u_T);

/// Audit of the declared constants on random probes in the truncated box.
struct AssumptionReport {
    double F_bound_ratio = 0.0;     // max |F| / L_F
    double F_lipschitz_ratio = 0.0; // max |dF| / (L_F sum|d args|)
    double G_bound_ratio = 0.0;     // max |G| / (L_G (1 + |H|))
    double G_lipschitz_ratio = 0.0; // against the mixed estimate
    double G_affinity_deviation = 0.0;
    int samples = 0;
    std::vector<std::string> violations;
    bool passed() const { return violations.empty(); }
};

/// Probes |u| <= 2K, m in [1/(2K), 2K], |Du|, |Dm| <= 2K with the declared
/// L_F(2K), L_G(2K). Requires samples >= 100.
AssumptionReport validate_assumptions(const CouplingModel& model, double K, int samples,
                                      std::uint64_t seed = 11);

/// Largest deviation of G(H + 2E) - 2 G(H + E) + G(H) over random probes,
/// scaled by 1 + |G|; zero for G affine in D^2u.
double G_affinity_deviation(const CouplingModel& model, int probes, std::uint64_t seed = 13);

// ---------------------------------------------------------------------------
// Ready-made models.

/// 1 + amplitude cos(2 pi x) (times cos(2 pi y) in 2D).
Field cosine_density(const TorusGrid& grid, double amplitude);

/// H = (1/2)|p|^2 - coupling * m, A = nu I.
HamiltonianSpec quadratic_hamiltonian(double nu, double coupling);

/// Quadratic MFG with Gaussian-convolution final cost h[m] = m * kernel.
CouplingModel quadratic_mfg_model(const Field& m0, double nu, double coupling, double sigma);

/// Congestion MFG with H1 = (1/2)|q|^2, f = coupling * m, A = nu I.
CouplingModel congestion_model(const Field& m0, double alpha, double nu, double coupling,
                               double sigma);

/// F = G = 0, a = c = nu I, final cost u_T.
CouplingModel decoupled_heat_model(const Field& m0, double nu, const Field& u_T);

}  // namespace fbmfg

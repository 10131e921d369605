#pragma once

#include "fbmfg/torus_grid.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace fbmfg {

/// Raised when a model violates one of its declared contracts (positivity
/// floor of m0, evaluation outside the admissible domain, ...).
class ModelContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pointwise arguments of the coupling terms: u, m, Du, Dm at (x, t).
struct PointArgs {
    double u = 0.0;
    double m = 1.0;
    Vec Du = Vec::Zero();
    Vec Dm = Vec::Zero();
    Vec x = Vec::Zero();
    double t = 0.0;
};

/// F(u, m, Du, Dm, x, t) of the backward equation.
using CouplingF = std::function<double(const PointArgs&)>;
/// G(u, m, Du, Dm, D^2u, x, t) of the forward equation; affine in D^2u.
using CouplingG = std::function<double(const PointArgs&, const Mat& D2u)>;
/// Matrix coefficient a_ij(x, t) or c_ij(x, t).
using DiffusionFn = std::function<Mat(const Vec& x, double t)>;
/// Declared local constant L(R), valid for |u|, m, 1/m, |Du|, |Dm| <= R.
using BoundFn = std::function<double(double R)>;
/// Transport velocity for the divergence-form Fokker-Planck equation,
/// m_t - d_ij(A_ij m) - div(m b) = 0.
using DriftFn = std::function<Vec(const PointArgs&)>;

/// Final-cost operator u(., T) = h[m(., T)] together with its declared
/// regularity constants.
struct FinalCost {
    std::function<Field(const Field&)> apply;
    /// Lipschitz constant |h[m1] - h[m2]|^(2) <= L_h |m1 - m2|^(1).
    double lipschitz = 0.0;
    /// true when lipschitz was derived from the operator's structure rather
    /// than declared by the caller.
    bool lipschitz_derived = true;
    /// false for operators that do not gain two derivatives (pointwise maps).
    bool regularizing = true;
    std::string kind;

    Field operator()(const Field& m) const { return apply(m); }
    /// C0 = L_h |m0|^(1) + |h[m0]|^(2), so that |h[m]|^(2) <= L_h |m|^(1) + C0.
    double bound_offset(const Field& m0) const;
};

/// Coefficients, couplings, final cost and initial density of the system
///   -u_t - a_ij u_ij + F(u, m, Du, Dm, x, t) = 0
///    m_t - c_ij m_ij + G(u, m, Du, Dm, D^2u, x, t) = 0
///    u(x, T) = h[m(T)](x),  m(x, 0) = m0(x).
struct CouplingModel {
    std::string name;
    DiffusionFn a;
    DiffusionFn c;
    CouplingF F;
    CouplingG G;
    FinalCost h;
    Field m0;

    BoundFn L_F;
    BoundFn L_G;
    double L_h = 0.0;
    double C0 = 0.0;
    double delta = 0.0;
    double ellipticity = 0.0;

    /// Present for models derived from a Hamiltonian; used by the
    /// conservative Fokker-Planck cross-check.
    DriftFn fp_drift;

    int dim() const { return m0.grid().dim(); }
};

/// Throws ModelContractError when m0 < delta somewhere, delta <= 0, or a
/// callable is missing.
void check_model(const CouplingModel& model);

}  // namespace fbmfg

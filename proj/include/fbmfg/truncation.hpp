#pragma once

#include "fbmfg/coupling_model.hpp"

namespace fbmfg {

/// Threshold K and the constants it was derived from.
struct TruncationParams {
    double K = 0.0;
    double delta = 0.0;
    double L_h = 0.0;
    double C0 = 0.0;
    /// |m0|^(1) used when selecting K.
    double m0_norm = 0.0;
};

/// Smallest admissible K:
///   K = max{2|m0|^(1), 2(L_h |m0|^(1) + C0), 2/delta}.
/// Throws ModelContractError if delta <= 0 or min m0 < delta.
TruncationParams select_K(const Field& m0, double L_h, double C0, double delta);

/// Same bound with an explicit K (e.g. from configuration); throws
/// std::invalid_argument if K is below the admissible minimum.
TruncationParams with_K(const Field& m0, double L_h, double C0, double delta, double K);

/// phi: identity on [1/K, K], clamped to it outside. Requires K >= 1.
double clamp_positive(double x, double K);
/// phi-bar: identity on [-K, K].
double clamp_symmetric(double x, double K);
/// psi: identity on |p| <= K, radial retraction onto the sphere |p| = K outside.
Vec clamp_vector(const Vec& p, double K);

/// Clamp every argument of a coupling evaluation (u with phi-bar, m with
/// phi, Du and Dm with psi); x and t pass through.
PointArgs clamp_args(const PointArgs& a, double K);

struct TruncatedCouplings {
    CouplingF F;
    CouplingG G;
};

/// F-hat = F o clamps and G-hat = G o clamps; the D^2u slot of G is not
/// clamped. Non-finite results are reported as ModelContractError.
TruncatedCouplings wrap_model(const CouplingF& F, const CouplingG& G, const TruncationParams& params);

}  // namespace fbmfg

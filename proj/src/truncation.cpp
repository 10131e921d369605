#include "fbmfg/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fbmfg {

namespace {

TruncationParams base_params(const Field& m0, double L_h, double C0, double delta) {
    if (!(delta > 0.0)) {
        throw ModelContractError("density floor delta must be positive");
    }
    if (m0.min() < delta) {
        std::ostringstream os;
        os << "initial density violates the floor: min m0 = " << m0.min() << " < delta = " << delta;
        throw ModelContractError(os.str());
    }
    if (L_h < 0.0 || C0 < 0.0) {
        throw std::invalid_argument("L_h and C0 must be nonnegative");
    }
    TruncationParams p;
    p.delta = delta;
    p.L_h = L_h;
    p.C0 = C0;
    p.m0_norm = norm_C1(m0);
    p.K = std::max({2.0 * p.m0_norm, 2.0 * (L_h * p.m0_norm + C0), 2.0 / delta});
    return p;
}

}  // namespace

TruncationParams select_K(const Field& m0, double L_h, double C0, double delta) {
    return base_params(m0, L_h, C0, delta);
}

TruncationParams with_K(const Field& m0, double L_h, double C0, double delta, double K) {
    TruncationParams p = base_params(m0, L_h, C0, delta);
    if (K < p.K) {
        std::ostringstream os;
        os << "truncation threshold K = " << K << " is below the admissible minimum " << p.K;
        throw std::invalid_argument(os.str());
    }
    p.K = K;
    return p;
}

double clamp_positive(double x, double K) { return std::min(std::max(x, 1.0 / K), K); }

double clamp_symmetric(double x, double K) { return std::min(std::max(x, -K), K); }

Vec clamp_vector(const Vec& p, double K) {
    const double r = p.norm();
    if (r <= K) return p;
    return (K / r) * p;
}

PointArgs clamp_args(const PointArgs& a, double K) {
    PointArgs c = a;
    c.u = clamp_symmetric(a.u, K);
    c.m = clamp_positive(a.m, K);
    c.Du = clamp_vector(a.Du, K);
    c.Dm = clamp_vector(a.Dm, K);
    return c;
}

TruncatedCouplings wrap_model(const CouplingF& F, const CouplingG& G, const TruncationParams& params) {
    const double K = params.K;
    TruncatedCouplings out;
    out.F = [F, K](const PointArgs& a) {
        const double v = F(clamp_args(a, K));
        if (!std::isfinite(v)) throw ModelContractError("F is not finite on clamped arguments");
        return v;
    };
    out.G = [G, K](const PointArgs& a, const Mat& H) {
        const double v = G(clamp_args(a, K), H);
        if (!std::isfinite(v)) throw ModelContractError("G is not finite on clamped arguments");
        return v;
    };
    return out;
}

}  // namespace fbmfg

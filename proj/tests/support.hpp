#pragma once

#include "fbmfg/torus_grid.hpp"

#include <cstdint>
#include <random>

namespace fbmfg::testing {

/// Smooth random field: a few low Fourier modes with random coefficients.
inline Field random_smooth(const TorusGrid& g, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double a[3][3];
    for (auto& row : a)
        for (double& v : row) v = scale * U(rng);
    return Field::sample(g, [&](const Vec& x) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double w = 6.283185307179586 * k;
            s += a[k][0] * std::cos(w * x[0]) + a[k][1] * std::sin(w * x[0]);
            if (g.dim() == 2) s += a[k][2] * std::cos(w * x[1]) * std::sin(w * x[0]);
        }
        return s;
    });
}

inline SpaceTimeField random_smooth_st(const TorusGrid& g, std::mt19937_64& rng) {
    SpaceTimeField f(g);
    const Field a = random_smooth(g, rng), b = random_smooth(g, rng);
    for (int j = 0; j <= g.nt(); ++j) {
        const double t = g.time(j);
        f.slice(j) = a + std::cos(3.0 * t) * b;
    }
    return f;
}

inline double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace fbmfg::testing

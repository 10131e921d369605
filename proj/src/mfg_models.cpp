#include "fbmfg/mfg_models.hpp"

#include "fbmfg/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fbmfg {

using std::numbers::pi;

double FinalCost::bound_offset(const Field& m0) const {
    return lipschitz * norm_C1(m0) + norm_C2(apply(m0));
}

void check_model(const CouplingModel& model) {
    if (!model.a || !model.c || !model.F || !model.G || !model.h.apply || !model.L_F || !model.L_G) {
        throw ModelContractError("model '" + model.name + "' is missing a coefficient or coupling");
    }
    if (!(model.delta > 0.0)) {
        throw ModelContractError("model '" + model.name + "' declares a nonpositive density floor");
    }
    if (!model.m0.finite()) throw ModelContractError("initial density is not finite");
    if (model.m0.min() < model.delta) {
        std::ostringstream os;
        os << "initial density violates the floor: min m0 = " << model.m0.min()
           << " < delta = " << model.delta;
        throw ModelContractError(os.str());
    }
}

namespace {

class Probe {
public:
    Probe(int dim, std::uint64_t seed) : dim_(dim), rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    /// Uniform point in the ball of radius r (restricted to the active dimensions).
    Vec ball(double r) {
        Vec v = Vec::Zero();
        for (;;) {
            for (int a = 0; a < dim_; ++a) v[a] = uniform(-r, r);
            if (v.norm() <= r) return v;
        }
    }

    Vec point() {
        Vec x = Vec::Zero();
        for (int a = 0; a < dim_; ++a) x[a] = uniform(0.0, 1.0);
        return x;
    }

    Mat symmetric(double scale) {
        Mat H = Mat::Zero();
        H(0, 0) = uniform(-scale, scale);
        if (dim_ == 2) {
            H(1, 1) = uniform(-scale, scale);
            H(0, 1) = H(1, 0) = uniform(-scale, scale);
        }
        return H;
    }

    Vec unit(int a) const {
        Vec e = Vec::Zero();
        e[a] = 1.0;
        return e;
    }

    int dim() const { return dim_; }

private:
    int dim_;
    std::mt19937_64 rng_;
};

void track(DerivativeCheck& c, double err, const char* what) {
    if (err > c.max_error) {
        c.max_error = err;
        c.worst = what;
    }
}

double rel_err(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

}  // namespace

DerivativeCheck cross_validate(const HamiltonianSpec& s, int dim, int samples, double step,
                               double tol, double radius, std::uint64_t seed) {
    if (!s.H || !s.H_p || !s.H_xp || !s.H_pp || !s.H_mp || !s.A || !s.A_div || !s.A_div2) {
        throw ModelContractError("Hamiltonian specification is missing a derivative callable");
    }
    Probe pr(dim, seed);
    DerivativeCheck c;
    const double e = step;
    for (int n = 0; n < samples; ++n) {
        const Vec x = pr.point();
        const double t = pr.uniform(0.0, 1.0);
        const Vec p = pr.ball(radius);
        const double m = pr.uniform(1.0 / radius, radius);

        const Vec Hp = s.H_p(x, t, p, m);
        const Mat Hpp = s.H_pp(x, t, p, m);
        const Vec Hmp = s.H_mp(x, t, p, m);
        double fd_xp = 0.0;
        for (int i = 0; i < dim; ++i) {
            const Vec ei = pr.unit(i);
            const double fd_p = (s.H(x, t, p + e * ei, m) - s.H(x, t, p - e * ei, m)) / (2 * e);
            track(c, rel_err(fd_p, Hp[i]), "H_p");
            for (int j = 0; j < dim; ++j) {
                const Vec ej = pr.unit(j);
                const double fd_pp = (s.H(x, t, p + e * ei + e * ej, m) - s.H(x, t, p + e * ei - e * ej, m) -
                                      s.H(x, t, p - e * ei + e * ej, m) + s.H(x, t, p - e * ei - e * ej, m)) /
                                     (4 * e * e);
                track(c, rel_err(fd_pp, Hpp(i, j)), "H_pp");
            }
            const double fd_mp = (s.H(x, t, p + e * ei, m + e) - s.H(x, t, p - e * ei, m + e) -
                                  s.H(x, t, p + e * ei, m - e) + s.H(x, t, p - e * ei, m - e)) /
                                 (4 * e * e);
            track(c, rel_err(fd_mp, Hmp[i]), "H_mp");
            fd_xp += (s.H(x + e * ei, t, p + e * ei, m) - s.H(x + e * ei, t, p - e * ei, m) -
                      s.H(x - e * ei, t, p + e * ei, m) + s.H(x - e * ei, t, p - e * ei, m)) /
                     (4 * e * e);
        }
        track(c, rel_err(fd_xp, s.H_xp(x, t, p, m)), "H_xp");

        const Vec Adiv = s.A_div(x, t);
        double fd_div2 = 0.0;
        for (int jcol = 0; jcol < dim; ++jcol) {
            double fd = 0.0;
            for (int i = 0; i < dim; ++i) {
                const Vec ei = pr.unit(i);
                fd += (s.A(x + e * ei, t)(i, jcol) - s.A(x - e * ei, t)(i, jcol)) / (2 * e);
            }
            track(c, rel_err(fd, Adiv[jcol]), "A_div");
        }
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                const Vec ei = pr.unit(i), ej = pr.unit(j);
                fd_div2 += (s.A(x + e * ei + e * ej, t)(i, j) - s.A(x + e * ei - e * ej, t)(i, j) -
                            s.A(x - e * ei + e * ej, t)(i, j) + s.A(x - e * ei - e * ej, t)(i, j)) /
                           (4 * e * e);
            }
        }
        track(c, rel_err(fd_div2, s.A_div2(x, t)), "A_div2");
    }
    c.passed = c.max_error <= tol;
    return c;
}

namespace {

CouplingModel finish(CouplingModel model, const ModelConstants& k) {
    model.L_F = k.L_F;
    model.L_G = k.L_G;
    model.delta = k.delta;
    model.ellipticity = k.ellipticity;
    model.L_h = model.h.lipschitz;
    check_model(model);
    model.C0 = model.h.bound_offset(model.m0);
    return model;
}

}  // namespace

CouplingModel build_mfg_coupling(const HamiltonianSpec& spec, Field m0, FinalCost h,
                                 ModelConstants constants, std::string name) {
    const DerivativeCheck check = cross_validate(spec, m0.grid().dim());
    if (!check.passed) {
        std::ostringstream os;
        os << "Hamiltonian derivative '" << check.worst << "' disagrees with finite differences ("
           << check.max_error << ")";
        throw ModelContractError(os.str());
    }
    CouplingModel model{.name = std::move(name), .a = spec.A, .c = spec.A, .F = {}, .G = {},
                        .h = std::move(h), .m0 = std::move(m0)};
    model.F = [spec](const PointArgs& a) { return spec.H(a.x, a.t, a.Du, a.m); };
    model.G = [spec](const PointArgs& a, const Mat& D2u) {
        const Vec Hp = spec.H_p(a.x, a.t, a.Du, a.m);
        const Mat Hpp = spec.H_pp(a.x, a.t, a.Du, a.m);
        const Vec Hmp = spec.H_mp(a.x, a.t, a.Du, a.m);
        const double div_drift = spec.H_xp(a.x, a.t, a.Du, a.m) + Hpp.cwiseProduct(D2u).sum() + Hmp.dot(a.Dm);
        return -spec.A_div2(a.x, a.t) * a.m - 2.0 * spec.A_div(a.x, a.t).dot(a.Dm) - Hp.dot(a.Dm) -
               a.m * div_drift;
    };
    model.fp_drift = [spec](const PointArgs& a) { return spec.H_p(a.x, a.t, a.Du, a.m); };
    return finish(std::move(model), constants);
}

CouplingModel build_congestion_coupling(double alpha, CongestionHamiltonian H1, CouplingCost f,
                                        DiffusionFn A, std::function<Vec(const Vec&, double)> A_div,
                                        std::function<double(const Vec&, double)> A_div2, Field m0,
                                        FinalCost h, ModelConstants constants) {
    if (!(alpha > 0.0)) throw std::invalid_argument("congestion exponent alpha must be positive");
    if (!H1.H1 || !H1.grad || !H1.hess || !f.f || !A || !A_div || !A_div2) {
        throw ModelContractError("congestion model is missing a callable");
    }
    auto require_positive = [](double m) {
        if (!(m > 0.0)) {
            throw ModelContractError("congestion coupling evaluated at m <= 0 (truncation not applied?)");
        }
    };
    CouplingModel model{.name = "congestion", .a = A, .c = A, .F = {}, .G = {},
                        .h = std::move(h), .m0 = std::move(m0)};
    model.F = [alpha, H1, f, require_positive](const PointArgs& a) {
        require_positive(a.m);
        const double ma = std::pow(a.m, alpha);
        return ma * H1.H1(a.Du / ma) - f.f(a.x, a.t, a.m);
    };
    model.G = [alpha, H1, A_div, A_div2, require_positive](const PointArgs& a, const Mat& D2u) {
        require_positive(a.m);
        const double ma = std::pow(a.m, alpha);
        const Vec q = a.Du / ma;
        const Mat Hqq = H1.hess(q);
        return -A_div2(a.x, a.t) * a.m - 2.0 * A_div(a.x, a.t).dot(a.Dm) - H1.grad(q).dot(a.Dm) -
               std::pow(a.m, 1.0 - alpha) * Hqq.cwiseProduct(D2u).sum() +
               alpha / ma * (Hqq * a.Du).dot(a.Dm);
    };
    model.fp_drift = [alpha, H1, require_positive](const PointArgs& a) {
        require_positive(a.m);
        return H1.grad(a.Du / std::pow(a.m, alpha));
    };
    return finish(std::move(model), constants);
}

// ---------------------------------------------------------------------------
// Final costs

ScalarMap ScalarMap::affine(double slope, double offset) {
    return ScalarMap{[slope, offset](double s) { return slope * s + offset; }, slope, offset};
}

Field periodic_gaussian_kernel(const TorusGrid& grid, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel width must be positive");
    // Images beyond this range contribute below double precision.
    const int images = static_cast<int>(std::ceil(9.0 * sigma)) + 1;
    auto wrapped = [&](double x) {
        double s = 0.0;
        for (int z = -images; z <= images; ++z) {
            const double d = x - z;
            s += std::exp(-d * d / (2.0 * sigma * sigma));
        }
        return s;
    };
    Field k = Field::sample(grid, [&](const Vec& x) {
        return grid.dim() == 1 ? wrapped(x[0]) : wrapped(x[0]) * wrapped(x[1]);
    });
    k *= 1.0 / k.integral();
    return k;
}

Field discrete_delta_kernel(const TorusGrid& grid) {
    Field k(grid, 0.0);
    k[0] = 1.0 / grid.cell_volume();
    return k;
}

Field periodic_convolution(const Field& m, const Field& kernel) {
    const TorusGrid& g = m.grid();
    if (!kernel.grid().same_space(g)) throw std::invalid_argument("kernel lives on a different grid");
    Field out(g, 0.0);
    const double w = g.cell_volume();
    for (std::size_t x = 0; x < g.points(); ++x) {
        const auto [xi, xj] = g.multi_index(x);
        double s = 0.0;
        for (std::size_t y = 0; y < g.points(); ++y) {
            const auto [yi, yj] = g.multi_index(y);
            s += m[y] * kernel[g.index(xi - yi, xj - yj)];
        }
        out[x] = w * s;
    }
    return out;
}

FinalCost final_cost_convolution(ScalarMap h0, const Field& kernel,
                                 std::optional<double> declared_lipschitz) {
    if (!h0.f) throw std::invalid_argument("final-cost map h0 is missing");
    if (kernel.min() < 0.0) throw std::invalid_argument("convolution kernel must be nonnegative");
    if (std::abs(kernel.integral() - 1.0) > 1e-12) {
        throw std::invalid_argument("convolution kernel must integrate to 1");
    }
    const auto nonzero = std::count_if(kernel.values().begin(), kernel.values().end(),
                                       [](double v) { return v != 0.0; });
    FinalCost out;
    out.regularizing = nonzero > 1;
    out.kind = out.regularizing ? "convolution" : "convolution(delta)";
    if (h0.slope) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < kernel.size(); ++k) d2 += hessian_at(kernel, k).norm();
        d2 *= kernel.grid().cell_volume();
        out.lipschitz = std::abs(*h0.slope) * (1.0 + d2);
        out.lipschitz_derived = true;
    } else if (declared_lipschitz) {
        out.lipschitz = *declared_lipschitz;
        out.lipschitz_derived = false;
    } else {
        throw std::invalid_argument(
            "non-affine h0 requires a declared Lipschitz constant for the final cost");
    }
    out.apply = [h0, kernel](const Field& m) {
        Field w = periodic_convolution(m, kernel);
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = h0.f(w[k]);
        return w;
    };
    return out;
}

FinalCost final_cost_constant(const Field& u_T) {
    if (!u_T.finite()) throw std::invalid_argument("constant final cost must be finite");
    FinalCost out;
    out.kind = "constant";
    out.lipschitz = 0.0;
    out.apply = [u_T](const Field& m) {
        if (!m.grid().same_space(u_T.grid())) throw std::invalid_argument("grid mismatch in final cost");
        return Field(m.grid(), std::vector<double>(u_T.values().begin(), u_T.values().end()));
    };
    return out;
}

// ---------------------------------------------------------------------------
// Assumption audit

AssumptionReport validate_assumptions(const CouplingModel& model, double K, int samples,
                                      std::uint64_t seed) {
    if (samples < 100) throw std::invalid_argument("assumption audit needs at least 100 samples");
    const double R = 2.0 * K;
    const double LF = model.L_F(R);
    const double LG = model.L_G(R);
    Probe pr(model.dim(), seed);
    auto draw = [&]() {
        PointArgs a;
        a.u = pr.uniform(-R, R);
        a.m = pr.uniform(1.0 / R, R);
        a.Du = pr.ball(R);
        a.Dm = pr.ball(R);
        a.x = pr.point();
        a.t = pr.uniform(0.0, 1.0);
        return a;
    };
    auto nearby = [&](const PointArgs& a) {
        PointArgs b = a;
        const double s = 1e-3 * R;
        b.u = std::clamp(a.u + pr.uniform(-s, s), -R, R);
        b.m = std::clamp(a.m + pr.uniform(-s, s), 1.0 / R, R);
        b.Du = clamp_vector(a.Du + pr.ball(s), R);
        b.Dm = clamp_vector(a.Dm + pr.ball(s), R);
        return b;
    };

    AssumptionReport rep;
    rep.samples = samples;
    for (int n = 0; n < samples; ++n) {
        const PointArgs a = draw();
        const PointArgs b = (n % 2 == 0) ? nearby(a) : [&] {
            PointArgs c = draw();
            c.x = a.x;
            c.t = a.t;
            return c;
        }();
        const double dist = std::abs(a.u - b.u) + std::abs(a.m - b.m) + (a.Du - b.Du).norm() +
                            (a.Dm - b.Dm).norm();
        const double Fa = model.F(a), Fb = model.F(b);
        rep.F_bound_ratio = std::max(rep.F_bound_ratio, std::abs(Fa) / LF);
        if (dist > 0.0) {
            rep.F_lipschitz_ratio = std::max(rep.F_lipschitz_ratio, std::abs(Fa - Fb) / (LF * dist));
        }
        const Mat H1 = pr.symmetric(R);
        const Mat H2 = (n % 2 == 0) ? Mat(H1 + pr.symmetric(1e-3 * R)) : pr.symmetric(R);
        const double Ga = model.G(a, H1), Gb = model.G(b, H2);
        rep.G_bound_ratio = std::max(rep.G_bound_ratio, std::abs(Ga) / (LG * (1.0 + H1.norm())));
        const double denom = LG * dist * (1.0 + H1.norm()) + LG * (H1 - H2).norm();
        if (denom > 0.0) rep.G_lipschitz_ratio = std::max(rep.G_lipschitz_ratio, std::abs(Ga - Gb) / denom);
    }
    rep.G_affinity_deviation = G_affinity_deviation(model, 100, seed + 1);

    constexpr double slack = 1.0 + 1e-12;
    auto flag = [&](double ratio, const char* what) {
        if (ratio > slack) {
            std::ostringstream os;
            os << what << " exceeds its declared constant (ratio " << ratio << ")";
            rep.violations.push_back(os.str());
        }
    };
    flag(rep.F_bound_ratio, "|F|");
    flag(rep.F_lipschitz_ratio, "Lipschitz bound of F");
    flag(rep.G_bound_ratio, "|G|");
    flag(rep.G_lipschitz_ratio, "Lipschitz bound of G");
    if (rep.G_affinity_deviation > 1e-8) {
        rep.violations.push_back("G is not affine in its second-derivative slot");
    }
    return rep;
}

double G_affinity_deviation(const CouplingModel& model, int probes, std::uint64_t seed) {
    Probe pr(model.dim(), seed);
    double worst = 0.0;
    for (int n = 0; n < probes; ++n) {
        PointArgs a;
        a.u = pr.uniform(-2.0, 2.0);
        a.m = pr.uniform(0.5, 2.0);
        a.Du = pr.ball(2.0);
        a.Dm = pr.ball(2.0);
        a.x = pr.point();
        a.t = pr.uniform(0.0, 1.0);
        const Mat H = pr.symmetric(5.0);
        const Mat E = pr.symmetric(1.0);
        const double g0 = model.G(a, H);
        const double g1 = model.G(a, H + E);
        const double g2 = model.G(a, H + 2.0 * E);
        const double scale = std::max({1.0, std::abs(g0), std::abs(g1), std::abs(g2)});
        worst = std::max(worst, std::abs(g2 - 2.0 * g1 + g0) / scale);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Ready-made models

Field cosine_density(const TorusGrid& grid, double amplitude) {
    return Field::sample(grid, [&](const Vec& x) {
        const double c = std::cos(2.0 * pi * x[0]);
        return 1.0 + amplitude * (grid.dim() == 1 ? c : c * std::cos(2.0 * pi * x[1]));
    });
}

HamiltonianSpec quadratic_hamiltonian(double nu, double coupling) {
    HamiltonianSpec s;
    s.H = [coupling](const Vec&, double, const Vec& p, double m) { return 0.5 * p.squaredNorm() - coupling * m; };
    s.H_p = [](const Vec&, double, const Vec& p, double) { return p; };
    s.H_xp = [](const Vec&, double, const Vec&, double) { return 0.0; };
    s.H_pp = [](const Vec&, double, const Vec&, double) { return Mat(Mat::Identity()); };
    s.H_mp = [](const Vec&, double, const Vec&, double) { return Vec(Vec::Zero()); };
    s.A = [nu](const Vec&, double) { return Mat(nu * Mat::Identity()); };
    s.A_div = [](const Vec&, double) { return Vec(Vec::Zero()); };
    s.A_div2 = [](const Vec&, double) { return 0.0; };
    return s;
}

CouplingModel quadratic_mfg_model(const Field& m0, double nu, double coupling, double sigma) {
    const double rootN = std::sqrt(static_cast<double>(m0.grid().dim()));
    ModelConstants k;
    // |F| <= R^2/2 + cR, Lipschitz max(R, c).
    k.L_F = [coupling](double R) { return 0.5 * R * R + coupling * R + R + coupling; };
    // |G| <= R^2 + R sqrt(N) |H|; Lipschitz in (p, q) by R, in m by sqrt(N)|H|, in H by R sqrt(N).
    k.L_G = [rootN](double R) { return R * R + rootN * R + R + rootN; };
    k.delta = m0.min();
    k.ellipticity = nu;
    return build_mfg_coupling(quadratic_hamiltonian(nu, coupling), m0,
                              final_cost_convolution(ScalarMap::affine(1.0),
                                                     periodic_gaussian_kernel(m0.grid(), sigma)),
                              k, "quadratic-mfg");
}

CouplingModel congestion_model(const Field& m0, double alpha, double nu, double coupling,
                               double sigma) {
    const double rootN = std::sqrt(static_cast<double>(m0.grid().dim()));
    CongestionHamiltonian H1{
        [](const Vec& q) { return 0.5 * q.squaredNorm(); },
        [](const Vec& q) { return q; },
        [](const Vec&) { return Mat(Mat::Identity()); },
    };
    CouplingCost f{[coupling](const Vec&, double, double m) { return coupling * m; }};
    ModelConstants k;
    // F = |p|^2 / (2 m^a) - c m on |p| <= R, 1/R <= m <= R.
    k.L_F = [alpha, coupling](double R) {
        return 0.5 * std::pow(R, 2 + alpha) + coupling * R + std::pow(R, 1 + alpha) +
               0.5 * alpha * std::pow(R, 3 + alpha) + coupling;
    };
    // G = (a-1)(p.q) m^-a - m^(1-a) tr(H).
    k.L_G = [alpha, rootN](double R) {
        const double a1 = std::abs(alpha - 1.0);
        return a1 * (std::pow(R, 2 + alpha) + std::pow(R, 1 + alpha) + alpha * std::pow(R, 3 + alpha)) +
               a1 * rootN * std::pow(R, alpha) + rootN * std::pow(R, a1);
    };
    k.delta = m0.min();
    k.ellipticity = nu;
    return build_congestion_coupling(
        alpha, H1, f, [nu](const Vec&, double) { return Mat(nu * Mat::Identity()); },
        [](const Vec&, double) { return Vec(Vec::Zero()); }, [](const Vec&, double) { return 0.0; },
        m0,
        final_cost_convolution(ScalarMap::affine(1.0), periodic_gaussian_kernel(m0.grid(), sigma)),
        k);
}

CouplingModel decoupled_heat_model(const Field& m0, double nu, const Field& u_T) {
    CouplingModel model{.name = "decoupled-heat",
                        .a = [nu](const Vec&, double) { return Mat(nu * Mat::Identity()); },
                        .c = [nu](const Vec&, double) { return Mat(nu * Mat::Identity()); },
                        .F = [](const PointArgs&) { return 0.0; },
                        .G = [](const PointArgs&, const Mat&) { return 0.0; },
                        .h = final_cost_constant(u_T),
                        .m0 = m0};
    ModelConstants k;
    k.L_F = [](double) { return 1.0; };
    k.L_G = [](double) { return 1.0; };
    k.delta = m0.min();
    k.ellipticity = nu;
    return finish(std::move(model), k);
}

}  // namespace fbmfg

#include "fbmfg/spectral_counterexample.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fbmfg::spectral {

using std::numbers::pi;

namespace {

double trig(Trig kind, int k, double x) {
    const double a = 2.0 * pi * k * x;
    return kind == Trig::cos ? std::cos(a) : std::sin(a);
}

}  // namespace

double Mode::lambda(int dim) const {
    const double k2 = dim == 1 ? k[0] * k[0] : k[0] * k[0] + k[1] * k[1];
    return 4.0 * pi * pi * k2;
}

double Mode::eval(const Vec& x, int dim) const {
    const double f = trig(kind[0], k[0], x[0]);
    return dim == 1 ? f : f * trig(kind[1], k[1], x[1]);
}

bool Mode::degenerate(int dim) const {
    for (int d = 0; d < dim; ++d) {
        if (kind[static_cast<std::size_t>(d)] == Trig::sin && k[static_cast<std::size_t>(d)] == 0) return true;
    }
    return false;
}

double Mode::norm2(int dim) const {
    double n = 1.0;
    for (int d = 0; d < dim; ++d) {
        if (k[static_cast<std::size_t>(d)] != 0) n *= 0.5;
    }
    return n;
}

Mode parse_mode(const std::string& label, int dim) {
    Mode m;
    std::size_t pos = 0;
    for (int d = 0; d < dim; ++d) {
        if (d == 1) {
            if (pos >= label.size() || label[pos] != 'x') {
                throw std::invalid_argument("2D mode label needs the form c1xs2: '" + label + "'");
            }
            ++pos;
        }
        if (pos >= label.size() || (label[pos] != 'c' && label[pos] != 's')) {
            throw std::invalid_argument("mode label must start with c or s: '" + label + "'");
        }
        m.kind[static_cast<std::size_t>(d)] = label[pos] == 'c' ? Trig::cos : Trig::sin;
        ++pos;
        const std::size_t start = pos;
        while (pos < label.size() && std::isdigit(static_cast<unsigned char>(label[pos]))) ++pos;
        if (pos == start) throw std::invalid_argument("mode label lacks a wavenumber: '" + label + "'");
        m.k[static_cast<std::size_t>(d)] = std::stoi(label.substr(start, pos - start));
    }
    if (pos != label.size()) throw std::invalid_argument("trailing characters in mode label '" + label + "'");
    if (m.degenerate(dim)) throw std::invalid_argument("mode '" + label + "' vanishes identically");
    return m;
}

std::string mode_label(const Mode& m, int dim) {
    std::string s;
    for (int d = 0; d < dim; ++d) {
        if (d == 1) s += 'x';
        s += m.kind[static_cast<std::size_t>(d)] == Trig::cos ? 'c' : 's';
        s += std::to_string(m.k[static_cast<std::size_t>(d)]);
    }
    return s;
}

std::vector<ModeCoefficient> parse_modes(const std::string& text, int dim) {
    std::vector<ModeCoefficient> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("mode entry must be label:coefficient, got '" + item + "'");
        }
        ModeCoefficient c;
        c.mode = parse_mode(item.substr(0, colon), dim);
        std::size_t used = 0;
        const std::string num = item.substr(colon + 1);
        c.m0 = std::stod(num, &used);
        if (used != num.size() || !std::isfinite(c.m0)) {
            throw std::invalid_argument("bad mode coefficient '" + num + "'");
        }
        for (const auto& o : out) {
            if (o.mode == c.mode) throw std::invalid_argument("duplicate mode '" + item + "'");
        }
        out.push_back(c);
    }
    if (out.empty()) throw std::invalid_argument("mode list is empty");
    return out;
}

std::string format_modes(const std::vector<ModeCoefficient>& modes, int dim) {
    std::string s;
    char buf[64];
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (i) s += ';';
        std::snprintf(buf, sizeof buf, "%.17g", modes[i].m0);
        s += mode_label(modes[i].mode, dim) + ":" + buf;
    }
    return s;
}

std::optional<double> critical_times(double alpha, double lambda) {
    if (!(lambda > 0.0) || !(alpha < -2.0)) return std::nullopt;
    return std::atanh(-1.0 / (alpha + 1.0)) / lambda;
}

double scaled_denominator(double alpha, double lambda, double T) {
    return 0.5 * ((alpha + 2.0) - alpha * std::exp(-2.0 * lambda * T));
}

// m_k(t) = B [(alpha+2) e^{-lambda t} - alpha e^{lambda (t - 2T)}] / (2 D),
// D the scaled denominator; algebraically equal to A sinh + B cosh.
double ModeSolution::m(double t, double alpha, double T) const {
    if (B == 0.0) return 0.0;
    const double c = B / (2.0 * scaled_denominator);
    return c * ((alpha + 2.0) * std::exp(-lambda * t) - alpha * std::exp(lambda * (t - 2.0 * T)));
}

double ModeSolution::dm(double t, double alpha, double T) const {
    if (B == 0.0) return 0.0;
    const double c = B / (2.0 * scaled_denominator);
    return c * lambda * (-(alpha + 2.0) * std::exp(-lambda * t) - alpha * std::exp(lambda * (t - 2.0 * T)));
}

double ModeSolution::d2m(double t, double alpha, double T) const {
    if (B == 0.0) return 0.0;
    const double c = B / (2.0 * scaled_denominator);
    return c * lambda * lambda *
           ((alpha + 2.0) * std::exp(-lambda * t) - alpha * std::exp(lambda * (t - 2.0 * T)));
}

double ModeSolution::u(double t, double alpha, double T) const {
    return alpha * m(T, alpha, T) * std::exp(lambda * (t - T));
}

SpectralSolution solve_spectral(double alpha, const std::vector<ModeCoefficient>& m0, double T, int dim,
                                double tol_denom) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    SpectralSolution sol;
    sol.alpha = alpha;
    sol.T = T;
    sol.dim = dim;
    for (const auto& c : m0) {
        ModeSolution s;
        s.coeff = c;
        s.lambda = c.mode.lambda(dim);
        s.B = c.m0;
        s.scaled_denominator = scaled_denominator(alpha, s.lambda, T);
        if (c.m0 == 0.0) {
            s.A = 0.0;
            s.solvable = true;
        } else if (std::abs(s.scaled_denominator) <= tol_denom) {
            s.solvable = false;
            s.A = std::numeric_limits<double>::quiet_NaN();
            sol.solvable = false;
        } else {
            const double e = std::exp(-2.0 * s.lambda * T);
            const double num = 0.5 * ((alpha + 2.0) + alpha * e);
            s.A = -s.B * num / s.scaled_denominator;
        }
        sol.modes.push_back(s);
    }
    return sol;
}

std::pair<SpaceTimeField, SpaceTimeField> synthesize_fields(const SpectralSolution& sol,
                                                            const TorusGrid& grid) {
    if (!sol.solvable) throw std::invalid_argument("cannot synthesize an unsolvable spectral problem");
    if (grid.dim() != sol.dim) throw std::invalid_argument("grid dimension differs from the solution's");
    if (std::abs(grid.T() - sol.T) > 1e-14 * sol.T) {
        throw std::invalid_argument("grid horizon differs from the solution's");
    }
    SpaceTimeField u(grid), m(grid);
    std::vector<Field> basis;
    for (const auto& s : sol.modes) {
        basis.push_back(Field::sample(grid, [&](const Vec& x) { return s.coeff.mode.eval(x, grid.dim()); }));
    }
    for (int j = 0; j <= grid.nt(); ++j) {
        const double t = grid.time(j);
        for (std::size_t q = 0; q < sol.modes.size(); ++q) {
            const double mk = sol.modes[q].m(t, sol.alpha, sol.T);
            const double uk = sol.modes[q].u(t, sol.alpha, sol.T);
            for (std::size_t k = 0; k < grid.points(); ++k) {
                m.slice(j)[k] += mk * basis[q][k];
                u.slice(j)[k] += uk * basis[q][k];
            }
        }
    }
    return {u, m};
}

Field sample_datum(const std::vector<ModeCoefficient>& m0, const TorusGrid& grid) {
    Field f(grid, 0.0);
    for (const auto& c : m0) {
        for (std::size_t k = 0; k < grid.points(); ++k) {
            f[k] += c.m0 * c.mode.eval(grid.position(k), grid.dim());
        }
    }
    return f;
}

Field project(const Field& f, const std::vector<Mode>& modes) {
    const TorusGrid& g = f.grid();
    Field out(g, 0.0);
    for (const auto& mode : modes) {
        const Field phi = Field::sample(g, [&](const Vec& x) { return mode.eval(x, g.dim()); });
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < g.points(); ++k) {
            num += f[k] * phi[k];
            den += phi[k] * phi[k];
        }
        const double c = num / den;
        for (std::size_t k = 0; k < g.points(); ++k) out[k] += c * phi[k];
    }
    return out;
}

FinalCost final_cost_pointwise(double scale, const TorusGrid& grid) {
    FinalCost h;
    h.kind = "pointwise";
    h.regularizing = false;
    // |D^2 f|_F <= sqrt(16 dim + 2 (dim - 1)) sup|f| / h^2 for the discrete Hessian.
    const double d = grid.dim();
    h.lipschitz = std::abs(scale) * (1.0 + std::sqrt(16.0 * d + 2.0 * (d - 1.0)) * grid.n() * grid.n());
    h.apply = [scale](const Field& m) {
        Field out = m;
        out *= scale;
        return out;
    };
    return h;
}

FinalCost final_cost_projected(double scale, const std::vector<Mode>& modes, const TorusGrid& grid) {
    for (const auto& m : modes) {
        if (2 * std::max(m.k[0], grid.dim() == 2 ? m.k[1] : 0) >= grid.n()) {
            throw std::invalid_argument("projection mode is not resolved by the grid");
        }
    }
    FinalCost h;
    h.kind = "projected";
    // |c_k| <= sup|M| sum|phi_k| / sum phi_k^2, so |P M|^(2) <= sum_k that * |phi_k|^(2).
    double L = 0.0;
    for (const auto& mode : modes) {
        const Field phi = Field::sample(grid, [&](const Vec& x) { return mode.eval(x, grid.dim()); });
        double l1 = 0.0, l2 = 0.0;
        for (double v : phi.values()) {
            l1 += std::abs(v);
            l2 += v * v;
        }
        L += l1 / l2 * norm_C2(phi);
    }
    h.lipschitz = std::abs(scale) * L;
    h.apply = [scale, modes](const Field& m) {
        Field out = project(m, modes);
        out *= scale;
        return out;
    };
    return h;
}

CouplingModel linear_counterexample_model(double alpha, const std::vector<ModeCoefficient>& m0,
                                          const TorusGrid& grid, bool pointwise) {
    std::vector<Mode> modes;
    for (const auto& c : m0) modes.push_back(c.mode);
    CouplingModel model{
        .name = "linear-counterexample",
        .a = [](const Vec&, double) { return Mat(Mat::Identity()); },
        .c = [](const Vec&, double) { return Mat(Mat::Identity()); },
        .F = [](const PointArgs&) { return 0.0; },
        .G = [](const PointArgs&, const Mat& D2u) { return -D2u.trace(); },
        .h = pointwise ? final_cost_pointwise(alpha, grid) : final_cost_projected(alpha, modes, grid),
        .m0 = sample_datum(m0, grid),
    };
    const double rootN = std::sqrt(static_cast<double>(grid.dim()));
    model.L_F = [](double) { return 1.0; };
    model.L_G = [rootN](double) { return rootN; };
    model.delta = model.m0.min();
    model.ellipticity = 1.0;
    model.L_h = model.h.lipschitz;
    check_model(model);
    model.C0 = model.h.bound_offset(model.m0);
    return model;
}

}  // namespace fbmfg::spectral

#include "fbmfg/torus_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fbmfg {

TorusGrid::TorusGrid(int dim, int n, int nt, double T)
    : dim_(dim), n_(n), nt_(nt), T_(T),
      points_(dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n) {}

TorusGrid TorusGrid::make(int dim, int n, int nt, double T) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
    }
    if (n < 8) {
        throw std::invalid_argument("grid needs at least 8 points per dimension, got " +
                                    std::to_string(n));
    }
    if (nt < 2) {
        throw std::invalid_argument("grid needs at least 2 time steps, got " + std::to_string(nt));
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw std::invalid_argument("horizon T must be positive and finite");
    }
    return TorusGrid(dim, n, nt, T);
}

Vec TorusGrid::position(std::size_t idx) const {
    auto [i, j] = multi_index(idx);
    return Vec(coord(i), dim_ == 2 ? coord(j) : 0.0);
}

// ---------------------------------------------------------------------------
// Field

Field::Field(const TorusGrid& grid, double fill) : grid_(grid), values_(grid.points(), fill) {}

Field::Field(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.points()) {
        throw std::invalid_argument("field size does not match grid");
    }
}

Field Field::sample(const TorusGrid& grid, const std::function<double(const Vec&)>& fn) {
    Field f(grid);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = fn(grid.position(k));
    return f;
}

bool Field::finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

double Field::sup() const {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
}

double Field::integral() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * grid_.cell_volume();
}

Field& Field::operator+=(const Field& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

// ---------------------------------------------------------------------------
// SpaceTimeField

SpaceTimeField::SpaceTimeField(const TorusGrid& grid, double fill)
    : grid_(grid), slices_(static_cast<std::size_t>(grid.nt() + 1), Field(grid, fill)) {}

SpaceTimeField SpaceTimeField::constant_in_time(const TorusGrid& grid, const Field& slice) {
    SpaceTimeField f(grid);
    for (auto& s : f.slices_) s = Field(grid, std::vector<double>(slice.values().begin(),
                                                                  slice.values().end()));
    return f;
}

SpaceTimeField SpaceTimeField::sample(const TorusGrid& grid,
                                      const std::function<double(const Vec&, double)>& fn) {
    SpaceTimeField f(grid);
    for (int j = 0; j <= grid.nt(); ++j) {
        const double t = grid.time(j);
        f.slice(j) = Field::sample(grid, [&](const Vec& x) { return fn(x, t); });
    }
    return f;
}

bool SpaceTimeField::finite() const {
    return std::all_of(slices_.begin(), slices_.end(), [](const Field& s) { return s.finite(); });
}

double SpaceTimeField::min() const {
    double m = slices_.front().min();
    for (const auto& s : slices_) m = std::min(m, s.min());
    return m;
}

double SpaceTimeField::max() const {
    double m = slices_.front().max();
    for (const auto& s : slices_) m = std::max(m, s.max());
    return m;
}

double SpaceTimeField::sup() const {
    double m = 0.0;
    for (const auto& s : slices_) m = std::max(m, s.sup());
    return m;
}

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& o) {
    for (std::size_t j = 0; j < slices_.size(); ++j) slices_[j] += o.slices_[j];
    return *this;
}

SpaceTimeField& SpaceTimeField::operator-=(const SpaceTimeField& o) {
    for (std::size_t j = 0; j < slices_.size(); ++j) slices_[j] -= o.slices_[j];
    return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double s) {
    for (auto& f : slices_) f *= s;
    return *this;
}

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
SpaceTimeField operator*(double s, SpaceTimeField a) { return a *= s; }

// ---------------------------------------------------------------------------
// Difference operators

Vec gradient_at(const Field& f, std::size_t idx) {
    const TorusGrid& g = f.grid();
    const auto [i, j] = g.multi_index(idx);
    const double inv2h = 0.5 * g.n();
    Vec d(0.0, 0.0);
    d[0] = (f[g.index(i + 1, j)] - f[g.index(i - 1, j)]) * inv2h;
    if (g.dim() == 2) d[1] = (f[g.index(i, j + 1)] - f[g.index(i, j - 1)]) * inv2h;
    return d;
}

Mat hessian_at(const Field& f, std::size_t idx) {
    const TorusGrid& g = f.grid();
    const auto [i, j] = g.multi_index(idx);
    const double inv_h2 = static_cast<double>(g.n()) * g.n();
    Mat H = Mat::Zero();
    const double c = f[idx];
    H(0, 0) = (f[g.index(i + 1, j)] - 2.0 * c + f[g.index(i - 1, j)]) * inv_h2;
    if (g.dim() == 2) {
        H(1, 1) = (f[g.index(i, j + 1)] - 2.0 * c + f[g.index(i, j - 1)]) * inv_h2;
        const double cross = (f[g.index(i + 1, j + 1)] - f[g.index(i + 1, j - 1)] -
                              f[g.index(i - 1, j + 1)] + f[g.index(i - 1, j - 1)]) *
                             0.25 * inv_h2;
        H(0, 1) = cross;
        H(1, 0) = cross;
    }
    return H;
}

double laplacian_at(const Field& f, std::size_t idx) {
    const Mat H = hessian_at(f, idx);
    return H(0, 0) + H(1, 1);
}

std::vector<Field> gradient(const Field& f) {
    const TorusGrid& g = f.grid();
    std::vector<Field> out(static_cast<std::size_t>(g.dim()), Field(g));
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Vec d = gradient_at(f, k);
        for (int a = 0; a < g.dim(); ++a) out[static_cast<std::size_t>(a)][k] = d[a];
    }
    return out;
}

Mat HessianField::at(std::size_t idx) const {
    Mat H = Mat::Zero();
    H(0, 0) = diagonal[0][idx];
    if (diagonal.size() == 2) {
        H(1, 1) = diagonal[1][idx];
        H(0, 1) = mixed[0][idx];
        H(1, 0) = mixed[0][idx];
    }
    return H;
}

HessianField hessian(const Field& f) {
    const TorusGrid& g = f.grid();
    HessianField out;
    out.diagonal.assign(static_cast<std::size_t>(g.dim()), Field(g));
    if (g.dim() == 2) out.mixed.assign(1, Field(g));
    for (std::size_t k = 0; k < f.size(); ++k) {
        const Mat H = hessian_at(f, k);
        out.diagonal[0][k] = H(0, 0);
        if (g.dim() == 2) {
            out.diagonal[1][k] = H(1, 1);
            out.mixed[0][k] = H(0, 1);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norms

double sup_gradient(const Field& f) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s = std::max(s, gradient_at(f, k).norm());
    return s;
}

double norm_C1(const Field& f) { return f.sup() + sup_gradient(f); }

double norm_C2(const Field& f) {
    double s2 = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s2 = std::max(s2, hessian_at(f, k).norm());
    return norm_C1(f) + s2;
}

double norm_C10(const SpaceTimeField& f) {
    double s0 = 0.0;
    double s1 = 0.0;
    for (int j = 0; j < f.slices(); ++j) {
        s0 = std::max(s0, f.slice(j).sup());
        s1 = std::max(s1, sup_gradient(f.slice(j)));
    }
    return s0 + s1;
}

Field time_derivative(const SpaceTimeField& f, int j) {
    const TorusGrid& g = f.grid();
    const int nt = g.nt();
    const int lo = j < nt ? j : nt - 1;
    Field d = f.slice(lo + 1) - f.slice(lo);
    d *= 1.0 / g.dt();
    return d;
}

double norm_W21p(const SpaceTimeField& f, double p) {
    const TorusGrid& g = f.grid();
    const double w = g.cell_volume() * g.dt();
    double acc = 0.0;
    for (int j = 0; j < g.nt(); ++j) {
        const Field& s = f.slice(j);
        const Field ft = time_derivative(f, j);
        for (std::size_t k = 0; k < s.size(); ++k) {
            acc += std::pow(std::abs(s[k]), p) + std::pow(gradient_at(s, k).norm(), p) +
                   std::pow(hessian_at(s, k).norm(), p) + std::pow(std::abs(ft[k]), p);
        }
    }
    return std::pow(w * acc, 1.0 / p);
}

double norm_Lp(const SpaceTimeField& f, double p) {
    const TorusGrid& g = f.grid();
    double acc = 0.0;
    for (int j = 0; j < g.nt(); ++j) {
        for (double v : f.slice(j).values()) acc += std::pow(std::abs(v), p);
    }
    return std::pow(g.cell_volume() * g.dt() * acc, 1.0 / p);
}

}  // namespace fbmfg

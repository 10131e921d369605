#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fbmfg {

/// Small vectors and matrices on the torus. The second component is unused
/// (and kept at zero) when the grid is one-dimensional, so Euclidean and
/// Frobenius norms are correct for both dimensions.
using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

/// Uniform periodic space-time grid on T^dim x [0, T], torus side 1.
///
/// Coordinates are produced from integer indices (x_i = i / n) and neighbour
/// lookups wrap modulo n, so periodicity is exact.
class TorusGrid {
public:
    /// Throws std::invalid_argument unless dim in {1,2}, n >= 8, nt >= 2, T > 0.
    static TorusGrid make(int dim, int n, int nt, double T);

    int dim() const { return dim_; }
    int n() const { return n_; }
    int nt() const { return nt_; }
    double T() const { return T_; }
    double h() const { return 1.0 / n_; }
    double dt() const { return T_ / nt_; }

    /// Number of spatial points, n^dim.
    std::size_t points() const { return points_; }
    /// Volume element h^dim.
    double cell_volume() const { return dim_ == 1 ? h() : h() * h(); }

    double coord(int i) const { return static_cast<double>(i) / n_; }
    /// Time of slice j; slice nt is exactly T.
    double time(int j) const { return j == nt_ ? T_ : j * dt(); }

    int wrap(int i) const { return ((i % n_) + n_) % n_; }
    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(wrap(i)) +
               (dim_ == 2 ? static_cast<std::size_t>(wrap(j)) * n_ : 0);
    }
    /// Integer coordinates (i, j) of a flat index; j = 0 in one dimension.
    std::pair<int, int> multi_index(std::size_t idx) const {
        return {static_cast<int>(idx % n_), static_cast<int>(idx / n_)};
    }
    Vec position(std::size_t idx) const;

    /// Same spatial grid with a new horizon and step count.
    TorusGrid with_horizon(double T, int nt) const { return make(dim_, n_, nt, T); }
    bool same_space(const TorusGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }

    bool operator==(const TorusGrid&) const = default;

private:
    TorusGrid(int dim, int n, int nt, double T);

    int dim_ = 1;
    int n_ = 8;
    int nt_ = 2;
    double T_ = 1.0;
    std::size_t points_ = 8;
};

/// Scalar samples on one time slice.
class Field {
public:
    explicit Field(const TorusGrid& grid, double fill = 0.0);
    Field(const TorusGrid& grid, std::vector<double> values);

    /// Samples fn at every grid point.
    static Field sample(const TorusGrid& grid, const std::function<double(const Vec&)>& fn);

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool finite() const;
    double min() const;
    double max() const;
    double sup() const;
    /// h^dim * sum of values.
    double integral() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);

    bool operator==(const Field& o) const { return values_ == o.values_; }

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Scalar samples on all nt+1 time slices.
class SpaceTimeField {
public:
    explicit SpaceTimeField(const TorusGrid& grid, double fill = 0.0);
    /// Every slice equal to `slice`.
    static SpaceTimeField constant_in_time(const TorusGrid& grid, const Field& slice);
    static SpaceTimeField sample(const TorusGrid& grid,
                                 const std::function<double(const Vec&, double)>& fn);

    const TorusGrid& grid() const { return grid_; }
    int slices() const { return static_cast<int>(slices_.size()); }
    Field& slice(int j) { return slices_[static_cast<std::size_t>(j)]; }
    const Field& slice(int j) const { return slices_[static_cast<std::size_t>(j)]; }

    bool finite() const;
    double min() const;
    double max() const;
    double sup() const;

    SpaceTimeField& operator+=(const SpaceTimeField& o);
    SpaceTimeField& operator-=(const SpaceTimeField& o);
    SpaceTimeField& operator*=(double s);

    bool operator==(const SpaceTimeField& o) const { return slices_ == o.slices_; }

private:
    TorusGrid grid_;
    std::vector<Field> slices_;
};

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator*(double s, SpaceTimeField a);

/// Second-order central gradient at one point.
Vec gradient_at(const Field& f, std::size_t idx);
/// Second-order Hessian at one point: 3-point diagonal, 4-point cross for
/// the mixed entry. Exactly symmetric.
Mat hessian_at(const Field& f, std::size_t idx);
/// 3-point discrete Laplacian at one point.
double laplacian_at(const Field& f, std::size_t idx);

/// Gradient components, one Field per dimension.
std::vector<Field> gradient(const Field& f);

/// Independent Hessian entries; (0,1) and (1,0) share storage.
struct HessianField {
    std::vector<Field> diagonal;  // dim entries
    std::vector<Field> mixed;     // empty in 1D, one entry in 2D
    Mat at(std::size_t idx) const;
};
HessianField hessian(const Field& f);

/// Torus norms of one slice: sup|f| + sup|Df| and sup|f| + sup|Df| + sup|D^2 f|.
/// |Df| is Euclidean, |D^2 f| is Frobenius.
double norm_C1(const Field& f);
double norm_C2(const Field& f);
double sup_gradient(const Field& f);

/// sup|f| + sup|Df| over all slices.
double norm_C10(const SpaceTimeField& f);
/// Discrete parabolic Sobolev norm
/// (sum h^dim dt (|f|^p + |Df|^p + |D^2 f|^p + |f_t|^p))^(1/p), left
/// rectangle rule over slices 0..nt-1, f_t by forward differences.
double norm_W21p(const SpaceTimeField& f, double p);
/// (sum h^dim dt |f|^p)^(1/p) with the same quadrature.
double norm_Lp(const SpaceTimeField& f, double p);
/// Forward difference in time; the last slice reuses the backward difference.
Field time_derivative(const SpaceTimeField& f, int j);

}  // namespace fbmfg

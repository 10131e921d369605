#include "fbmfg/parabolic_stepper.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace fbmfg {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class Form { nondivergence, conservative };

const DiffusionSlice& diffusion_at(const ParabolicProblem& p, int j) {
    return p.diffusion.size() == 1 ? p.diffusion.front() : p.diffusion[static_cast<std::size_t>(j)];
}

void validate(const ParabolicProblem& p, Form form) {
    const std::size_t nt1 = static_cast<std::size_t>(p.grid.nt() + 1);
    if (p.diffusion.size() != 1 && p.diffusion.size() != nt1) {
        throw std::invalid_argument("diffusion must have 1 or nt+1 slices");
    }
    if (!p.initial.grid().same_space(p.grid)) {
        throw std::invalid_argument("initial datum lives on a different grid");
    }
    if (p.source && p.source->slices() != static_cast<int>(nt1)) {
        throw std::invalid_argument("source must have nt+1 slices");
    }
    if (p.reaction && p.reaction->slices() != static_cast<int>(nt1)) {
        throw std::invalid_argument("reaction must have nt+1 slices");
    }
    if (form == Form::conservative) {
        if (!p.drift) throw std::invalid_argument("conservative solve requires a drift");
        if (p.drift->size() != nt1) throw std::invalid_argument("drift must have nt+1 slices");
    }
    if (!p.initial.finite()) throw SolverError("initial datum is not finite", 0);
}

/// Ellipticity and positivity-restriction checks for one coefficient slice.
void check_coefficients(const ParabolicProblem& p, const DiffusionSlice& d, int j) {
    const TorusGrid& g = p.grid;
    double max_offdiag = 0.0;
    for (std::size_t k = 0; k < g.points(); ++k) {
        double lo = d.xx[k];
        if (g.dim() == 2) {
            const double a = d.xx[k], b = d.xy[k], c = d.yy[k];
            lo = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
            max_offdiag = std::max(max_offdiag, std::abs(b));
        }
        const double floor = p.ellipticity > 0.0 ? p.ellipticity : 0.0;
        if (!(lo > 0.0) || lo < floor) {
            std::ostringstream os;
            os << "diffusion is not uniformly elliptic at slice " << j << ", point " << k
               << " (smallest eigenvalue " << lo << ")";
            throw SolverError(os.str(), j);
        }
    }
    if (p.positivity && max_offdiag > 0.0) {
        const double h = g.h();
        const double limit = h * h / (8.0 * max_offdiag);
        if (g.dt() > limit) {
            std::ostringstream os;
            os << "dt = " << g.dt() << " exceeds the positivity limit " << limit << " at slice " << j;
            throw SolverError(os.str(), j);
        }
    }
}

/// 4-point cross stencil applied to (w * f) at point idx: d_xy(w f).
double cross_term(const Field& f, const Field* weight, std::size_t idx) {
    const TorusGrid& g = f.grid();
    const auto [i, j] = g.multi_index(idx);
    auto val = [&](int a, int b) {
        const std::size_t q = g.index(a, b);
        return weight ? (*weight)[q] * f[q] : f[q];
    };
    const double inv_h2 = static_cast<double>(g.n()) * g.n();
    return (val(i + 1, j + 1) - val(i + 1, j - 1) - val(i - 1, j + 1) + val(i - 1, j - 1)) * 0.25 *
           inv_h2;
}

/// Assembles I + dt L for slice j. Mixed derivatives are included in the
/// matrix only when the positivity flag is off.
SpMat assemble(const ParabolicProblem& p, int j, Form form) {
    const TorusGrid& g = p.grid;
    const DiffusionSlice& d = diffusion_at(p, j);
    const double dt = g.dt();
    const double inv_h2 = static_cast<double>(g.n()) * g.n();
    const double inv_h = static_cast<double>(g.n());
    const std::size_t N = g.points();

    std::vector<Triplet> trip;
    trip.reserve(N * (g.dim() == 2 ? 9 : 3));
    for (std::size_t k = 0; k < N; ++k) {
        const auto [i, jj] = g.multi_index(k);
        const int row = static_cast<int>(k);
        double diag = 1.0;
        if (p.reaction) diag += dt * p.reaction->slice(j)[k];

        auto add = [&](std::size_t col, double v) { trip.emplace_back(row, static_cast<int>(col), v); };

        // Second-order terms along each axis.
        for (int axis = 0; axis < g.dim(); ++axis) {
            const Field& c = axis == 0 ? d.xx : d.yy;
            const std::size_t kp = axis == 0 ? g.index(i + 1, jj) : g.index(i, jj + 1);
            const std::size_t km = axis == 0 ? g.index(i - 1, jj) : g.index(i, jj - 1);
            if (form == Form::nondivergence) {
                diag += 2.0 * dt * c[k] * inv_h2;
                add(kp, -dt * c[k] * inv_h2);
                add(km, -dt * c[k] * inv_h2);
            } else {
                diag += 2.0 * dt * c[k] * inv_h2;
                add(kp, -dt * c[kp] * inv_h2);
                add(km, -dt * c[km] * inv_h2);
            }
        }

        if (g.dim() == 2 && !p.positivity) {
            // -2 c_12 d_xy v, 4-point cross.
            const double s = 2.0 * dt * 0.25 * inv_h2;
            const int off[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
            for (const auto& o : off) {
                const std::size_t q = g.index(i + o[0], jj + o[1]);
                const double w = form == Form::nondivergence ? d.xy[k] : d.xy[q];
                add(q, -s * o[2] * w);
            }
        }

        if (form == Form::conservative) {
            // Upwind flux for velocity w = -b: face flux w_f^+ v_left + w_f^- v_right.
            const DriftSlice& b = (*p.drift)[static_cast<std::size_t>(j)];
            for (int axis = 0; axis < g.dim(); ++axis) {
                const Field& bc = b.components[static_cast<std::size_t>(axis)];
                const std::size_t kp = axis == 0 ? g.index(i + 1, jj) : g.index(i, jj + 1);
                const std::size_t km = axis == 0 ? g.index(i - 1, jj) : g.index(i, jj - 1);
                const double w_plus = -0.5 * (bc[k] + bc[kp]);
                const double w_minus = -0.5 * (bc[km] + bc[k]);
                diag += dt * inv_h * (std::max(w_plus, 0.0) - std::min(w_minus, 0.0));
                add(kp, dt * inv_h * std::min(w_plus, 0.0));
                add(km, -dt * inv_h * std::max(w_minus, 0.0));
            }
        }
        add(k, diag);
    }
    SpMat A(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

/// Backward-Euler driver that reuses the factorization when the operator
/// does not change between slices.
class Stepper {
public:
    Stepper(const ParabolicProblem& p, Form form) : p_(p), form_(form) {
        validate(p, form);
        frozen_ = p.diffusion.size() == 1 && !p.reaction && !p.drift;
        if (frozen_) check_coefficients(p_, p_.diffusion.front(), 0);
        direct_ = p.grid.dim() == 1 || p.solver.force_direct;
    }

    Field step(const Field& prev, int j) {
        const TorusGrid& g = p_.grid;
        const double dt = g.dt();
        const DiffusionSlice& d = diffusion_at(p_, j);
        if (!frozen_) check_coefficients(p_, d, j);

        Eigen::VectorXd rhs(static_cast<Eigen::Index>(g.points()));
        for (std::size_t k = 0; k < g.points(); ++k) {
            double r = prev[k];
            if (p_.source) r -= dt * p_.source->slice(j)[k];
            if (g.dim() == 2 && p_.positivity) {
                const Field* w = form_ == Form::conservative ? &d.xy : nullptr;
                const double cross = cross_term(prev, w, k);
                r += dt * 2.0 * (form_ == Form::conservative ? cross : d.xy[k] * cross);
            }
            rhs[static_cast<Eigen::Index>(k)] = r;
        }

        if (!frozen_ || !ready_) factor(j);
        Eigen::VectorXd x;
        if (direct_) {
            x = lu_.solve(rhs);
        } else {
            x = krylov_.solve(rhs);
            if (krylov_.info() != Eigen::Success) {
                std::ostringstream os;
                os << "Krylov solve did not converge at slice " << j << " (estimated residual "
                   << krylov_.error() << ")";
                throw SolverError(os.str(), j);
            }
        }
        const double bnorm = rhs.norm();
        const double rnorm = (rhs - A_ * x).norm();
        const double tol = direct_ ? 1e-10 : p_.solver.krylov_tol;
        if (bnorm > 0.0 && rnorm > tol * bnorm) {
            std::ostringstream os;
            os << "linear solve residual " << rnorm / bnorm << " above tolerance at slice " << j;
            throw SolverError(os.str(), j);
        }
        Field out(g, std::vector<double>(x.data(), x.data() + x.size()));
        if (!out.finite()) {
            std::ostringstream os;
            os << "non-finite value produced at slice " << j << " (t = " << g.time(j) << ")";
            throw SolverError(os.str(), j);
        }
        return out;
    }

private:
    void factor(int j) {
        A_ = assemble(p_, j, form_);
        if (direct_) {
            lu_.analyzePattern(A_);
            lu_.factorize(A_);
            if (lu_.info() != Eigen::Success) {
                throw SolverError("sparse LU factorization failed at slice " + std::to_string(j), j);
            }
        } else {
            // Eigen's recursive residual can drift from the true one; aim lower.
            krylov_.setTolerance(0.5 * p_.solver.krylov_tol);
            krylov_.setMaxIterations(1000);
            krylov_.compute(A_);
            if (krylov_.info() != Eigen::Success) {
                throw SolverError("preconditioner setup failed at slice " + std::to_string(j), j);
            }
        }
        ready_ = true;
    }

    const ParabolicProblem& p_;
    Form form_;
    bool frozen_ = false;
    bool direct_ = true;
    bool ready_ = false;
    SpMat A_;
    Eigen::SparseLU<SpMat> lu_;
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> krylov_;
};

SpaceTimeField march(const ParabolicProblem& p, Form form) {
    Stepper stepper(p, form);
    SpaceTimeField out(p.grid);
    out.slice(0) = p.initial;
    for (int j = 1; j <= p.grid.nt(); ++j) out.slice(j) = stepper.step(out.slice(j - 1), j);
    return out;
}

template <typename T>
void reverse_slices(std::vector<T>& v) {
    std::reverse(v.begin(), v.end());
}

SpaceTimeField reversed(const SpaceTimeField& f) {
    SpaceTimeField r(f.grid());
    const int nt = f.grid().nt();
    for (int j = 0; j <= nt; ++j) r.slice(j) = f.slice(nt - j);
    return r;
}

}  // namespace

std::vector<DiffusionSlice> sample_diffusion(const TorusGrid& grid, const DiffusionFn& fn,
                                             bool time_dependent) {
    const int count = time_dependent ? grid.nt() + 1 : 1;
    std::vector<DiffusionSlice> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const double t = grid.time(j);
        DiffusionSlice s{Field(grid), Field(grid), Field(grid)};
        for (std::size_t k = 0; k < grid.points(); ++k) {
            const Mat c = fn(grid.position(k), t);
            s.xx[k] = c(0, 0);
            s.xy[k] = 0.5 * (c(0, 1) + c(1, 0));
            s.yy[k] = c(1, 1);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DiffusionSlice> isotropic_diffusion(const TorusGrid& grid, double nu) {
    return {DiffusionSlice{Field(grid, nu), Field(grid, 0.0), Field(grid, nu)}};
}

Field step_implicit(const ParabolicProblem& problem, const Field& previous, int j) {
    if (j < 1 || j > problem.grid.nt()) throw std::out_of_range("slice index out of range");
    Stepper stepper(problem, problem.drift ? Form::conservative : Form::nondivergence);
    return stepper.step(previous, j);
}

SpaceTimeField solve_forward(const ParabolicProblem& problem) {
    return march(problem, Form::nondivergence);
}

ParabolicProblem time_reversed(const ParabolicProblem& problem) {
    ParabolicProblem r = problem;
    if (r.diffusion.size() > 1) reverse_slices(r.diffusion);
    if (r.source) r.source = reversed(*r.source);
    if (r.reaction) r.reaction = reversed(*r.reaction);
    if (r.drift) reverse_slices(*r.drift);
    return r;
}

SpaceTimeField solve_backward(const ParabolicProblem& problem) {
    return reversed(march(time_reversed(problem), Form::nondivergence));
}

SpaceTimeField solve_fp_conservative(const ParabolicProblem& problem) {
    return march(problem, Form::conservative);
}

}  // namespace fbmfg

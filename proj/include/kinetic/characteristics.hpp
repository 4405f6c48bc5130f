#pragma once

// Small-scale oracle built on the characteristic representation of the
// linearized problem. Given a frozen time stack f(τ), the curves
//     dX/dτ = V,   dV/dτ = -γ E[f](τ, X, V)
// carry the solution h(t, z) = f0(Z(0; t, z)) exp(γ d ∫_0^t rho_f(τ, X(τ)) dτ),
// and iterating f -> h converges to the nonlinear solution on short horizons.

#include <vector>

#include "kinetic/phase_grid.hpp"

namespace kinetic {

/// Time-indexed stack of fields on [0, T_loc] (uniform slice spacing).
struct IterateField {
    PhaseGrid grid;
    std::vector<double> times;
    std::vector<DistributionField> slices;
    int iteration = 0;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

/// Every slice equal to f0, times k T_loc / n_intervals for k = 0..n_intervals.
IterateField constant_stack(const DistributionField& f0, double T_loc, int n_intervals);

/// Moments of every slice, interpolated linearly in x (between cell centers)
/// and in t (between slices).
class StackMoments {
public:
    explicit StackMoments(const IterateField& stack);

    bool inside(const Vec& x) const;
    double rho(double t, const Vec& x) const;
    Vec mom(double t, const Vec& x) const;
    const PhaseGrid& grid() const { return grid_; }

private:
    PhaseGrid grid_;
    std::vector<double> times_;
    std::vector<MomentField> m_;

    template <class Get>
    double sample(double t, const Vec& x, Get get) const;
};

struct CharState {
    Vec x{};
    Vec v{};
    double s = 0.0;  // time the state refers to
    double t = 0.0;  // time the curve started from
    double rho_integral = 0.0;  // ∫_s^t rho(τ, X(τ)) dτ along the curve
};

/// Z(s; t, z) by classical RK4 with steps no longer than half the slice
/// spacing; the density integral uses the trapezoid rule on the RK4 nodes.
/// Throws DomainExit if X leaves the position grid.
CharState solve_characteristic(const StackMoments& m, double gamma, const Vec& x, const Vec& v,
                               double t, double s, double max_step);
CharState solve_characteristic(const IterateField& stack, double gamma, const Vec& x,
                               const Vec& v, double t, double s);

/// Multilinear interpolation of cell-center values; zero off the grid.
double interpolate_field(const DistributionField& f, const Vec& x, const Vec& v);

/// One application of the representation map: every slice of the result is
/// h(t_k, ·) evaluated at the cell centers. Curves that leave the grid give 0.
IterateField picard_apply(const IterateField& stack, const DistributionField& f0, double gamma);

struct PicardResult {
    IterateField stack;
    std::vector<double> increments;  // sup-norm change per iteration
    double T_loc = 0.0;
    int halvings = 0;
};

/// Iterates from the constant stack until the sup-norm increment drops below
/// tol. Throws NoConvergence (carrying the increments) after max_iter.
PicardResult picard_fixed_point(const DistributionField& f0, double gamma, double T_loc,
                                double tol, int max_iter, int n_intervals = 16);

/// picard_fixed_point, halving T_loc on NoConvergence up to max_halvings times.
PicardResult picard_adaptive(const DistributionField& f0, double gamma, double T_loc, double tol,
                             int max_iter, int n_intervals = 16, int max_halvings = 4);

}  // namespace kinetic

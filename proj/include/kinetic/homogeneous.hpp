#pragma once

// Spatially homogeneous alignment dynamics. With mass m and mean velocity
// vbar conserved, the flow is a linear contraction of velocities toward vbar
// at rate gamma*m, and the density is amplified by exp(gamma*m*d*t).

#include <functional>
#include <span>

#include "kinetic/phase_grid.hpp"

namespace kinetic {

struct HomogeneousState {
    double gamma = 1.0;
    int d = 1;
    double m = 0.0;   // mass of f0
    Vec p{};          // momentum of f0
    Vec vbar{};       // p / m
    std::function<double(const Vec&)> f0;

    // Summary of f0 used by the closed-form observable laws.
    double f0_sup = 0.0;             // ||f0||_inf
    double f0_radius = 0.0;          // sup |v - vbar| over supp f0
    double f0_central_energy = 0.0;  // ∫ |v - vbar|^2 f0
    double f0_entropy = 0.0;         // ∫ f0 log f0

    /// Uniform density `height` on the cube |v_a - center_a| <= half_width.
    static HomogeneousState uniform(double gamma, int d, double half_width, double height,
                                    const Vec& center = {});

    /// Builds the state from f0 with every summary computed by midpoint
    /// quadrature on the velocity axes of `g`.
    static HomogeneousState from_profile(double gamma, const PhaseGrid& g,
                                         std::function<double(const Vec&)> f0);
};

/// f(t, v) = exp(gamma m d t) f0(vbar + exp(gamma m t) (v - vbar)).
double exact_solution(const HomogeneousState& s, double t, const Vec& v);

/// Samples exact_solution at the velocity cell centers of `g`.
std::vector<double> exact_solution_on_grid(const HomogeneousState& s, double t,
                                           const PhaseGrid& g);

struct HomogeneousObservables {
    double sup = 0.0;
    double radius = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
};

/// Closed-form laws: sup norm grows like exp(gamma m d t), the support radius
/// decays like exp(-gamma m t), the energy relaxes to m|vbar|^2 at rate
/// 2 gamma m, and the entropy grows linearly with slope gamma m^2 d.
HomogeneousObservables exact_observables(const HomogeneousState& s, double t);

/// Exact evolution of one velocity slice over dt with mass density rho and
/// mean velocity u frozen (the homogeneous flow with m -> rho, vbar -> u).
/// The contraction v -> u + exp(-gamma rho dt)(v - u) is applied by a
/// conservative parabolic remap per velocity axis, followed by a first-order
/// tilt that restores the mean velocity of the exact map. `out` may not
/// alias `in`.
void alignment_substep(std::span<const double> in, std::span<double> out, const PhaseGrid& g,
                       double rho, const Vec& u, double gamma, double dt);

}  // namespace kinetic

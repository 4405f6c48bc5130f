#pragma once

// Mono-kinetic reduction in one dimension: f = rho(t, x) ⊗ δ(v - u(t, x))
// with u solving inviscid Burgers and rho the continuity equation. Tracked
// on Lagrangian markers, which carry constant velocity until they cross.

#include <functional>
#include <vector>

#include "kinetic/phase_grid.hpp"

namespace kinetic {

struct Marker {
    double x0 = 0.0;    // label (initial position)
    double x = 0.0;     // current position
    double u = 0.0;     // velocity, constant along the characteristic
    double rho0 = 0.0;  // initial density
    double rho = 0.0;   // current density
};

struct MonokineticState {
    std::vector<Marker> markers;
    double t = 0.0;
    bool crossed = false;
    double cross_lo = 0.0, cross_hi = 0.0;  // bracketing interval once crossed
};

/// n markers at the midpoints of n equal sub-intervals of [a, b].
MonokineticState make_monokinetic(const std::function<double(double)>& u0,
                                  const std::function<double(double)>& rho0, double a, double b,
                                  std::size_t n);

/// u0(x) = -x, rho0 = 1 on [-1/2, 1/2]: u = x/(t-1), rho = 1/(1-t), blow-up at t = 1.
MonokineticState golden_monokinetic(std::size_t n);

/// Advances to t + dt. Positions are x0 + u t; densities follow the
/// neighbor-gap Jacobian rho0 Δx0 / Δx (central inside, one-sided at the
/// ends). Throws BlowUp (state left at t + dt, crossed set) when adjacent
/// markers swap order, and on any call after crossing.
void evolve(MonokineticState& s, double dt);

/// Signed minimal gap x_{i+1} - x_i.
double min_gap(const MonokineticState& s);
/// max |u_{i+1} - u_i| / |x_{i+1} - x_i| over adjacent pairs.
double max_velocity_gradient(const MonokineticState& s);
double peak_density(const MonokineticState& s);
/// Σ rho_i times the local marker spacing.
double monokinetic_mass(const MonokineticState& s);

struct MonoSample {
    double t = 0.0;
    double min_gap = 0.0;
    double max_dxu = 0.0;
    double peak_rho = 0.0;
};

MonoSample sample(const MonokineticState& s);

struct BlowupEstimate {
    double t_star = 0.0;
    std::vector<std::pair<double, double>> gradient_growth;  // (t, max|∂x u|)
};

/// Linear interpolation of the minimal gap to zero between the last two
/// samples around the sign change. Throws NotBlownUp if no sample crossed.
BlowupEstimate blowup_estimate(const std::vector<MonoSample>& series);

/// rho(x) ⊗ N(u(x), width^2) on the grid: cloud-in-cell in x, exact Gaussian
/// cell integrals in v.
DistributionField deposit_to_grid(const MonokineticState& s, const PhaseGrid& g, double width);

}  // namespace kinetic

#pragma once

// Free-transport pullback U0(-t) f(t), Cauchy residuals between pullbacks and
// the Duhamel tail bound ∫_t^∞ γ ||∇v·(E[f] f)||_L1 that dominates them.

#include <span>
#include <vector>

#include "kinetic/phase_grid.hpp"

namespace kinetic {

struct PullbackField {
    DistributionField field;
    double t = 0.0;
    double clipped_mass = 0.0;  // mass pushed off the x-grid by the pullback
};

/// g(x, v) = f(x + v t, v) by conservative remap of every velocity row.
/// Throws SupportClipped when more than 1e-6 of the mass leaves the grid,
/// unless `allow_clip` is set (then the loss is only reported).
PullbackField pullback(const DistributionField& f, double t, bool allow_clip = false);

/// L1 distance Σ|g1 - g2| dx^d dv^d. Throws GridMismatch.
double cauchy_residual(const PullbackField& g1, const PullbackField& g2);
double l1_distance(const DistributionField& a, const DistributionField& b);

/// γ ||∇v·(E[f] f)||_L1 evaluated as γ Σ |d rho f + E·∇v f| with centered
/// differences for ∇v f (zero outside the velocity grid).
double alignment_divergence_l1(const DistributionField& f, const MomentField& m, double gamma);
double alignment_divergence_l1(const DistributionField& f, double gamma);

/// Sampled Duhamel integrand n(τ) = γ ||∇v·(E f)(τ)||_L1 of one run.
struct DuhamelSeries {
    int d = 2;
    double radius = 1.0;  // R of the initial support box
    std::vector<double> t;
    std::vector<double> integrand;
};

struct TailReport {
    double measured = 0.0;       // trapezoid over [t, T_end]
    double extrapolated = 0.0;   // envelope integral over [T_end, ∞)
    bool finite = true;          // false in d = 1, where the envelope is not integrable
    double value() const { return measured + extrapolated; }
};

/// Trapezoid integral of the series over [t, T_end] plus the integral of the
/// envelope C h^d(τ) + C (1+τ) h^{d+1}(τ), h(τ) = min(2R, 2R/τ), with C fitted
/// to the last sample.
TailReport duhamel_tail(const DuhamelSeries& s, double t);

/// Trapezoid integral of the series over [t1, t2] (linear interpolation at
/// the ends).
double duhamel_integral(const DuhamelSeries& s, double t1, double t2);

/// Least-squares exponent of n(τ) ~ τ^a over samples with τ >= t_from.
/// The tail looks integrable when a < -1.
double decay_exponent(const DuhamelSeries& s, double t_from);

}  // namespace kinetic

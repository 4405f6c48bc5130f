#pragma once

// Conservative one-dimensional remap of cell averages under affine maps.
//
// Data live on a uniform grid measured in cell units: cell i covers [i, i+1].
// The field is reconstructed with limited piecewise parabolae (zero data
// outside the grid), except that a cell between a denser neighbor and vacuum
// is a step against the denser side, which keeps support edges sharp. The
// reconstruction is pushed forward through
//     y = pivot + scale * (x - pivot) + shift,   scale > 0,
// so each output cell receives exactly the reconstructed mass of its
// preimage interval. Mass is conserved up to what leaves the grid; the
// limiter keeps nonnegative input nonnegative and never widens the support
// beyond the cells the mapped support touches.

#include <span>
#include <vector>

namespace kinetic::remap {

struct Workspace {
    std::vector<double> left, right, curv;  // per-cell edge values and curvature term
    std::vector<double> face;
    // Cells bordering vacuum on one side are reconstructed as a step holding
    // the inner neighbor's value: frac > 0 is the filled fraction, measured
    // from the left edge (left_filled) or from the right edge.
    std::vector<double> step_frac, step_value;
    std::vector<char> left_filled;
};

/// Builds the limited parabola of every cell of `in` into `ws`.
void reconstruct(std::span<const double> in, Workspace& ws);

/// ∫_a^b of the reconstruction (cell units); [a, b] is clipped to the grid.
double integrate(std::span<const double> in, const Workspace& ws, double a, double b);

/// Pushes `in` forward through the affine map and writes cell averages to
/// `out` (same length). Returns the mass (sum of cell averages) that left
/// the grid. `in` and `out` must not alias.
double affine_remap(std::span<const double> in, std::span<double> out, double scale,
                    double shift, double pivot, Workspace& ws);

/// Translation by `shift` cells.
inline double shift_remap(std::span<const double> in, std::span<double> out, double shift,
                          Workspace& ws) {
    return affine_remap(in, out, 1.0, shift, 0.0, ws);
}

/// Translation by `shift` cells with the limited-downwind (antidiffusive)
/// flux: each face flux is the value closest to the downwind average that
/// keeps both adjacent updates within their upwind bounds. Steps are
/// transported without smearing (at most one partially filled cell per
/// edge); the scheme is conservative, positive up to round-off and never
/// creates new extrema. Whole-cell parts of the shift are applied exactly. Returns the
/// mass that left the grid.
double antidiffusive_shift(std::span<const double> in, std::span<double> out, double shift);

}  // namespace kinetic::remap

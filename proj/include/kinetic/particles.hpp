#pragma once

// Rescaled Cucker-Smale particle system with moderate interactions,
//     dx_i/dt = v_i,   dv_i/dt = κ Σ_j ψ(|x_j - x_i| / eps) (v_j - v_i),
// with N eps^d = 1 so that κ ∫ψ = γ is the kinetic coupling.

#include <cstdint>
#include <span>
#include <vector>

#include "kinetic/kinetic_solver.hpp"
#include "kinetic/phase_grid.hpp"

namespace kinetic {

enum class PsiShape {
    Indicator,  // 1_{r < R}
    Triangle,   // (1 - r/R)_+
};

struct PsiSpec {
    PsiShape shape = PsiShape::Indicator;
    double radius = 1.0;

    double operator()(double r) const noexcept {
        if (shape == PsiShape::Indicator) return r < radius ? 1.0 : 0.0;
        return r < radius ? 1.0 - r / radius : 0.0;
    }
    /// ∫_{R^d} ψ(|z|) dz in closed form.
    double integral(int d) const;
};

struct CouplingCalibration {
    double gamma_target = 0.0;
    double kappa = 0.0;
    double psi_integral = 0.0;
};

/// κ = γ / ∫ψ. Throws ZeroWeight when ∫ψ = 0.
CouplingCalibration calibrate_kappa(double gamma_target, const PsiSpec& psi, int d);

struct ParticleEnsemble {
    int d = 1;
    std::vector<Vec> x, v;
    double eps = 1.0;
    double kappa = 0.0;
    PsiSpec psi;

    std::size_t size() const noexcept { return x.size(); }

    /// N particles at the origin with eps = N^{-1/d} and κ calibrated to γ.
    static ParticleEnsemble make(int d, std::size_t N, double gamma, const PsiSpec& psi = {});
};

/// Deterministic 64-bit generator with split-mix output.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() noexcept;
    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept { return double(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// i.i.d. uniform positions and velocities on the patch cube.
void sample_patch(ParticleEnsemble& ens, const PatchSpec& patch, std::uint64_t seed);

/// Accelerations via a uniform cell list of cell size eps * R_psi. Neighbor
/// contributions are summed in increasing j, so the result equals the brute
/// force sum bit for bit.
std::vector<Vec> rcs_rhs(const ParticleEnsemble& ens);
/// O(N^2) reference evaluation.
std::vector<Vec> rcs_rhs_bruteforce(const ParticleEnsemble& ens);

/// One classical RK4 step of the coupled system.
void step_rk4(ParticleEnsemble& ens, double dt);

/// min(1e-3, eps / (4 max|v|)).
double particle_dt(const ParticleEnsemble& ens);

Vec mean_velocity(const ParticleEnsemble& ens);
/// max_i |v_i - mean velocity|.
double velocity_diameter(const ParticleEnsemble& ens);

struct BinnedField {
    DistributionField field;
    std::size_t out_of_domain = 0;
};

/// Cloud-in-cell deposition of weight 1/N per particle, divided by the cell
/// volume. Particles in the outer half cells deposit onto the edge cells, so
/// the field mass equals the in-domain fraction.
BinnedField bin_empirical(const ParticleEnsemble& ens, const PhaseGrid& grid);

/// L1 distance per matched pair. Throws GridMismatch.
std::vector<double> compare_to_kinetic(std::span<const DistributionField> empirical,
                                       std::span<const DistributionField> kinetic);

}  // namespace kinetic

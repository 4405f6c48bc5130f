#include "kinetic/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/scattering.hpp"

namespace kinetic {

double PsiSpec::integral(int d) const {
    const double r = radius;
    if (shape == PsiShape::Indicator) return d == 1 ? 2.0 * r : M_PI * r * r;
    // ∫ (1 - |z|/R)_+ : R in d = 1, π R^2 / 3 in d = 2
    return d == 1 ? r : M_PI * r * r / 3.0;
}

CouplingCalibration calibrate_kappa(double gamma_target, const PsiSpec& psi, int d) {
    const double w = psi.radius > 0.0 ? psi.integral(d) : 0.0;
    if (!(w > 0.0)) throw ZeroWeight("interaction weight has zero integral");
    return {gamma_target, gamma_target / w, w};
}

ParticleEnsemble ParticleEnsemble::make(int d, std::size_t N, double gamma, const PsiSpec& psi) {
    if (d != 1 && d != 2) throw ValidationError("particle dimension must be 1 or 2");
    if (N == 0) throw ValidationError("ensemble needs at least one particle");
    ParticleEnsemble e;
    e.d = d;
    e.x.assign(N, Vec{});
    e.v.assign(N, Vec{});
    e.eps = d == 1 ? 1.0 / double(N) : 1.0 / std::sqrt(double(N));
    e.psi = psi;
    e.kappa = calibrate_kappa(gamma, psi, d).kappa;
    return e;
}

std::uint64_t SplitMix64::next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void sample_patch(ParticleEnsemble& ens, const PatchSpec& patch, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        for (int a = 0; a < ens.d; ++a) ens.x[i][a] = patch.center_x[a] + patch.side * (rng.uniform() - 0.5);
        for (int a = 0; a < ens.d; ++a) ens.v[i][a] = patch.center_v[a] + patch.side * (rng.uniform() - 0.5);
    }
}

namespace {

double distance(const Vec& a, const Vec& b, int d) {
    if (d == 1) return std::abs(a[0] - b[0]);
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

// κ Σ_j ψ(|x_j - x_i| / eps) (v_j - v_i) over the listed j, in list order.
// Positions and velocities are read through `at`, so callers can pass a
// reordered copy.
template <class At>
Vec pair_sum(const ParticleEnsemble& e, const Vec& xi, const Vec& vi, std::span<const std::size_t> js,
             At at) {
    Vec acc{};
    for (std::size_t j : js) {
        const auto [xj, vj] = at(j);
        const double w = e.psi(distance(xj, xi, e.d) / e.eps);
        if (w == 0.0) continue;
        for (int a = 0; a < e.d; ++a) acc[a] += w * (vj[a] - vi[a]);
    }
    for (int a = 0; a < e.d; ++a) acc[a] *= e.kappa;
    return acc;
}

}  // namespace

std::vector<Vec> rcs_rhs_bruteforce(const ParticleEnsemble& ens) {
    const std::size_t n = ens.size();
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<Vec> a(n);
    auto at = [&](std::size_t j) { return std::pair<const Vec&, const Vec&>{ens.x[j], ens.v[j]}; };
    parallel_for(n, [&](std::size_t i) { a[i] = pair_sum(ens, ens.x[i], ens.v[i], all, at); });
    return a;
}

std::vector<Vec> rcs_rhs(const ParticleEnsemble& ens) {
    const std::size_t n = ens.size();
    std::vector<Vec> acc(n, Vec{});
    if (n == 0 || ens.kappa == 0.0) return acc;
    Vec lo{0.0, 0.0}, hi{0.0, 0.0};
    double area = 1.0;
    for (int a = 0; a < ens.d; ++a) {
        lo[a] = hi[a] = ens.x[0][a];
        for (const Vec& x : ens.x) {
            lo[a] = std::min(lo[a], x[a]);
            hi[a] = std::max(hi[a], x[a]);
        }
        area *= hi[a] - lo[a];
    }
    // cells no smaller than the interaction range; widened when the ensemble
    // is so spread out that the table would dwarf it (extra candidates have
    // zero weight, so the sums are unchanged)
    const double budget = 16.0 * double(n) + 1024.0;
    const double cell = std::max(ens.eps * ens.psi.radius, std::pow(area / budget, 1.0 / ens.d));
    auto coord = [&](const Vec& x, int a) {
        return static_cast<std::int64_t>(std::floor((x[a] - lo[a]) / cell));
    };
    // flattened cell key, x-cell major; the y stride leaves a guard cell on
    // each side so neighbor keys never wrap into the next x column
    const std::int64_t stride = ens.d == 2 ? coord(hi, 1) + 3 : 1;
    const std::int64_t ncx = coord(hi, 0) + 1;
    const std::size_t ncells = std::size_t(ncx * stride);
    std::vector<std::int64_t> key(n);
    for (std::size_t i = 0; i < n; ++i)
        key[i] = coord(ens.x[i], 0) * stride + (ens.d == 2 ? coord(ens.x[i], 1) + 1 : 0);
    // counting sort: particles grouped by cell, increasing index within a cell
    std::vector<std::uint32_t> start(ncells + 1, 0);
    for (std::int64_t k : key) ++start[std::size_t(k) + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::uint32_t> order(n);
    {
        std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) order[fill[std::size_t(key[i])]++] = std::uint32_t(i);
    }

    // cell-ordered copies keep the neighbor reads local
    std::vector<Vec> xs(n), vs(n), acc_sorted(n);
    std::vector<std::int64_t> keys(n);
    for (std::size_t r = 0; r < n; ++r) {
        xs[r] = ens.x[order[r]];
        vs[r] = ens.v[order[r]];
        keys[r] = key[order[r]];
    }
    auto at = [&](std::size_t r) { return std::pair<const Vec&, const Vec&>{xs[r], vs[r]}; };
    auto by_index = [&](std::size_t a, std::size_t b) { return order[a] < order[b]; };

    const std::int64_t span_y = ens.d == 2 ? 1 : 0;
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> cand;
        for (std::size_t r = begin; r < end; ++r) {
            const std::int64_t k = keys[r];
            cand.clear();
            const std::int64_t cx = k / stride;
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                if (cx + dx < 0 || cx + dx >= ncx) continue;
                // the y-neighbors of an x column are adjacent cells
                const std::int64_t first = k + dx * stride - span_y;
                const std::int64_t last = k + dx * stride + span_y;
                for (std::uint32_t q = start[std::size_t(first)]; q < start[std::size_t(last) + 1]; ++q)
                    cand.push_back(q);
            }
            // summation in increasing particle index, as in the brute force
            std::sort(cand.begin(), cand.end(), by_index);
            acc_sorted[r] = pair_sum(ens, xs[r], vs[r], cand, at);
        }
    });
    for (std::size_t r = 0; r < n; ++r) acc[order[r]] = acc_sorted[r];
    return acc;
}

void step_rk4(ParticleEnsemble& ens, double dt) {
    if (!(dt > 0.0)) throw ValidationError("particle dt must be positive");
    const std::size_t n = ens.size();
    const int d = ens.d;
    ParticleEnsemble stage = ens;
    std::vector<Vec> kx[4], kv[4];
    const double c[4] = {0.0, 0.5, 0.5, 1.0};
    for (int s = 0; s < 4; ++s) {
        if (s > 0) {
            for (std::size_t i = 0; i < n; ++i)
                for (int a = 0; a < d; ++a) {
                    stage.x[i][a] = ens.x[i][a] + c[s] * dt * kx[s - 1][i][a];
                    stage.v[i][a] = ens.v[i][a] + c[s] * dt * kv[s - 1][i][a];
                }
        }
        kx[s] = stage.v;
        kv[s] = rcs_rhs(stage);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) {
            ens.x[i][a] += dt / 6.0 * (kx[0][i][a] + 2.0 * kx[1][i][a] + 2.0 * kx[2][i][a] + kx[3][i][a]);
            ens.v[i][a] += dt / 6.0 * (kv[0][i][a] + 2.0 * kv[1][i][a] + 2.0 * kv[2][i][a] + kv[3][i][a]);
        }
}

double particle_dt(const ParticleEnsemble& ens) {
    double vmax = 0.0;
    for (const Vec& v : ens.v) vmax = std::max(vmax, std::hypot(v[0], v[1]));
    if (vmax == 0.0) return 1e-3;
    return std::min(1e-3, ens.eps / (4.0 * vmax));
}

Vec mean_velocity(const ParticleEnsemble& ens) {
    Vec m{};
    if (ens.size() == 0) return m;
    for (const Vec& v : ens.v)
        for (int a = 0; a < ens.d; ++a) m[a] += v[a];
    for (int a = 0; a < ens.d; ++a) m[a] /= double(ens.size());
    return m;
}

double velocity_diameter(const ParticleEnsemble& ens) {
    const Vec m = mean_velocity(ens);
    double worst = 0.0;
    for (const Vec& v : ens.v) worst = std::max(worst, std::hypot(v[0] - m[0], v[1] - m[1]));
    return worst;
}

BinnedField bin_empirical(const ParticleEnsemble& ens, const PhaseGrid& g) {
    if (ens.d != g.d) throw GridMismatch("ensemble and grid dimensions differ");
    BinnedField out{DistributionField(g), 0};
    if (ens.size() == 0) return out;
    const double weight = 1.0 / (double(ens.size()) * g.cell_volume());
    const int axes = 2 * g.d;
    for (std::size_t p = 0; p < ens.size(); ++p) {
        int idx[4];
        double w[4];
        int len[4];
        bool inside = true;
        for (int a = 0; a < axes; ++a) {
            const bool pos = a < g.d;
            const double z = pos ? ens.x[p][a] - g.x0() : ens.v[p][a - g.d] - g.v0();
            const double h = pos ? g.dx : g.dv;
            len[a] = pos ? g.nx : g.nv;
            if (z < 0.0 || z > len[a] * h) {
                inside = false;
                break;
            }
            // clamp to the outer centers so edge particles stay on the grid
            const double u = std::clamp(z / h - 0.5, 0.0, double(len[a] - 1));
            idx[a] = std::min(static_cast<int>(u), len[a] - 2 < 0 ? 0 : len[a] - 2);
            w[a] = len[a] > 1 ? u - idx[a] : 0.0;
        }
        if (!inside) {
            ++out.out_of_domain;
            continue;
        }
        for (int corner = 0; corner < (1 << axes); ++corner) {
            double cw = weight;
            std::size_t s = 0, k = 0;
            for (int a = 0; a < axes; ++a) {
                const int bit = (corner >> a) & 1;
                cw *= bit ? w[a] : 1.0 - w[a];
                const int i = std::min(idx[a] + bit, len[a] - 1);
                if (a < g.d) s = s * g.nx + i;
                else k = k * g.nv + i;
            }
            if (cw != 0.0) out.field.at(s, k) += cw;
        }
    }
    return out;
}

std::vector<double> compare_to_kinetic(std::span<const DistributionField> empirical,
                                       std::span<const DistributionField> kinetic) {
    if (empirical.size() != kinetic.size())
        throw GridMismatch("empirical and kinetic series have different lengths");
    std::vector<double> out;
    for (std::size_t i = 0; i < empirical.size(); ++i)
        out.push_back(l1_distance(empirical[i], kinetic[i]));
    return out;
}

}  // namespace kinetic

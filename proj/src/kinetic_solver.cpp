#include "kinetic/kinetic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinetic/errors.hpp"
#include "kinetic/homogeneous.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/remap.hpp"
#include "kinetic/scattering.hpp"

namespace kinetic {

namespace {

constexpr double kNegativeTolerance = 1e-12;

double overlap(double lo, double hi, double a, double b) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

// One [1/4, 1/2, 1/4] pass along a phase axis given by its stride and length.
void smooth_axis(std::vector<double>& v, std::size_t stride, std::size_t len) {
    std::vector<double> src = v;
    const std::size_t block = stride * len;
    for (std::size_t base = 0; base < v.size(); base += block) {
        for (std::size_t off = 0; off < stride; ++off) {
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t idx = base + off + i * stride;
                const double left = i > 0 ? src[idx - stride] : 0.0;
                const double right = i + 1 < len ? src[idx + stride] : 0.0;
                v[idx] = 0.5 * src[idx] + 0.25 * (left + right);
            }
        }
    }
}

void clip_negatives(DistributionField& f) {
    double worst = 0.0;
    for (double& x : f.values) {
        if (x < 0.0) {
            worst = std::min(worst, x);
            x = 0.0;
        }
    }
    if (worst < -kNegativeTolerance)
        throw NumericalAbort("negative value " + format_double(worst) + " at t = " +
                             format_double(f.time));
}

}  // namespace

void SolverConfig::validate() const {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be finite and >= 0");
    if (!(T > 0.0)) throw ValidationError("T must be > 0");
    if (!(dt > 0.0)) throw ValidationError("dt must be > 0 for a run");
    if (!std::isfinite(gamma) || gamma < 0.0) throw ValidationError("gamma must be >= 0");
    if (snapshot_stride == 0 || sample_stride == 0)
        throw ValidationError("snapshot_stride and sample_stride must be positive");
    const double displacement = dt * grid.max_speed();
    if (displacement > grid.dx * (1.0 + 1e-12))
        throw ValidationError("CFL violated: dt * max|v| = " + format_double(displacement) +
                              " exceeds dx = " + format_double(grid.dx));
    const double steps = T / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
        throw ValidationError("T / dt = " + format_double(steps) + " is not an integer");
    for (double p : p_list)
        if (!(p > 1.0)) throw ValidationError("p values must exceed 1");
    if (initial && !(initial->grid == grid))
        throw ValidationError("initial field grid differs from the configured grid");
    if (!initial && !(patch.side > 0.0 && patch.height > 0.0))
        throw ValidationError("patch side and height must be positive");
}

std::size_t SolverConfig::step_count() const {
    return static_cast<std::size_t>(std::llround(T / dt));
}

DistributionField make_patch(const PhaseGrid& g, const PatchSpec& p) {
    DistributionField f(g);
    const double h = 0.5 * p.side;
    // per-axis cell averages of the 1-D profile, then tensor products
    auto factors = [&](double origin, double width, int n, double c) {
        std::vector<double> w(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const double lo = origin + i * width, hi = origin + (i + 1) * width;
            const double len = overlap(lo, hi, c - h, c + h);
            if (len < 1e-9 * width) continue;  // drop edge round-off slivers
            if (p.profile == PatchProfile::Uniform) {
                w[i] = std::min(len / width, 1.0);
                continue;
            }
            const double a = std::max(lo, c - h), b = std::min(hi, c + h);
            static constexpr double node[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
            static constexpr double weight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            double acc = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double z = 0.5 * (a + b) + 0.5 * (b - a) * node[q];
                const double cz = std::cos(M_PI * (z - c) / p.side);
                acc += weight[q] * cz * cz;
            }
            w[i] = 0.5 * (b - a) * acc / width;
        }
        return w;
    };
    std::array<std::vector<double>, 2> wx, wv;
    for (int a = 0; a < g.d; ++a) {
        wx[a] = factors(g.x0(), g.dx, g.nx, p.center_x[a]);
        wv[a] = factors(g.v0(), g.dv, g.nv, p.center_v[a]);
    }
    for (std::size_t s = 0; s < g.n_space(); ++s) {
        const auto ix = g.space_axes(s);
        double fx = wx[0][ix[0]];
        if (g.d == 2) fx *= wx[1][ix[1]];
        if (fx == 0.0) continue;
        for (std::size_t k = 0; k < g.n_vel(); ++k) {
            const auto iv = g.vel_axes(k);
            double fv = wv[0][iv[0]];
            if (g.d == 2) fv *= wv[1][iv[1]];
            f.at(s, k) = p.height * fx * fv;
        }
    }
    // phase axes, innermost first: v_d ... v_1, x_d ... x_1
    std::vector<std::pair<std::size_t, std::size_t>> axes;
    std::size_t stride = 1;
    for (int a = 0; a < g.d; ++a) {
        axes.emplace_back(stride, g.nv);
        stride *= g.nv;
    }
    for (int a = 0; a < g.d; ++a) {
        axes.emplace_back(stride, g.nx);
        stride *= g.nx;
    }
    for (int pass = 0; pass < p.smoothing_passes; ++pass)
        for (const auto& [st, len] : axes) smooth_axis(f.values, st, len);
    return f;
}

DistributionField initial_field(const SolverConfig& c) {
    if (c.initial) return *c.initial;
    return make_patch(c.grid, c.patch);
}

SupportBox enclosing_box(const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    constexpr double inf = std::numeric_limits<double>::infinity();
    Vec xlo{inf, inf}, xhi{-inf, -inf}, vlo{inf, inf}, vhi{-inf, -inf};
    bool any = false;
    for (std::size_t s = 0; s < g.n_space(); ++s) {
        const auto slice = f.slice(s);
        for (std::size_t k = 0; k < slice.size(); ++k) {
            if (slice[k] <= 0.0) continue;
            any = true;
            const auto ix = g.space_axes(s);
            const auto iv = g.vel_axes(k);
            for (int a = 0; a < g.d; ++a) {
                xlo[a] = std::min(xlo[a], g.x0() + ix[a] * g.dx);
                xhi[a] = std::max(xhi[a], g.x0() + (ix[a] + 1) * g.dx);
                vlo[a] = std::min(vlo[a], g.v0() + iv[a] * g.dv);
                vhi[a] = std::max(vhi[a], g.v0() + (iv[a] + 1) * g.dv);
            }
        }
    }
    SupportBox box;
    box.d = g.d;
    if (!any) return box;
    double rx2 = 0.0, rv2 = 0.0;
    for (int a = 0; a < g.d; ++a) {
        box.center_x[a] = 0.5 * (xlo[a] + xhi[a]);
        box.center_v[a] = 0.5 * (vlo[a] + vhi[a]);
        rx2 += 0.25 * (xhi[a] - xlo[a]) * (xhi[a] - xlo[a]);
        rv2 += 0.25 * (vhi[a] - vlo[a]) * (vhi[a] - vlo[a]);
    }
    box.radius = std::sqrt(std::max(rx2, rv2));
    return box;
}

DistributionField transport_substep(const DistributionField& f, double dt, TransportStats* stats,
                                    TransportScheme scheme) {
    const PhaseGrid& g = f.grid;
    DistributionField out(g, f.time + dt);
    if (dt == 0.0) {
        out.values = f.values;
        return out;
    }
    const std::size_t nk = g.n_vel();
    const std::size_t ns = g.n_space();
    const std::size_t n = g.nx;
    std::vector<double> lost(nk, 0.0);

    parallel_chunks(nk, [&](std::size_t lo, std::size_t hi) {
        remap::Workspace ws;
        std::vector<double> plane(ns), line_in(n), line_out(n);
        auto shift_line = [&](std::span<const double> src, std::span<double> dst, double cells) {
            return scheme == TransportScheme::Antidiffusive
                       ? remap::antidiffusive_shift(src, dst, cells)
                       : remap::shift_remap(src, dst, cells, ws);
        };
        for (std::size_t k = lo; k < hi; ++k) {
            const Vec v = g.v_of(k);
            bool any = false;
            for (std::size_t s = 0; s < ns; ++s) {
                plane[s] = f.values[s * nk + k];
                any = any || plane[s] != 0.0;
            }
            if (!any) {
                for (std::size_t s = 0; s < ns; ++s) out.values[s * nk + k] = 0.0;
                continue;
            }
            double loss = 0.0;
            if (g.d == 1) {
                const double shift = v[0] * dt / g.dx;
                if (shift != 0.0) {
                    loss += shift_line(plane, line_out, shift);
                    std::copy(line_out.begin(), line_out.end(), plane.begin());
                }
            } else {
                // axis 0 (stride n), then axis 1 (contiguous)
                const double s0 = v[0] * dt / g.dx;
                if (s0 != 0.0) {
                    for (std::size_t j = 0; j < n; ++j) {
                        bool nz = false;
                        for (std::size_t i = 0; i < n; ++i) {
                            line_in[i] = plane[i * n + j];
                            nz = nz || line_in[i] != 0.0;
                        }
                        if (!nz) continue;
                        loss += shift_line(line_in, line_out, s0);
                        for (std::size_t i = 0; i < n; ++i) plane[i * n + j] = line_out[i];
                    }
                }
                const double s1 = v[1] * dt / g.dx;
                if (s1 != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        std::span<double> row(plane.data() + i * n, n);
                        if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; }))
                            continue;
                        std::copy(row.begin(), row.end(), line_in.begin());
                        loss += shift_line(line_in, row, s1);
                    }
                }
            }
            for (std::size_t s = 0; s < ns; ++s) out.values[s * nk + k] = plane[s];
            lost[k] = loss;
        }
    });

    if (stats) {
        double total = 0.0;
        for (double l : lost) total += l;
        const double lost_mass = total * g.cell_volume();
        stats->outflow += lost_mass;
        const double m = f.mass();
        if (m > 0.0 && lost_mass > 1e-8 * m) ++stats->warnings;
    }
    return out;
}

DistributionField align_substep(const DistributionField& f, double gamma, double dt) {
    const PhaseGrid& g = f.grid;
    DistributionField out(g, f.time);
    if (gamma == 0.0 || dt == 0.0) {
        out.values = f.values;
        return out;
    }
    const MomentField m = moments(f);
    parallel_chunks(g.n_space(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const double rho = m.rho[s];
            Vec u{};
            if (rho > 0.0)
                for (int a = 0; a < g.d; ++a) u[a] = m.mom[s][a] / rho;
            alignment_substep(f.slice(s), out.slice(s), g, rho, u, gamma, dt);
        }
    });
    return out;
}

DistributionField step(const DistributionField& f, const SolverConfig& c, TransportStats* stats) {
    DistributionField out;
    if (c.splitting == Splitting::Lie) {
        out = align_substep(transport_substep(f, c.dt, stats, c.transport), c.gamma, c.dt);
    } else {
        const double half = 0.5 * c.dt;
        DistributionField a = transport_substep(f, half, stats, c.transport);
        DistributionField b = align_substep(a, c.gamma, c.dt);
        out = transport_substep(b, half, stats, c.transport);
    }
    out.time = f.time + c.dt;
    clip_negatives(out);
    return out;
}

RunResult run(const SolverConfig& c, const RunOptions& opts) {
    c.validate();
    RunResult res;
    res.series.d = c.grid.d;
    res.series.p_list = c.p_list;

    DistributionField f = initial_field(c);
    f.time = 0.0;
    res.box = enclosing_box(f);
    const double threshold = 1e-12 * f.max_value();
    const std::size_t n_steps = c.step_count();

    auto sample = [&](const DistributionField& field) {
        const MomentField m = moments(field);
        ObservableRow row = observables(field, c.p_list, threshold);
        const ProductionRates r = production_rates(field, m, c.gamma, c.p_list);
        row.energy_rate = r.energy;
        row.entropy_rate = r.entropy;
        row.lp_rate = r.lp;
        res.series.push(std::move(row));
        DiagnosticRow diag;
        diag.t = field.time;
        diag.mass_outside_Q = mass_outside(field, res.box);
        diag.outflow = res.stats.outflow;
        if (opts.record_duhamel) diag.duhamel_integrand = alignment_divergence_l1(field, m, c.gamma);
        diag.min_value = *std::min_element(field.values.begin(), field.values.end());
        res.diagnostics.push_back(diag);
    };
    std::size_t snap_index = 0;
    auto snapshot = [&](const DistributionField& field, std::size_t n) {
        Snapshot snap{snap_index++, n, field, h_profile(field)};
        if (opts.on_snapshot) opts.on_snapshot(snap);
        if (opts.keep_snapshots) res.snapshots.push_back(std::move(snap));
    };

    sample(f);
    snapshot(f, 0);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        f = step(f, c, &res.stats);
        f.time = static_cast<double>(n) * c.dt;
        if (opts.on_step) opts.on_step(f, n);
        if (n % c.sample_stride == 0 || n == n_steps) sample(f);
        if (n % c.snapshot_stride == 0 || n == n_steps) snapshot(f, n);
    }
    res.final_field = std::move(f);
    return res;
}

}  // namespace kinetic

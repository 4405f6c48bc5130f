#include "kinetic/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"
#include "kinetic/remap.hpp"

namespace kinetic {

PullbackField pullback(const DistributionField& f, double t, bool allow_clip) {
    const PhaseGrid& g = f.grid;
    PullbackField out{DistributionField(g, f.time), t, 0.0};
    if (t == 0.0) {
        out.field.values = f.values;
        return out;
    }
    const std::size_t nk = g.n_vel(), ns = g.n_space(), n = g.nx;
    std::vector<double> lost(nk, 0.0);
    parallel_chunks(nk, [&](std::size_t lo, std::size_t hi) {
        remap::Workspace ws;
        std::vector<double> plane(ns), line_in(n), line_out(n);
        for (std::size_t k = lo; k < hi; ++k) {
            const Vec v = g.v_of(k);
            for (std::size_t s = 0; s < ns; ++s) plane[s] = f.values[s * nk + k];
            double loss = 0.0;
            if (g.d == 1) {
                loss += remap::shift_remap(plane, line_out, -v[0] * t / g.dx, ws);
                std::copy(line_out.begin(), line_out.end(), plane.begin());
            } else {
                for (std::size_t j = 0; j < n; ++j) {
                    for (std::size_t i = 0; i < n; ++i) line_in[i] = plane[i * n + j];
                    loss += remap::shift_remap(line_in, line_out, -v[0] * t / g.dx, ws);
                    for (std::size_t i = 0; i < n; ++i) plane[i * n + j] = line_out[i];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    std::span<double> row(plane.data() + i * n, n);
                    std::copy(row.begin(), row.end(), line_in.begin());
                    loss += remap::shift_remap(line_in, row, -v[1] * t / g.dx, ws);
                }
            }
            for (std::size_t s = 0; s < ns; ++s) out.field.values[s * nk + k] = plane[s];
            lost[k] = loss;
        }
    });
    double total = 0.0;
    for (double l : lost) total += l;
    out.clipped_mass = total * g.cell_volume();
    const double m = f.mass();
    if (!allow_clip && m > 0.0 && out.clipped_mass > 1e-6 * m)
        throw SupportClipped("pullback to t = " + format_double(t) + " leaves the x-grid",
                             out.clipped_mass);
    return out;
}

double l1_distance(const DistributionField& a, const DistributionField& b) {
    if (!(a.grid == b.grid)) throw GridMismatch("fields live on different grids");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::abs(a.values[i] - b.values[i]);
    return acc * a.grid.cell_volume();
}

double cauchy_residual(const PullbackField& g1, const PullbackField& g2) {
    return l1_distance(g1.field, g2.field);
}

double alignment_divergence_l1(const DistributionField& f, const MomentField& m, double gamma) {
    if (gamma == 0.0) return 0.0;
    const PhaseGrid& g = f.grid;
    const std::size_t nk = g.n_vel(), ns = g.n_space();
    const int nv = g.nv;
    std::vector<double> partial(ns, 0.0);
    parallel_chunks(ns, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t s = lo; s < hi; ++s) {
            const double rho = m.rho[s];
            if (rho == 0.0) continue;
            const auto sl = f.slice(s);
            auto val = [&](int i, int j) -> double {
                if (i < 0 || i >= nv || j < 0 || j >= nv) return 0.0;
                return g.d == 1 ? sl[i] : sl[std::size_t(i) * nv + j];
            };
            double acc = 0.0;
            for (std::size_t k = 0; k < nk; ++k) {
                const auto iv = g.vel_axes(k);
                const Vec v = g.v_of(k);
                const Vec e = alignment_field(m, s, v);
                const int i = iv[0], j = iv[1];
                double term = g.d * rho * sl[k];
                if (g.d == 1) {
                    term += e[0] * (val(i + 1, 0) - val(i - 1, 0)) / (2.0 * g.dv);
                } else {
                    term += e[0] * (val(i + 1, j) - val(i - 1, j)) / (2.0 * g.dv);
                    term += e[1] * (val(i, j + 1) - val(i, j - 1)) / (2.0 * g.dv);
                }
                acc += std::abs(term);
            }
            partial[s] = acc;
        }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return gamma * total * g.cell_volume();
}

double alignment_divergence_l1(const DistributionField& f, double gamma) {
    return alignment_divergence_l1(f, moments(f), gamma);
}

namespace {

double interpolate(const DuhamelSeries& s, double t) {
    const auto it = std::lower_bound(s.t.begin(), s.t.end(), t);
    if (it == s.t.begin()) return s.integrand.front();
    if (it == s.t.end()) return s.integrand.back();
    const std::size_t i = std::size_t(it - s.t.begin());
    const double w = (t - s.t[i - 1]) / (s.t[i] - s.t[i - 1]);
    return (1.0 - w) * s.integrand[i - 1] + w * s.integrand[i];
}

}  // namespace

double duhamel_integral(const DuhamelSeries& s, double t1, double t2) {
    if (s.t.empty() || !(t2 > t1)) return 0.0;
    t1 = std::max(t1, s.t.front());
    t2 = std::min(t2, s.t.back());
    if (!(t2 > t1)) return 0.0;
    double acc = 0.0;
    double prev_t = t1, prev_y = interpolate(s, t1);
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        if (s.t[i] <= t1) continue;
        if (s.t[i] >= t2) break;
        acc += 0.5 * (prev_y + s.integrand[i]) * (s.t[i] - prev_t);
        prev_t = s.t[i];
        prev_y = s.integrand[i];
    }
    acc += 0.5 * (prev_y + interpolate(s, t2)) * (t2 - prev_t);
    return acc;
}

TailReport duhamel_tail(const DuhamelSeries& s, double t) {
    TailReport r;
    if (s.t.empty()) return r;
    const double T = s.t.back();
    r.measured = duhamel_integral(s, t, T);
    const double last = s.integrand.back();
    if (last == 0.0) return r;
    const double two_r = 2.0 * s.radius;
    const double h = T > 1.0 ? two_r / T : two_r;
    const double shape = std::pow(h, s.d) + (1.0 + T) * std::pow(h, s.d + 1);
    const double C = last / shape;
    if (s.d < 2) {
        // ∫ τ^{-1} diverges: no finite envelope tail
        r.finite = false;
        r.extrapolated = std::numeric_limits<double>::infinity();
        return r;
    }
    // ∫_T^∞ [(2R/τ)^2 + (1+τ)(2R/τ)^3] dτ for T >= 1 (d = 2); the segment
    // below τ = 1 uses the constant h = 2R.
    double integral = 0.0;
    double start = T;
    if (T < 1.0) {
        integral += (1.0 - T) * two_r * two_r + (1.5 - T - 0.5 * T * T) * std::pow(two_r, 3);
        start = 1.0;
    }
    const double a2 = two_r * two_r, a3 = a2 * two_r;
    integral += a2 / start + a3 * (0.5 / (start * start) + 1.0 / start);
    r.extrapolated = C * integral;
    return r;
}

double decay_exponent(const DuhamelSeries& s, double t_from) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        if (s.t[i] < t_from || s.t[i] <= 0.0 || s.integrand[i] <= 0.0) continue;
        const double x = std::log(s.t[i]), y = std::log(s.integrand[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

}  // namespace kinetic

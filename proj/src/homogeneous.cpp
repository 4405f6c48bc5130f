#include "kinetic/homogeneous.hpp"

#include <algorithm>
#include <cmath>

#include "kinetic/remap.hpp"

namespace kinetic {

HomogeneousState HomogeneousState::uniform(double gamma, int d, double half_width,
                                           double height, const Vec& center) {
    HomogeneousState s;
    s.gamma = gamma;
    s.d = d;
    const double side = 2.0 * half_width;
    const double vol = d == 1 ? side : side * side;
    s.m = height * vol;
    s.vbar = center;
    if (d == 1) s.vbar[1] = 0.0;
    s.p = {s.m * s.vbar[0], s.m * s.vbar[1]};
    s.f0 = [=](const Vec& v) {
        for (int a = 0; a < d; ++a)
            if (std::abs(v[a] - center[a]) > half_width) return 0.0;
        return height;
    };
    s.f0_sup = height;
    s.f0_radius = half_width * std::sqrt(double(d));
    // per-axis variance of the uniform law is w^2/3
    s.f0_central_energy = s.m * d * half_width * half_width / 3.0;
    s.f0_entropy = s.m * std::log(height);
    return s;
}

HomogeneousState HomogeneousState::from_profile(double gamma, const PhaseGrid& g,
                                                std::function<double(const Vec&)> f0) {
    HomogeneousState s;
    s.gamma = gamma;
    s.d = g.d;
    const std::size_t nk = g.n_vel();
    const double w = g.v_volume();
    std::vector<double> vals(nk);
    for (std::size_t k = 0; k < nk; ++k) {
        vals[k] = f0(g.v_of(k));
        const Vec v = g.v_of(k);
        s.m += vals[k] * w;
        s.p[0] += vals[k] * v[0] * w;
        s.p[1] += vals[k] * v[1] * w;
    }
    s.vbar = {s.p[0] / s.m, s.p[1] / s.m};
    for (std::size_t k = 0; k < nk; ++k) {
        const double f = vals[k];
        if (f <= 0.0) continue;
        const Vec v = g.v_of(k);
        const double r = std::hypot(v[0] - s.vbar[0], v[1] - s.vbar[1]);
        s.f0_sup = std::max(s.f0_sup, f);
        s.f0_radius = std::max(s.f0_radius, r);
        s.f0_central_energy += r * r * f * w;
        s.f0_entropy += f * std::log(f) * w;
    }
    s.f0 = std::move(f0);
    return s;
}

double exact_solution(const HomogeneousState& s, double t, const Vec& v) {
    const double rate = s.gamma * s.m;
    const double stretch = std::exp(rate * t);
    Vec w{};
    for (int a = 0; a < s.d; ++a) w[a] = s.vbar[a] + stretch * (v[a] - s.vbar[a]);
    return std::exp(rate * s.d * t) * s.f0(w);
}

std::vector<double> exact_solution_on_grid(const HomogeneousState& s, double t,
                                           const PhaseGrid& g) {
    std::vector<double> out(g.n_vel());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = exact_solution(s, t, g.v_of(k));
    return out;
}

HomogeneousObservables exact_observables(const HomogeneousState& s, double t) {
    const double rate = s.gamma * s.m;
    const double vb2 = s.vbar[0] * s.vbar[0] + s.vbar[1] * s.vbar[1];
    HomogeneousObservables o;
    o.sup = std::exp(rate * s.d * t) * s.f0_sup;
    o.radius = std::exp(-rate * t) * s.f0_radius;
    o.energy = s.m * vb2 + std::exp(-2.0 * rate * t) * s.f0_central_energy;
    o.entropy = s.f0_entropy + rate * s.d * t * s.m;
    return o;
}

namespace {

struct SliceMoments {
    double mass = 0.0;
    Vec mean{};
    double cov[2][2] = {{0, 0}, {0, 0}};
};

SliceMoments slice_moments(std::span<const double> f, const PhaseGrid& g) {
    SliceMoments m;
    Vec s1{};
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] == 0.0) continue;
        const Vec v = g.v_of(k);
        m.mass += f[k];
        s1[0] += f[k] * v[0];
        s1[1] += f[k] * v[1];
    }
    if (m.mass <= 0.0) return m;
    m.mean = {s1[0] / m.mass, s1[1] / m.mass};
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] == 0.0) continue;
        const Vec v = g.v_of(k);
        const double a = v[0] - m.mean[0], b = v[1] - m.mean[1];
        m.cov[0][0] += f[k] * a * a;
        m.cov[0][1] += f[k] * a * b;
        m.cov[1][1] += f[k] * b * b;
    }
    m.cov[1][0] = m.cov[0][1];
    for (auto& row : m.cov)
        for (double& c : row) c /= m.mass;
    return m;
}

}  // namespace

void alignment_substep(std::span<const double> in, std::span<double> out, const PhaseGrid& g,
                       double rho, const Vec& u, double gamma, double dt) {
    if (!(rho > 0.0) || dt == 0.0 || gamma == 0.0) {
        std::copy(in.begin(), in.end(), out.begin());
        return;
    }
    const double scale = std::exp(-gamma * rho * dt);
    thread_local remap::Workspace ws;
    thread_local std::vector<double> line_in, line_out;

    if (g.d == 1) {
        const double pivot = (u[0] - g.v0()) / g.dv;
        remap::affine_remap(in, out, scale, 0.0, pivot, ws);
    } else {
        const int n = g.nv;
        line_in.resize(n);
        line_out.resize(n);
        thread_local std::vector<double> tmp;
        tmp.assign(in.begin(), in.end());
        // axis 0 (outer index, stride n), then axis 1 (contiguous)
        const double p0 = (u[0] - g.v0()) / g.dv;
        for (int j = 0; j < n; ++j) {
            bool any = false;
            for (int i = 0; i < n; ++i) {
                line_in[i] = tmp[std::size_t(i) * n + j];
                any = any || line_in[i] != 0.0;
            }
            if (!any) continue;
            remap::affine_remap(line_in, line_out, scale, 0.0, p0, ws);
            for (int i = 0; i < n; ++i) tmp[std::size_t(i) * n + j] = line_out[i];
        }
        const double p1 = (u[1] - g.v0()) / g.dv;
        for (int i = 0; i < n; ++i) {
            std::span<const double> row(tmp.data() + std::size_t(i) * n, n);
            bool any = std::any_of(row.begin(), row.end(), [](double x) { return x != 0.0; });
            std::span<double> dst(out.data() + std::size_t(i) * n, n);
            if (!any) {
                std::fill(dst.begin(), dst.end(), 0.0);
                continue;
            }
            remap::affine_remap(row, dst, scale, 0.0, p1, ws);
        }
    }

    // The exact map sends the mean to u + scale (mean_in - u). Restore it with
    // a mass-neutral linear tilt; it is O(remap error) and keeps the support.
    const SliceMoments before = slice_moments(in, g);
    const SliceMoments after = slice_moments(out, g);
    if (!(after.mass > 0.0)) return;
    Vec target{};
    for (int a = 0; a < g.d; ++a) target[a] = u[a] + scale * (before.mean[a] - u[a]);
    Vec shift{};
    for (int a = 0; a < g.d; ++a) shift[a] = target[a] - after.mean[a];
    Vec beta{};
    if (g.d == 1) {
        if (after.cov[0][0] <= 0.0) return;
        beta[0] = shift[0] / after.cov[0][0];
    } else {
        const double det = after.cov[0][0] * after.cov[1][1] - after.cov[0][1] * after.cov[1][0];
        if (!(det > 0.0)) return;
        beta[0] = (after.cov[1][1] * shift[0] - after.cov[0][1] * shift[1]) / det;
        beta[1] = (after.cov[0][0] * shift[1] - after.cov[1][0] * shift[0]) / det;
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k] == 0.0) continue;
        const Vec v = g.v_of(k);
        worst = std::max(worst, std::abs(beta[0] * (v[0] - after.mean[0]) +
                                         beta[1] * (v[1] - after.mean[1])));
    }
    if (worst >= 0.5) return;  // tilt too large to be a round-off correction
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k] == 0.0) continue;
        const Vec v = g.v_of(k);
        out[k] *= 1.0 + beta[0] * (v[0] - after.mean[0]) + beta[1] * (v[1] - after.mean[1]);
    }
}

}  // namespace kinetic

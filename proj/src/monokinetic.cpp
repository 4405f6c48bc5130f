#include "kinetic/monokinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kinetic/errors.hpp"

namespace kinetic {

MonokineticState make_monokinetic(const std::function<double(double)>& u0,
                                  const std::function<double(double)>& rho0, double a, double b,
                                  std::size_t n) {
    if (n < 2) throw ValidationError("need at least two markers");
    if (!(b > a)) throw ValidationError("marker interval is empty");
    MonokineticState s;
    const double h = (b - a) / double(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = a + (double(i) + 0.5) * h;
        const double r = rho0(x0);
        s.markers.push_back({x0, x0, u0(x0), r, r});
    }
    return s;
}

MonokineticState golden_monokinetic(std::size_t n) {
    return make_monokinetic([](double x) { return -x; }, [](double) { return 1.0; }, -0.5, 0.5, n);
}

namespace {

// Local spacing of marker i in current or label coordinates.
double spacing(const std::vector<Marker>& m, std::size_t i, bool label) {
    auto pos = [&](std::size_t j) { return label ? m[j].x0 : m[j].x; };
    const std::size_t n = m.size();
    if (i == 0) return pos(1) - pos(0);
    if (i + 1 == n) return pos(n - 1) - pos(n - 2);
    return 0.5 * (pos(i + 1) - pos(i - 1));
}

}  // namespace

void evolve(MonokineticState& s, double dt) {
    if (s.crossed) throw BlowUp(s.cross_lo, s.cross_hi);
    const double t_old = s.t;
    s.t = t_old + dt;
    for (Marker& m : s.markers) m.x = m.x0 + m.u * s.t;
    for (std::size_t i = 0; i < s.markers.size(); ++i) {
        const double jac = spacing(s.markers, i, false) / spacing(s.markers, i, true);
        s.markers[i].rho = s.markers[i].rho0 / std::abs(jac);
    }
    if (min_gap(s) <= 0.0) {
        s.crossed = true;
        s.cross_lo = t_old;
        s.cross_hi = s.t;
        throw BlowUp(t_old, s.t);
    }
}

double min_gap(const MonokineticState& s) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < s.markers.size(); ++i)
        g = std::min(g, s.markers[i + 1].x - s.markers[i].x);
    return g;
}

double max_velocity_gradient(const MonokineticState& s) {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < s.markers.size(); ++i) {
        const double dx = s.markers[i + 1].x - s.markers[i].x;
        const double du = s.markers[i + 1].u - s.markers[i].u;
        if (dx == 0.0) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(du / dx));
    }
    return worst;
}

double peak_density(const MonokineticState& s) {
    double p = 0.0;
    for (const Marker& m : s.markers) p = std::max(p, m.rho);
    return p;
}

double monokinetic_mass(const MonokineticState& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.markers.size(); ++i)
        acc += s.markers[i].rho * spacing(s.markers, i, false);
    return acc;
}

MonoSample sample(const MonokineticState& s) {
    return {s.t, min_gap(s), max_velocity_gradient(s), peak_density(s)};
}

BlowupEstimate blowup_estimate(const std::vector<MonoSample>& series) {
    BlowupEstimate est;
    for (const MonoSample& m : series)
        if (m.min_gap > 0.0) est.gradient_growth.emplace_back(m.t, m.max_dxu);
    for (std::size_t i = 1; i < series.size(); ++i) {
        const MonoSample& a = series[i - 1];
        const MonoSample& b = series[i];
        if (a.min_gap > 0.0 && b.min_gap <= 0.0) {
            est.t_star = a.t + a.min_gap / (a.min_gap - b.min_gap) * (b.t - a.t);
            return est;
        }
    }
    throw NotBlownUp("no marker crossing in the sampled series");
}

DistributionField deposit_to_grid(const MonokineticState& s, const PhaseGrid& g, double width) {
    if (g.d != 1) throw ValidationError("mono-kinetic deposit is one-dimensional");
    if (!(width > 0.0)) throw ValidationError("deposit width must be positive");
    DistributionField f(g, s.t);
    const double scale = 1.0 / (std::sqrt(2.0) * width);
    std::vector<double> column(g.nv);
    for (std::size_t i = 0; i < s.markers.size(); ++i) {
        const Marker& m = s.markers[i];
        const double mass = m.rho * spacing(s.markers, i, false);
        const double z = (m.x - g.x0()) / g.dx;
        if (z < 0.0 || z > g.nx) continue;
        const double u = std::clamp(z - 0.5, 0.0, double(g.nx - 1));
        const int i0 = std::min(static_cast<int>(u), std::max(g.nx - 2, 0));
        const double w1 = g.nx > 1 ? u - i0 : 0.0;
        double prev = std::erf((g.v0() - m.u) * scale);
        for (int k = 0; k < g.nv; ++k) {
            const double next = std::erf((g.v0() + (k + 1) * g.dv - m.u) * scale);
            column[k] = 0.5 * (next - prev);
            prev = next;
        }
        const double density = mass / g.cell_volume();
        for (int k = 0; k < g.nv; ++k) {
            if (column[k] == 0.0) continue;
            f.at(i0, k) += (1.0 - w1) * density * column[k];
            if (w1 > 0.0) f.at(std::min(i0 + 1, g.nx - 1), k) += w1 * density * column[k];
        }
    }
    return f;
}

}  // namespace kinetic

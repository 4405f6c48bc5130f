#include "kinetic/phase_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"

namespace kinetic {

PhaseGrid PhaseGrid::make(int d, double Lx, double Lv, int nx, int nv) {
    if (d != 1 && d != 2) throw ValidationError("dimension must be 1 or 2");
    if (!(Lx > 0.0) || !(Lv > 0.0)) throw ValidationError("extents L_x, L_v must be positive");
    if (nx < 1 || nv < 1) throw ValidationError("cell counts must be positive");
    PhaseGrid g;
    g.d = d;
    g.Lx = Lx;
    g.Lv = Lv;
    g.nx = nx;
    g.nv = nv;
    g.dx = Lx / nx;
    g.dv = Lv / nv;
    return g;
}

PhaseGrid PhaseGrid::from_spacing(int d, double Lx, double Lv, double dx, double dv) {
    if (!(dx > 0.0) || !(dv > 0.0)) throw ValidationError("spacings dx, dv must be positive");
    const double nxf = Lx / dx;
    const double nvf = Lv / dv;
    const long nx = std::lround(nxf);
    const long nv = std::lround(nvf);
    if (nx < 1 || std::abs(nxf - nx) > 1e-9 * nxf)
        throw ValidationError("dx does not tile L_x into a whole number of cells");
    if (nv < 1 || std::abs(nvf - nv) > 1e-9 * nvf)
        throw ValidationError("dv does not tile L_v into a whole number of cells");
    return make(d, Lx, Lv, static_cast<int>(nx), static_cast<int>(nv));
}

double PhaseGrid::max_speed() const noexcept { return 0.5 * Lv * std::sqrt(double(d)); }

std::array<int, 2> PhaseGrid::space_axes(std::size_t s) const noexcept {
    if (d == 1) return {static_cast<int>(s), 0};
    return {static_cast<int>(s / nx), static_cast<int>(s % nx)};
}

std::array<int, 2> PhaseGrid::vel_axes(std::size_t k) const noexcept {
    if (d == 1) return {static_cast<int>(k), 0};
    return {static_cast<int>(k / nv), static_cast<int>(k % nv)};
}

Vec PhaseGrid::x_of(std::size_t s) const noexcept {
    const auto a = space_axes(s);
    return d == 1 ? Vec{x_center(a[0]), 0.0} : Vec{x_center(a[0]), x_center(a[1])};
}

Vec PhaseGrid::v_of(std::size_t k) const noexcept {
    const auto a = vel_axes(k);
    return d == 1 ? Vec{v_center(a[0]), 0.0} : Vec{v_center(a[0]), v_center(a[1])};
}

bool PhaseGrid::operator==(const PhaseGrid& o) const noexcept {
    return d == o.d && nx == o.nx && nv == o.nv && Lx == o.Lx && Lv == o.Lv;
}

double DistributionField::mass() const {
    double s = 0.0;
    for (double x : values) s += x;
    return s * grid.cell_volume();
}

double DistributionField::max_value() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, x);
    return m;
}

MomentField moments(const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    const std::size_t ns = g.n_space();
    const std::size_t nk = g.n_vel();
    MomentField m;
    m.d = g.d;
    m.rho.assign(ns, 0.0);
    m.mom.assign(ns, Vec{});
    m.u.assign(ns, Vec{});
    m.q.assign(ns, 0.0);
    m.defined.assign(ns, 0);

    std::vector<Vec> vel(nk);
    for (std::size_t k = 0; k < nk; ++k) vel[k] = g.v_of(k);
    const double wv = g.v_volume();

    parallel_for(ns, [&](std::size_t s) {
        const auto sl = f.slice(s);
        double rho = 0.0, q = 0.0;
        Vec mom{};
        for (std::size_t k = 0; k < nk; ++k) {
            const double w = sl[k];
            if (w == 0.0) continue;
            rho += w;
            mom[0] += w * vel[k][0];
            mom[1] += w * vel[k][1];
            q += w * (vel[k][0] * vel[k][0] + vel[k][1] * vel[k][1]);
        }
        m.rho[s] = rho * wv;
        m.mom[s] = {mom[0] * wv, mom[1] * wv};
        m.q[s] = q * wv;
    });

    double mass = 0.0;
    for (double r : m.rho) mass += r;
    mass *= g.x_volume();
    const double volume = g.d == 1 ? g.Lx : g.Lx * g.Lx;
    const double floor = 1e-14 * mass / volume;
    for (std::size_t s = 0; s < ns; ++s) {
        if (m.rho[s] > floor && m.rho[s] > 0.0) {
            m.defined[s] = 1;
            m.u[s] = {m.mom[s][0] / m.rho[s], m.mom[s][1] / m.rho[s]};
        }
    }
    return m;
}

Vec alignment_field(const MomentField& m, std::size_t s, const Vec& v) {
    return {m.rho[s] * v[0] - m.mom[s][0], m.rho[s] * v[1] - m.mom[s][1]};
}

ObservableRow observables(const DistributionField& f, std::span<const double> p_list,
                          double support_threshold) {
    const PhaseGrid& g = f.grid;
    const std::size_t ns = g.n_space();
    const std::size_t nk = g.n_vel();
    const std::size_t np = p_list.size();
    if (support_threshold < 0.0) support_threshold = 1e-12 * f.max_value();

    std::vector<Vec> vel(nk);
    for (std::size_t k = 0; k < nk; ++k) vel[k] = g.v_of(k);

    // Per-position partial sums, reduced in index order below.
    struct Partial {
        double mass = 0, e = 0, h = 0, R = 0, S = 0;
        Vec mom{};
        std::vector<double> lp;
    };
    std::vector<Partial> part(ns);
    const double t = f.time;
    parallel_for(ns, [&](std::size_t s) {
        Partial& P = part[s];
        P.lp.assign(np, 0.0);
        const Vec x = g.x_of(s);
        const auto sl = f.slice(s);
        for (std::size_t k = 0; k < nk; ++k) {
            const double w = sl[k];
            if (w <= 0.0) continue;
            const Vec& v = vel[k];
            P.mass += w;
            P.mom[0] += w * v[0];
            P.mom[1] += w * v[1];
            P.e += w * (v[0] * v[0] + v[1] * v[1]);
            P.h += w * std::log(std::max(w, kEntropyFloor));
            for (std::size_t i = 0; i < np; ++i) P.lp[i] += std::pow(w, p_list[i]);
            if (w > support_threshold) {
                P.R = std::max(P.R, std::hypot(v[0], v[1]));
                P.S = std::max(P.S, std::hypot(x[0] - v[0] * t, x[1] - v[1] * t));
            }
        }
    });

    ObservableRow row;
    row.t = f.time;
    row.lp.assign(np, 0.0);
    for (const Partial& P : part) {
        row.mass += P.mass;
        row.momentum[0] += P.mom[0];
        row.momentum[1] += P.mom[1];
        row.energy += P.e;
        row.entropy += P.h;
        for (std::size_t i = 0; i < np; ++i) row.lp[i] += P.lp[i];
        row.R = std::max(row.R, P.R);
        row.S = std::max(row.S, P.S);
    }
    const double cv = g.cell_volume();
    row.mass *= cv;
    row.momentum[0] *= cv;
    row.momentum[1] *= cv;
    row.energy *= cv;
    row.entropy *= cv;
    for (double& x : row.lp) x *= cv;
    return row;
}

ProductionRates production_rates(const DistributionField& f, double gamma,
                                 std::span<const double> p_list) {
    return production_rates(f, moments(f), gamma, p_list);
}

ProductionRates production_rates(const DistributionField& f, const MomentField& m,
                                 double gamma, std::span<const double> p_list) {
    const PhaseGrid& g = f.grid;
    const std::size_t ns = g.n_space();
    const std::size_t np = p_list.size();
    ProductionRates r;
    r.lp.assign(np, 0.0);

    // Per-position integrands; 2 rho q - 2 |m|^2 = ∫∫ |v - v*|^2 f f* dv dv*
    // and is nonnegative by Cauchy-Schwarz, so clamp round-off.
    std::vector<double> e_part(ns), h_part(ns), lp_part(ns * np, 0.0);
    parallel_for(ns, [&](std::size_t s) {
        const double rho = m.rho[s];
        const double mm = m.mom[s][0] * m.mom[s][0] + m.mom[s][1] * m.mom[s][1];
        e_part[s] = std::max(0.0, 2.0 * rho * m.q[s] - 2.0 * mm);
        h_part[s] = rho * rho;
        if (np == 0 || rho == 0.0) return;
        const auto sl = f.slice(s);
        for (std::size_t i = 0; i < np; ++i) {
            double acc = 0.0;
            for (double w : sl)
                if (w > 0.0) acc += std::pow(w, p_list[i]);
            lp_part[s * np + i] = acc * rho;
        }
    });
    double e = 0.0, h = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
        e += e_part[s];
        h += h_part[s];
        for (std::size_t i = 0; i < np; ++i) r.lp[i] += lp_part[s * np + i];
    }
    const double dxd = g.x_volume();
    r.energy = -gamma * e * dxd;
    r.entropy = gamma * g.d * h * dxd;
    for (std::size_t i = 0; i < np; ++i)
        r.lp[i] = gamma * g.d * (p_list[i] - 1.0) * r.lp[i] * g.cell_volume();
    return r;
}

std::vector<double> h_profile(const DistributionField& f) {
    const std::size_t nk = f.grid.n_vel();
    std::vector<double> h(nk, 0.0);
    for (std::size_t s = 0; s < f.grid.n_space(); ++s) {
        const auto sl = f.slice(s);
        for (std::size_t k = 0; k < nk; ++k) h[k] = std::max(h[k], sl[k]);
    }
    return h;
}

bool SupportBox::contains(const Vec& x, const Vec& v, double t) const noexcept {
    double v2 = 0.0, y2 = 0.0;
    for (int a = 0; a < d; ++a) {
        const double dv = v[a] - center_v[a];
        const double y = x[a] - center_x[a] - v[a] * t;
        v2 += dv * dv;
        y2 += y * y;
    }
    const double r2 = radius * radius * (1.0 + 1e-12);
    return v2 <= r2 && y2 <= r2;
}

bool SupportBox::cell_meets(const PhaseGrid& g, std::size_t s, std::size_t k,
                            double t) const noexcept {
    const auto xa = g.space_axes(s);
    const auto va = g.vel_axes(k);
    const double tol = 1e-12 * (1.0 + radius);
    double vmin2 = 0.0, ymin2 = 0.0;
    for (int a = 0; a < d; ++a) {
        const double vl = g.v0() + va[a] * g.dv;
        const double vh = vl + g.dv;
        // velocities of the cell that may belong to the ball's axis range
        const double lo = std::max(vl, center_v[a] - radius);
        const double hi = std::min(vh, center_v[a] + radius);
        if (lo > hi + tol) return false;
        const double dlo = lo - center_v[a], dhi = hi - center_v[a];
        if (dlo > 0.0) vmin2 += dlo * dlo;
        else if (dhi < 0.0) vmin2 += dhi * dhi;
        const double xl = g.x0() + xa[a] * g.dx;
        const double xh = xl + g.dx;
        const double ylo = xl - center_x[a] - std::max(lo, hi) * t;
        const double yhi = xh - center_x[a] - std::min(lo, hi) * t;
        if (ylo > 0.0) ymin2 += ylo * ylo;
        else if (yhi < 0.0) ymin2 += yhi * yhi;
    }
    const double r = radius + tol;
    return vmin2 <= r * r && ymin2 <= r * r;
}

double SupportBox::diameter_bound(double t) const noexcept {
    const double full = 2.0 * radius;
    return t <= 1.0 ? full : full / t;
}

double mass_outside(const DistributionField& f, const SupportBox& box) {
    const PhaseGrid& g = f.grid;
    const std::size_t nk = g.n_vel();
    std::vector<double> part(g.n_space(), 0.0);
    parallel_for(g.n_space(), [&](std::size_t s) {
        const auto sl = f.slice(s);
        double acc = 0.0;
        for (std::size_t k = 0; k < nk; ++k)
            if (sl[k] != 0.0 && !box.cell_meets(g, s, k, f.time)) acc += sl[k];
        part[s] = acc;
    });
    double total = 0.0;
    for (double p : part) total += p;
    return total * g.cell_volume();
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", p);
    return buf;
}

std::string ObservableSeries::csv_header() const {
    std::ostringstream os;
    os << "t,mass,mom_1";
    if (d == 2) os << ",mom_2";
    os << ",energy,entropy";
    for (double p : p_list) os << ",lp_" << format_p(p);
    os << ",R,S,dE_dt,dH_dt";
    for (double p : p_list) os << ",dLp_" << format_p(p) << "_dt";
    return os.str();
}

void ObservableSeries::write_csv(std::ostream& os) const {
    os << csv_header() << '\n';
    for (const auto& r : rows) {
        os << format_double(r.t) << ',' << format_double(r.mass) << ','
           << format_double(r.momentum[0]);
        if (d == 2) os << ',' << format_double(r.momentum[1]);
        os << ',' << format_double(r.energy) << ',' << format_double(r.entropy);
        for (double x : r.lp) os << ',' << format_double(x);
        os << ',' << format_double(r.R) << ',' << format_double(r.S) << ','
           << format_double(r.energy_rate) << ',' << format_double(r.entropy_rate);
        for (double x : r.lp_rate) os << ',' << format_double(x);
        os << '\n';
    }
}

void ObservableSeries::push(ObservableRow row) {
    if (!rows.empty() && !(row.t > rows.back().t))
        throw NumericalError("observable rows must be strictly increasing in time");
    rows.push_back(std::move(row));
}

}  // namespace kinetic

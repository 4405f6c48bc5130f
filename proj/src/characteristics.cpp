#include "kinetic/characteristics.hpp"

#include <algorithm>
#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/parallel.hpp"

namespace kinetic {

IterateField constant_stack(const DistributionField& f0, double T_loc, int n_intervals) {
    if (n_intervals < 1) throw ValidationError("stack needs at least one interval");
    if (!(T_loc > 0.0)) throw ValidationError("T_loc must be positive");
    IterateField st;
    st.grid = f0.grid;
    for (int k = 0; k <= n_intervals; ++k) {
        const double t = T_loc * k / n_intervals;
        st.times.push_back(t);
        DistributionField s = f0;
        s.time = t;
        st.slices.push_back(std::move(s));
    }
    return st;
}

StackMoments::StackMoments(const IterateField& stack) : grid_(stack.grid), times_(stack.times) {
    m_.reserve(stack.slices.size());
    for (const auto& s : stack.slices) m_.push_back(moments(s));
}

bool StackMoments::inside(const Vec& x) const {
    for (int a = 0; a < grid_.d; ++a)
        if (x[a] < 0.0 || x[a] > grid_.Lx) return false;
    return true;
}

namespace {

// Linear weights between cell centers; positions in the outer half cells
// take the nearest center value.
struct Bracket {
    int i0, i1;
    double w1;
};

Bracket bracket(double x, double h, int n) {
    const double u = x / h - 0.5;
    if (u <= 0.0) return {0, 0, 0.0};
    if (u >= n - 1) return {n - 1, n - 1, 0.0};
    const int i0 = static_cast<int>(u);
    return {i0, i0 + 1, u - i0};
}

}  // namespace

template <class Get>
double StackMoments::sample(double t, const Vec& x, Get get) const {
    // time bracket
    std::size_t k0 = 0, k1 = 0;
    double wt = 0.0;
    if (times_.size() > 1) {
        const double dt = times_[1] - times_[0];
        const double u = std::clamp(t / dt, 0.0, double(times_.size() - 1));
        k0 = std::min(static_cast<std::size_t>(u), times_.size() - 1);
        k1 = std::min(k0 + 1, times_.size() - 1);
        wt = u - k0;
    }
    auto at_slice = [&](std::size_t k) {
        const MomentField& m = m_[k];
        const Bracket b0 = bracket(x[0], grid_.dx, grid_.nx);
        if (grid_.d == 1)
            return (1.0 - b0.w1) * get(m, b0.i0) + b0.w1 * get(m, b0.i1);
        const Bracket b1 = bracket(x[1], grid_.dx, grid_.nx);
        const std::size_t n = grid_.nx;
        auto idx = [&](int i, int j) { return std::size_t(i) * n + std::size_t(j); };
        return (1.0 - b0.w1) * ((1.0 - b1.w1) * get(m, idx(b0.i0, b1.i0)) +
                                b1.w1 * get(m, idx(b0.i0, b1.i1))) +
               b0.w1 * ((1.0 - b1.w1) * get(m, idx(b0.i1, b1.i0)) +
                        b1.w1 * get(m, idx(b0.i1, b1.i1)));
    };
    const double a = at_slice(k0);
    return wt == 0.0 ? a : (1.0 - wt) * a + wt * at_slice(k1);
}

double StackMoments::rho(double t, const Vec& x) const {
    if (!inside(x)) return 0.0;
    return sample(t, x, [](const MomentField& m, std::size_t s) { return m.rho[s]; });
}

Vec StackMoments::mom(double t, const Vec& x) const {
    Vec out{};
    if (!inside(x)) return out;
    for (int a = 0; a < grid_.d; ++a)
        out[a] = sample(t, x, [a](const MomentField& m, std::size_t s) { return m.mom[s][a]; });
    return out;
}

namespace {

struct Phase {
    Vec x, v;
};

Phase rhs(const StackMoments& m, double gamma, double tau, const Phase& z) {
    Phase d{z.v, {}};
    if (gamma == 0.0) return d;
    const double rho = m.rho(tau, z.x);
    const Vec mom = m.mom(tau, z.x);
    for (int a = 0; a < m.grid().d; ++a) d.v[a] = -gamma * (rho * z.v[a] - mom[a]);
    return d;
}

Phase axpy(const Phase& z, double h, const Phase& d, int dim) {
    Phase out = z;
    for (int a = 0; a < dim; ++a) {
        out.x[a] += h * d.x[a];
        out.v[a] += h * d.v[a];
    }
    return out;
}

// Returns false when the curve leaves the position grid.
bool integrate(const StackMoments& m, double gamma, CharState& st, double max_step) {
    const int dim = m.grid().d;
    const double span = st.s - st.t;
    if (span == 0.0) return m.inside(st.x);
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / max_step - 1e-12)));
    const double h = span / n;
    Phase z{st.x, st.v};
    double tau = st.t;
    if (!m.inside(z.x)) return false;
    double rho_prev = m.rho(tau, z.x);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const Phase k1 = rhs(m, gamma, tau, z);
        const Phase k2 = rhs(m, gamma, tau + 0.5 * h, axpy(z, 0.5 * h, k1, dim));
        const Phase k3 = rhs(m, gamma, tau + 0.5 * h, axpy(z, 0.5 * h, k2, dim));
        const Phase k4 = rhs(m, gamma, tau + h, axpy(z, h, k3, dim));
        for (int a = 0; a < dim; ++a) {
            z.x[a] += h / 6.0 * (k1.x[a] + 2.0 * k2.x[a] + 2.0 * k3.x[a] + k4.x[a]);
            z.v[a] += h / 6.0 * (k1.v[a] + 2.0 * k2.v[a] + 2.0 * k3.v[a] + k4.v[a]);
        }
        tau = st.t + (i + 1) * h;
        if (!m.inside(z.x)) return false;
        const double rho = m.rho(tau, z.x);
        acc += 0.5 * (rho_prev + rho) * std::abs(h);
        rho_prev = rho;
    }
    st.x = z.x;
    st.v = z.v;
    st.rho_integral = acc;
    return true;
}

double slice_spacing(const IterateField& stack) {
    return stack.times.size() > 1 ? stack.times[1] - stack.times[0] : stack.horizon();
}

}  // namespace

CharState solve_characteristic(const StackMoments& m, double gamma, const Vec& x, const Vec& v,
                               double t, double s, double max_step) {
    CharState st{x, v, s, t, 0.0};
    if (!integrate(m, gamma, st, max_step))
        throw DomainExit("characteristic from t = " + format_double(t) + " leaves the grid");
    return st;
}

CharState solve_characteristic(const IterateField& stack, double gamma, const Vec& x,
                               const Vec& v, double t, double s) {
    const StackMoments m(stack);
    const double step = std::max(0.5 * slice_spacing(stack), 1e-12);
    return solve_characteristic(m, gamma, x, v, t, s, step);
}

double interpolate_field(const DistributionField& f, const Vec& x, const Vec& v) {
    const PhaseGrid& g = f.grid;
    // per phase axis: lower index and weight, with zero ghosts outside
    int idx[4];
    double w[4];
    int len[4];
    const int axes = 2 * g.d;
    for (int a = 0; a < axes; ++a) {
        const bool pos = a < g.d;
        const double coord = pos ? x[a] - g.x0() : v[a - g.d] - g.v0();
        const double h = pos ? g.dx : g.dv;
        len[a] = pos ? g.nx : g.nv;
        const double u = coord / h - 0.5;
        if (u < -1.0 || u > len[a]) return 0.0;
        const double fl = std::floor(u);
        idx[a] = static_cast<int>(fl);
        w[a] = u - fl;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << axes); ++corner) {
        double weight = 1.0;
        std::size_t s = 0, k = 0;
        bool valid = true;
        for (int a = 0; a < axes; ++a) {
            const int bit = (corner >> a) & 1;
            const int i = idx[a] + bit;
            weight *= bit ? w[a] : 1.0 - w[a];
            if (i < 0 || i >= len[a]) {
                valid = false;
                break;
            }
            if (a < g.d) s = s * g.nx + i;
            else k = k * g.nv + i;
        }
        if (valid && weight != 0.0) acc += weight * f.at(s, k);
    }
    return acc;
}

IterateField picard_apply(const IterateField& stack, const DistributionField& f0, double gamma) {
    if (!(stack.grid == f0.grid)) throw GridMismatch("initial field and stack grids differ");
    const StackMoments m(stack);
    const PhaseGrid& g = stack.grid;
    const double step = std::max(0.5 * slice_spacing(stack), 1e-12);
    IterateField out;
    out.grid = g;
    out.times = stack.times;
    out.iteration = stack.iteration + 1;
    for (std::size_t n = 0; n < stack.times.size(); ++n) {
        const double t = stack.times[n];
        DistributionField slice(g, t);
        if (t == 0.0) {
            slice.values = f0.values;
            out.slices.push_back(std::move(slice));
            continue;
        }
        parallel_for(g.n_space(), [&](std::size_t s) {
            const Vec x = g.x_of(s);
            for (std::size_t k = 0; k < g.n_vel(); ++k) {
                CharState st{x, g.v_of(k), 0.0, t, 0.0};
                if (!integrate(m, gamma, st, step)) continue;  // f0 vanishes off the grid
                const double base = interpolate_field(f0, st.x, st.v);
                if (base == 0.0) continue;
                slice.at(s, k) = base * std::exp(gamma * g.d * st.rho_integral);
            }
        });
        out.slices.push_back(std::move(slice));
    }
    return out;
}

namespace {

double sup_difference(const IterateField& a, const IterateField& b) {
    double worst = 0.0;
    for (std::size_t n = 0; n < a.slices.size(); ++n)
        for (std::size_t i = 0; i < a.slices[n].values.size(); ++i)
            worst = std::max(worst, std::abs(a.slices[n].values[i] - b.slices[n].values[i]));
    return worst;
}

}  // namespace

PicardResult picard_fixed_point(const DistributionField& f0, double gamma, double T_loc,
                                double tol, int max_iter, int n_intervals) {
    if (!(tol > 0.0)) throw ValidationError("tolerance must be positive");
    PicardResult res;
    res.T_loc = T_loc;
    res.stack = constant_stack(f0, T_loc, n_intervals);
    for (int it = 0; it < max_iter; ++it) {
        IterateField next = picard_apply(res.stack, f0, gamma);
        const double inc = sup_difference(next, res.stack);
        res.increments.push_back(inc);
        res.stack = std::move(next);
        if (inc < tol) return res;
    }
    throw NoConvergence("no Picard convergence within " + std::to_string(max_iter) +
                            " iterations at T_loc = " + format_double(T_loc),
                        res.increments);
}

PicardResult picard_adaptive(const DistributionField& f0, double gamma, double T_loc, double tol,
                             int max_iter, int n_intervals, int max_halvings) {
    for (int h = 0;; ++h) {
        try {
            PicardResult r = picard_fixed_point(f0, gamma, T_loc, tol, max_iter, n_intervals);
            r.halvings = h;
            return r;
        } catch (const NoConvergence&) {
            if (h >= max_halvings) throw;
            T_loc *= 0.5;
        }
    }
}

}  // namespace kinetic

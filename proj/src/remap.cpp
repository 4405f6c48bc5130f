#include "kinetic/remap.hpp"

#include <algorithm>
#include <cmath>

namespace kinetic::remap {

namespace {

// Antiderivative of the cell parabola on local coordinate xi in [0, 1].
inline double primitive(double left, double right, double curv, double xi) {
    const double slope = right - left + curv;
    return xi * (left + xi * (0.5 * slope - curv * xi / 3.0));
}

}  // namespace

void reconstruct(std::span<const double> in, Workspace& ws) {
    const std::size_t n = in.size();
    ws.left.resize(n);
    ws.right.resize(n);
    ws.curv.resize(n);
    ws.face.resize(n + 1);
    ws.step_frac.assign(n, 0.0);
    ws.step_value.resize(n);
    ws.left_filled.resize(n);
    auto val = [&](std::ptrdiff_t i) -> double {
        return (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) ? 0.0 : in[i];
    };
    // Fourth-order face values, bounded by the adjacent averages.
    for (std::size_t f = 0; f <= n; ++f) {
        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(f) - 1;  // face between i and i+1
        const double a = val(i), b = val(i + 1);
        double face = (7.0 / 12.0) * (a + b) - (1.0 / 12.0) * (val(i - 1) + val(i + 2));
        face = std::clamp(face, std::min(a, b), std::max(a, b));
        ws.face[f] = face;
    }
    // Round-off residue left by earlier remaps counts as vacuum.
    const double residue = 1e-12 * (n ? *std::max_element(in.begin(), in.end()) : 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = in[i];
        double l = ws.face[i], r = ws.face[i + 1];
        if ((r - mean) * (mean - l) <= 0.0) {
            l = r = mean;  // local extremum: flatten
        } else {
            const double jump = r - l;
            const double excess = jump * (mean - 0.5 * (l + r));
            const double bound = jump * jump / 6.0;
            if (excess > bound) l = 3.0 * mean - 2.0 * r;
            else if (-bound > excess) r = 3.0 * mean - 2.0 * l;
        }
        ws.left[i] = l;
        ws.right[i] = r;
        ws.curv[i] = 6.0 * mean - 3.0 * (l + r);
        const double prev = val(std::ptrdiff_t(i) - 1), next = val(std::ptrdiff_t(i) + 1);
        if (mean > residue && next <= residue && prev > mean) {
            ws.step_frac[i] = mean / prev;
            ws.step_value[i] = prev;
            ws.left_filled[i] = 1;
        } else if (mean > residue && prev <= residue && next > mean) {
            ws.step_frac[i] = mean / next;
            ws.step_value[i] = next;
            ws.left_filled[i] = 0;
        }
    }
}

double integrate(std::span<const double> in, const Workspace& ws, double a, double b) {
    const double n = static_cast<double>(in.size());
    a = std::max(a, 0.0);
    b = std::min(b, n);
    if (!(b > a)) return 0.0;
    std::size_t k = static_cast<std::size_t>(a);
    double acc = 0.0;
    double lo = a;
    while (lo < b && k < in.size()) {
        const double cell_hi = static_cast<double>(k + 1);
        const double hi = std::min(b, cell_hi);
        if (in[k] != 0.0) {
            const double x0 = lo - static_cast<double>(k);
            const double x1 = hi - static_cast<double>(k);
            if (x0 <= 0.0 && x1 >= 1.0) {
                acc += in[k];
            } else if (ws.step_frac[k] > 0.0) {
                const double frac = ws.step_frac[k];
                const double lo_f = ws.left_filled[k] ? 0.0 : 1.0 - frac;
                const double hi_f = ws.left_filled[k] ? frac : 1.0;
                acc += ws.step_value[k] *
                       std::max(0.0, std::min(x1, hi_f) - std::max(x0, lo_f));
            } else {
                acc += primitive(ws.left[k], ws.right[k], ws.curv[k], x1) -
                       primitive(ws.left[k], ws.right[k], ws.curv[k], x0);
            }
        }
        lo = hi;
        ++k;
    }
    return acc;
}

double affine_remap(std::span<const double> in, std::span<double> out, double scale,
                    double shift, double pivot, Workspace& ws) {
    reconstruct(in, ws);
    const std::size_t n = in.size();
    const double inv = 1.0 / scale;
    auto preimage = [&](double y) { return pivot + (y - shift - pivot) * inv; };
    double total_in = 0.0, total_out = 0.0;
    for (std::size_t i = 0; i < n; ++i) total_in += in[i];
    double a = preimage(0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double b = preimage(static_cast<double>(j + 1));
        out[j] = integrate(in, ws, a, b);
        total_out += out[j];
        a = b;
    }
    return total_in - total_out;
}

namespace {

// Fractional part 0 < nu < 1 of a rightward shift; returns the outflow flux.
double limited_downwind(std::span<const double> in, std::span<double> out, double nu) {
    const std::size_t n = in.size();
    double upstream = 0.0;  // zero inflow
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = i > 0 ? in[i - 1] : 0.0;
        const double a = in[i];
        const double next = i + 1 < n ? in[i + 1] : 0.0;
        double flux = a;
        if ((a - prev) * (next - a) >= 0.0) {
            const double lo_up = std::min(prev, a), hi_up = std::max(prev, a);
            const double lo = std::max(hi_up + (a - hi_up) / nu, std::min(a, next));
            const double hi = std::min(lo_up + (a - lo_up) / nu, std::max(a, next));
            flux = lo <= hi ? std::clamp(next, lo, hi) : a;
        }
        out[i] = a - nu * (flux - upstream);
        upstream = flux;
    }
    return nu * upstream;
}

}  // namespace

double antidiffusive_shift(std::span<const double> in, std::span<double> out, double shift) {
    const std::size_t n = in.size();
    if (shift == 0.0) {
        std::copy(in.begin(), in.end(), out.begin());
        return 0.0;
    }
    const bool left = shift < 0.0;
    const double s = std::abs(shift);
    const double whole = std::floor(s);
    const double nu = s - whole;
    thread_local std::vector<double> src, tmp;
    src.assign(in.begin(), in.end());
    if (left) std::reverse(src.begin(), src.end());
    tmp.resize(n);
    double lost = 0.0;
    if (nu > 0.0) {
        lost += limited_downwind(src, tmp, nu);
    } else {
        std::copy(src.begin(), src.end(), tmp.begin());
    }
    const std::size_t k = whole >= double(n) ? n : static_cast<std::size_t>(whole);
    for (std::size_t j = n - k; j < n; ++j) lost += tmp[j];
    for (std::size_t j = n; j-- > 0;) src[j] = j >= k ? tmp[j - k] : 0.0;
    if (left) std::reverse(src.begin(), src.end());
    std::copy(src.begin(), src.end(), out.begin());
    return lost;
}

}  // namespace kinetic::remap

#pragma once

// Truncated phase-space grid, distribution fields, velocity moments and the
// integral observables tracked along a run.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kinetic {

/// Small fixed vector for positions/velocities; entries past `d` are zero.
using Vec = std::array<double, 2>;

/// Tensor grid over [0, L_x]^d x [-L_v/2, L_v/2]^d with nx cells per position
/// axis and nv cells per velocity axis. Fields are stored row-major with the
/// position axes outermost: index = space_index * n_vel() + vel_index.
struct PhaseGrid {
    int d = 1;
    double Lx = 1.0;
    double Lv = 1.0;
    int nx = 1;
    int nv = 1;
    double dx = 1.0;
    double dv = 1.0;

    static PhaseGrid make(int d, double Lx, double Lv, int nx, int nv);
    /// Cell counts are rounded from L/h; throws ValidationError if the spacing
    /// does not tile the extent to within 1e-9 relative.
    static PhaseGrid from_spacing(int d, double Lx, double Lv, double dx, double dv);

    std::size_t n_space() const noexcept { return d == 1 ? std::size_t(nx) : std::size_t(nx) * nx; }
    std::size_t n_vel() const noexcept { return d == 1 ? std::size_t(nv) : std::size_t(nv) * nv; }
    std::size_t size() const noexcept { return n_space() * n_vel(); }

    double x0() const noexcept { return 0.0; }
    double v0() const noexcept { return -0.5 * Lv; }
    double x_center(int i) const noexcept { return (i + 0.5) * dx; }
    double v_center(int j) const noexcept { return v0() + (j + 0.5) * dv; }

    double x_volume() const noexcept { return d == 1 ? dx : dx * dx; }
    double v_volume() const noexcept { return d == 1 ? dv : dv * dv; }
    double cell_volume() const noexcept { return x_volume() * v_volume(); }
    double max_speed() const noexcept;  // (L_v/2) * sqrt(d)

    /// Per-axis indices of a flattened position / velocity index.
    std::array<int, 2> space_axes(std::size_t s) const noexcept;
    std::array<int, 2> vel_axes(std::size_t k) const noexcept;
    Vec x_of(std::size_t s) const noexcept;
    Vec v_of(std::size_t k) const noexcept;

    bool operator==(const PhaseGrid& o) const noexcept;
};

/// Nonnegative sampling of f(t, x, v) on a PhaseGrid (cell averages).
struct DistributionField {
    PhaseGrid grid;
    std::vector<double> values;
    double time = 0.0;

    DistributionField() = default;
    explicit DistributionField(const PhaseGrid& g, double t = 0.0)
        : grid(g), values(g.size(), 0.0), time(t) {}

    std::span<double> slice(std::size_t s) {
        return {values.data() + s * grid.n_vel(), grid.n_vel()};
    }
    std::span<const double> slice(std::size_t s) const {
        return {values.data() + s * grid.n_vel(), grid.n_vel()};
    }
    double& at(std::size_t s, std::size_t k) { return values[s * grid.n_vel() + k]; }
    double at(std::size_t s, std::size_t k) const { return values[s * grid.n_vel() + k]; }

    double mass() const;
    double max_value() const;
};

/// Velocity moments per position cell.
struct MomentField {
    int d = 1;
    std::vector<double> rho;   // ∫ f dv
    std::vector<Vec> mom;      // ∫ v f dv
    std::vector<Vec> u;        // mom / rho where defined, else 0
    std::vector<double> q;     // ∫ |v|^2 f dv
    std::vector<char> defined; // rho above the vacuum floor
};

/// Midpoint-rule moments. u is flagged undefined where
/// rho <= 1e-14 * mass / L_x^d.
MomentField moments(const DistributionField& f);

/// E[f](x, v) = rho(x) v - m(x) for position cell s.
Vec alignment_field(const MomentField& m, std::size_t s, const Vec& v);

/// One sampled row of the observable time series.
struct ObservableRow {
    double t = 0.0;
    double mass = 0.0;
    Vec momentum{};
    double energy = 0.0;
    double entropy = 0.0;
    std::vector<double> lp;  // ∫ f^p per p in the p list
    double R = 0.0;          // sup |v| over the numerical support
    double S = 0.0;          // sup |x - v t| over the numerical support
    double energy_rate = 0.0;
    double entropy_rate = 0.0;
    std::vector<double> lp_rate;
};

struct ProductionRates {
    double energy = 0.0;       // -γ ∫∫∫ |v - v*|^2 f f*
    double entropy = 0.0;      // γ d ∫ rho^2
    std::vector<double> lp;    // γ d (p - 1) ∫ f^p rho
};

/// Floor applied inside log for the entropy integrand.
inline constexpr double kEntropyFloor = 1e-300;

/// Integral observables at the field's time. Cells with value above
/// `support_threshold` count toward R and S; a negative threshold selects
/// 1e-12 * max(f).
ObservableRow observables(const DistributionField& f, std::span<const double> p_list,
                          double support_threshold = -1.0);

ProductionRates production_rates(const DistributionField& f, double gamma,
                                 std::span<const double> p_list);
ProductionRates production_rates(const DistributionField& f, const MomentField& m,
                                 double gamma, std::span<const double> p_list);

/// h(v) = max over position cells of f(x, v), one entry per velocity cell.
std::vector<double> h_profile(const DistributionField& f);

/// Free-transport image of the initial support box B_R(x_c) x B_R(v_c),
/// expressed in the frame moving with the patch's mean velocity:
/// (x, v) ∈ Q(t) iff |v - v_c| <= R and |x - x_c - v t| <= R.
struct SupportBox {
    int d = 1;
    Vec center_x{};
    Vec center_v{};
    double radius = 0.0;

    bool contains(const Vec& x, const Vec& v, double t) const noexcept;
    /// Whether the grid cell (position cell s, velocity cell k) may meet Q(t).
    /// Exact in d = 1; a conservative relaxation in d = 2.
    bool cell_meets(const PhaseGrid& g, std::size_t s, std::size_t k, double t) const noexcept;
    /// Bound on the diameter of the velocity section of Q(t): min(2R, 2R/t).
    double diameter_bound(double t) const noexcept;
};

/// Mass carried by cells that do not meet Q(t) at the field's time.
double mass_outside(const DistributionField& f, const SupportBox& box);

/// Time series of observables with the CSV layout
/// t,mass,mom_1[,mom_2],energy,entropy,lp_<p>...,R,S,dE_dt,dH_dt,dLp_<p>_dt
struct ObservableSeries {
    int d = 1;
    std::vector<double> p_list;
    std::vector<ObservableRow> rows;

    std::string csv_header() const;
    void write_csv(std::ostream& os) const;
    /// Appends a row; throws NumericalError if time does not increase.
    void push(ObservableRow row);
};

/// Formats a double for CSV output with round-trip precision.
std::string format_double(double x);
/// Formats p for column names: 2 -> "2", 1.5 -> "1.5".
std::string format_p(double p);

}  // namespace kinetic

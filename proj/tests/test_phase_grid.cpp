#include <doctest.h>

#include <cmath>
#include <sstream>

#include "kinetic/errors.hpp"
#include "kinetic/phase_grid.hpp"

using namespace kinetic;

TEST_CASE("grid from spacing reproduces the reference resolution") {
    const PhaseGrid g = PhaseGrid::from_spacing(1, 20.0, 6.0, 0.05, 0.01);
    CHECK(g.nx == 400);
    CHECK(g.nv == 600);
    CHECK(g.v0() == doctest::Approx(-3.0));
    CHECK(g.x_center(0) == doctest::Approx(0.025));
    CHECK(g.v_center(599) == doctest::Approx(2.995));
    CHECK(g.max_speed() == doctest::Approx(3.0));
    CHECK_THROWS_AS(PhaseGrid::from_spacing(1, 1.0, 1.0, 0.3, 0.1), ValidationError);
}

TEST_CASE("two-dimensional index layout keeps position axes outermost") {
    const PhaseGrid g = PhaseGrid::make(2, 4.0, 2.0, 4, 2);
    CHECK(g.n_space() == 16);
    CHECK(g.n_vel() == 4);
    CHECK(g.size() == 64);
    CHECK(g.max_speed() == doctest::Approx(std::sqrt(2.0)));
    const auto ax = g.space_axes(6);  // 6 = 1 * 4 + 2
    CHECK(ax[0] == 1);
    CHECK(ax[1] == 2);
    const Vec x = g.x_of(6);
    CHECK(x[0] == doctest::Approx(1.5));
    CHECK(x[1] == doctest::Approx(2.5));
    const Vec v = g.v_of(3);
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[1] == doctest::Approx(0.5));
}

TEST_CASE("moments of a single occupied cell") {
    const PhaseGrid g = PhaseGrid::make(1, 2.0, 2.0, 2, 4);
    DistributionField f(g);
    f.at(1, 3) = 2.0;  // v = 0.75
    const MomentField m = moments(f);
    CHECK(m.rho[0] == 0.0);
    CHECK(m.rho[1] == doctest::Approx(1.0));
    CHECK(m.mom[1][0] == doctest::Approx(0.75));
    CHECK(m.u[1][0] == doctest::Approx(0.75));
    CHECK(m.q[1] == doctest::Approx(0.5625));
    CHECK(m.defined[1]);
    CHECK_FALSE(m.defined[0]);
    const Vec E = alignment_field(m, 1, {0.25, 0.0});
    CHECK(E[0] == doctest::Approx(1.0 * 0.25 - 0.75));
}

TEST_CASE("observables of a constant field match hand quadrature") {
    // f = 1 on [0,1] x [-1,1], four velocity cells of width 1/2
    const PhaseGrid g = PhaseGrid::make(1, 1.0, 2.0, 1, 4);
    DistributionField f(g);
    for (double& x : f.values) x = 1.0;
    const std::vector<double> p{2.0, 3.0};
    const ObservableRow row = observables(f, p);
    CHECK(row.mass == doctest::Approx(2.0));
    CHECK(row.momentum[0] == doctest::Approx(0.0));
    // midpoint rule: 2 * (0.75^2 + 0.25^2) * 0.5
    CHECK(row.energy == doctest::Approx(0.625));
    CHECK(row.entropy == doctest::Approx(0.0));
    CHECK(row.lp[0] == doctest::Approx(2.0));
    CHECK(row.lp[1] == doctest::Approx(2.0));
    CHECK(row.R == doctest::Approx(0.75));

    const ProductionRates r = production_rates(f, 2.0, p);
    // rho = 2, q = 0.625, m = 0: -γ (2 rho q - 2 m^2) = -2 * 2.5
    CHECK(r.energy == doctest::Approx(-5.0));
    CHECK(r.entropy == doctest::Approx(2.0 * 1 * 4.0));
    CHECK(r.lp[0] == doctest::Approx(2.0 * 1 * 1.0 * 2.0 * 2.0));
    CHECK(r.lp[1] == doctest::Approx(2.0 * 1 * 2.0 * 2.0 * 2.0));
}

TEST_CASE("observable series csv header and time ordering") {
    ObservableSeries s;
    s.d = 1;
    s.p_list = {2.0, 1.5};
    CHECK(s.csv_header() ==
          "t,mass,mom_1,energy,entropy,lp_2,lp_1.5,R,S,dE_dt,dH_dt,dLp_2_dt,dLp_1.5_dt");
    s.d = 2;
    s.p_list = {2.0};
    CHECK(s.csv_header() == "t,mass,mom_1,mom_2,energy,entropy,lp_2,R,S,dE_dt,dH_dt,dLp_2_dt");

    ObservableRow row;
    row.lp = {1.0};
    row.lp_rate = {0.0};
    s.push(row);
    CHECK_THROWS_AS(s.push(row), NumericalError);
    row.t = 0.5;
    s.push(row);
    std::ostringstream os;
    s.write_csv(os);
    const std::string text = os.str();
    CHECK(text.rfind(s.csv_header() + "\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("double formatting round-trips") {
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_double(x)) == x);
    CHECK(format_p(2.0) == "2");
    CHECK(format_p(1.5) == "1.5");
}

TEST_CASE("support box moves with free transport") {
    SupportBox b;
    b.d = 1;
    b.center_x = {11.0, 0.0};
    b.center_v = {-0.3, 0.0};
    b.radius = 1.0;
    CHECK(b.contains({11.0, 0.0}, {-0.3, 0.0}, 0.0));
    CHECK(b.contains({11.0 - 0.3 * 2.0 + 0.5 * 2.0, 0.0}, {0.2, 0.0}, 2.0));
    CHECK_FALSE(b.contains({11.0, 0.0}, {0.8, 0.0}, 0.0));
    CHECK_FALSE(b.contains({11.0, 0.0}, {0.7, 0.0}, 2.0));
    CHECK(b.diameter_bound(0.5) == doctest::Approx(2.0));
    CHECK(b.diameter_bound(4.0) == doctest::Approx(0.5));

    const PhaseGrid g = PhaseGrid::make(1, 20.0, 6.0, 20, 6);
    DistributionField f(g);
    f.at(11, 2) = 1.0;  // x = 11.5, v = -0.5: inside at t = 0
    f.at(0, 0) = 3.0;   // x = 0.5, v = -2.5: outside
    CHECK(mass_outside(f, b) == doctest::Approx(3.0));
}

TEST_CASE("h profile takes the maximum over positions") {
    const PhaseGrid g = PhaseGrid::make(1, 2.0, 2.0, 2, 2);
    DistributionField f(g);
    f.at(0, 0) = 1.0;
    f.at(1, 0) = 3.0;
    f.at(0, 1) = 2.0;
    const auto h = h_profile(f);
    CHECK(h[0] == 3.0);
    CHECK(h[1] == 2.0);
}

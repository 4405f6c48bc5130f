#include <doctest.h>

#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/homogeneous.hpp"
#include "kinetic/kinetic_solver.hpp"

using namespace kinetic;

namespace {

SolverConfig small_config() {
    SolverConfig c;
    c.grid = PhaseGrid::make(1, 4.0, 2.0, 40, 40);
    c.dt = 0.01;
    c.T = 0.2;
    c.patch.center_x = {2.0, 0.0};
    c.patch.center_v = {0.1, 0.0};
    c.patch.side = 1.0;
    c.patch.height = 1.0;
    c.sample_stride = 5;
    c.snapshot_stride = 10;
    return c;
}

}  // namespace

TEST_CASE("CFL and step count validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.step_count() == 30000);
    c.dt = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    // dt * 3 == dx exactly is allowed
    c.dt = 0.05 / 3.0;
    c.T = 0.05;
    CHECK_NOTHROW(c.validate());
    c.dt = 1e-4;
    c.T = 0.00015;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.T = 1.0;
    c.gamma = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("reference patch is exact on the grid") {
    const SolverConfig c;
    const DistributionField f = initial_field(c);
    CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.max_value() == doctest::Approx(0.25));
    const SupportBox b = enclosing_box(f);
    CHECK(b.center_x[0] == doctest::Approx(11.0));
    CHECK(b.center_v[0] == doctest::Approx(-0.3));
    CHECK(b.radius == doctest::Approx(1.0));
    // cells straddling v = -1.3 hold the exact overlap fraction
    const std::size_t s = 210;
    CHECK(f.at(s, 170) == doctest::Approx(0.25));
    CHECK(f.at(s, 169) == 0.0);
}

TEST_CASE("transport: identity cases and the half-cell split") {
    const PhaseGrid g = PhaseGrid::make(1, 10.0, 2.0, 10, 4);  // v centers ±0.25, ±0.75
    DistributionField f(g);
    f.at(4, 3) = 1.0;  // v = 0.75
    CHECK(transport_substep(f, 0.0).values == f.values);

    // v dt = dx / 2
    const DistributionField h = transport_substep(f, 0.5 / 0.75);
    CHECK(h.at(4, 3) == doctest::Approx(0.5));
    CHECK(h.at(5, 3) == doctest::Approx(0.5));
    CHECK(h.mass() == doctest::Approx(f.mass()));

    const DistributionField p = transport_substep(f, 0.5 / 0.75, nullptr, TransportScheme::Parabolic);
    CHECK(p.at(4, 3) == doctest::Approx(0.5));
    CHECK(p.at(5, 3) == doctest::Approx(0.5));
}

TEST_CASE("transport leaves a zero-velocity row unchanged") {
    const PhaseGrid g = PhaseGrid::make(1, 4.0, 2.0, 8, 5);  // middle row has v = 0
    DistributionField f(g);
    for (int i = 0; i < 8; ++i) f.at(i, 2) = 1.0 + i;
    const DistributionField h = transport_substep(f, 0.3);
    for (int i = 0; i < 8; ++i) CHECK(h.at(i, 2) == f.at(i, 2));
}

TEST_CASE("outflow through the boundary is counted") {
    const PhaseGrid g = PhaseGrid::make(1, 4.0, 2.0, 4, 2);
    DistributionField f(g);
    f.at(3, 1) = 1.0;  // v = 0.5 at the right edge
    TransportStats st;
    const DistributionField h = transport_substep(f, 1.0, &st);
    CHECK(st.outflow == doctest::Approx(0.5 * g.cell_volume()));
    CHECK(st.warnings == 1);
    CHECK(h.mass() + st.outflow == doctest::Approx(f.mass()));
}

TEST_CASE("Strang step is the exact composition of its substeps") {
    SolverConfig c = small_config();
    const DistributionField f = initial_field(c);
    const DistributionField s = step(f, c);
    const DistributionField manual =
        transport_substep(align_substep(transport_substep(f, 0.5 * c.dt), c.gamma, c.dt), 0.5 * c.dt);
    CHECK(s.values == manual.values);
    CHECK(s.time == doctest::Approx(c.dt));

    c.splitting = Splitting::Lie;
    const DistributionField l = step(f, c);
    CHECK(l.values == align_substep(transport_substep(f, c.dt), c.gamma, c.dt).values);
}

TEST_CASE("align substep applies the homogeneous flow per position cell") {
    const SolverConfig c = small_config();
    const DistributionField f = initial_field(c);
    CHECK(align_substep(f, 0.0, 0.1).values == f.values);
    const DistributionField a = align_substep(f, 1.0, 0.1);
    const MomentField m = moments(f);
    std::vector<double> out(f.grid.n_vel());
    for (std::size_t s : {std::size_t(15), std::size_t(20), std::size_t(24)}) {
        alignment_substep(f.slice(s), out, f.grid, m.rho[s], m.u[s], 1.0, 0.1);
        const auto got = a.slice(s);
        for (std::size_t k = 0; k < out.size(); ++k) CHECK(got[k] == out[k]);
    }
}

TEST_CASE("negative values below the round-off floor abort the step") {
    SolverConfig c = small_config();
    c.gamma = 0.0;
    c.grid = PhaseGrid::make(1, 4.0, 2.0, 8, 5);
    DistributionField f(c.grid);
    f.at(3, 2) = -1e-3;  // v = 0 row stays put under transport
    CHECK_THROWS_AS(step(f, c), NumericalAbort);
    f.at(3, 2) = -1e-14;
    const DistributionField ok = step(f, c);
    CHECK(ok.at(3, 2) == 0.0);
}

TEST_CASE("an interior run conserves mass and momentum") {
    const SolverConfig c = small_config();
    const RunResult r = run(c);
    const auto& rows = r.series.rows;
    REQUIRE(rows.size() == 5);
    CHECK(rows.back().t == doctest::Approx(0.2));
    for (const auto& row : rows) {
        CHECK(row.mass == doctest::Approx(rows[0].mass).epsilon(1e-12));
        CHECK(std::abs(row.momentum[0] - rows[0].momentum[0]) <= 1e-12);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].energy <= rows[i - 1].energy);
    CHECK(r.snapshots.size() == 3);
    CHECK(r.snapshots[1].step == 10);
    CHECK(r.stats.outflow == 0.0);
    CHECK(r.diagnostics.size() == rows.size());
}

TEST_CASE("runs are deterministic") {
    const SolverConfig c = small_config();
    const RunResult a = run(c);
    const RunResult b = run(c);
    CHECK(a.final_field.values == b.final_field.values);
    REQUIRE(a.series.rows.size() == b.series.rows.size());
    for (std::size_t i = 0; i < a.series.rows.size(); ++i)
        CHECK(a.series.rows[i].entropy == b.series.rows[i].entropy);
}

TEST_CASE("two-dimensional patch and step") {
    SolverConfig c;
    c.grid = PhaseGrid::make(2, 4.0, 2.0, 8, 8);
    c.dt = 0.05;
    c.T = 0.1;
    c.patch.center_x = {2.0, 2.0};
    c.patch.center_v = {0.0, 0.0};
    c.patch.side = 1.0;
    c.patch.height = 1.0;
    const DistributionField f = initial_field(c);
    CHECK(f.mass() == doctest::Approx(1.0));
    const DistributionField g = step(f, c);
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-12));
    const ObservableRow a = observables(f, c.p_list);
    const ObservableRow b = observables(g, c.p_list);
    CHECK(std::abs(b.momentum[0] - a.momentum[0]) <= 1e-12);
    CHECK(std::abs(b.momentum[1] - a.momentum[1]) <= 1e-12);
}

#include <doctest.h>

#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/monokinetic.hpp"

using namespace kinetic;

TEST_CASE("golden family at t = 1/2") {
    MonokineticState s = golden_monokinetic(200);
    for (int i = 0; i < 50; ++i) evolve(s, 0.01);
    CHECK(s.t == doctest::Approx(0.5));
    for (const Marker& m : s.markers) {
        CHECK(m.u == doctest::Approx(-2.0 * m.x));
        CHECK(m.rho == doctest::Approx(2.0));
        CHECK(std::abs(m.x) <= 0.25);
    }
}

TEST_CASE("golden family matches u = x/(t-1) to 1e-10 before t = 0.9") {
    MonokineticState s = golden_monokinetic(1000);
    for (int i = 0; i < 900; ++i) {
        evolve(s, 1e-3);
        for (std::size_t j = 0; j < s.markers.size(); j += 97) {
            const Marker& m = s.markers[j];
            CHECK(std::abs(m.u - m.x / (s.t - 1.0)) <= 1e-10);
        }
    }
}

TEST_CASE("constant velocity translates without compression") {
    MonokineticState s = make_monokinetic([](double) { return 0.3; },
                                          [](double x) { return 1.0 + x; }, 0.0, 1.0, 50);
    const MonokineticState s0 = s;
    for (int i = 0; i < 10; ++i) evolve(s, 0.1);
    for (std::size_t i = 0; i < s.markers.size(); ++i) {
        CHECK(s.markers[i].x == doctest::Approx(s0.markers[i].x + 0.3));
        CHECK(s.markers[i].rho == doctest::Approx(s0.markers[i].rho));
    }
    std::vector<MonoSample> series{sample(s0), sample(s)};
    CHECK_THROWS_AS(blowup_estimate(series), NotBlownUp);
}

TEST_CASE("crossing fires in the step bracketing t = 1") {
    const double dt = 1e-3;
    MonokineticState s = golden_monokinetic(400);
    const double m0 = monokinetic_mass(s);
    std::vector<MonoSample> series{sample(s)};
    bool crossed = false;
    for (int i = 0; i < 1200 && !crossed; ++i) {
        try {
            evolve(s, dt);
            if (s.t < 0.99) CHECK(monokinetic_mass(s) == doctest::Approx(m0).epsilon(1e-8));
        } catch (const BlowUp& e) {
            crossed = true;
            CHECK(e.t_lo() <= 1.0 + 1e-9);
            CHECK(e.t_hi() >= 1.0 - 1e-9);
        }
        series.push_back(sample(s));
    }
    REQUIRE(crossed);
    CHECK(s.crossed);
    CHECK_THROWS_AS(evolve(s, dt), BlowUp);
    const BlowupEstimate est = blowup_estimate(series);
    CHECK(std::abs(est.t_star - 1.0) <= 2.0 * dt);
    CHECK(est.gradient_growth.back().second > 100.0);
}

TEST_CASE("rarefaction never crosses and its gradient decays like 1/(1+t)") {
    MonokineticState s = make_monokinetic([](double x) { return x; }, [](double) { return 1.0; },
                                          -0.5, 0.5, 100);
    std::vector<MonoSample> series{sample(s)};
    for (int i = 0; i < 200; ++i) {
        evolve(s, 0.01);
        series.push_back(sample(s));
    }
    CHECK(series.back().max_dxu == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(blowup_estimate(series), NotBlownUp);
}

TEST_CASE("peak density follows 1/(1-t) on the golden family") {
    MonokineticState s = golden_monokinetic(1000);
    for (int i = 0; i < 950; ++i) {
        evolve(s, 1e-3);
        if (s.t >= 0.5 - 1e-12)
            CHECK(peak_density(s) * (1.0 - s.t) == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("deposit keeps the mass and concentrates near u") {
    const PhaseGrid g = PhaseGrid::make(1, 2.0, 4.0, 200, 400);
    MonokineticState s = golden_monokinetic(500);
    for (Marker& m : s.markers) m.x += 1.0;
    const DistributionField f = deposit_to_grid(s, g, 3.0 * g.dv);
    CHECK(f.mass() == doctest::Approx(monokinetic_mass(s)).epsilon(1e-6));

    // uniform velocity off the cell centers, narrowest admissible width
    MonokineticState flat = make_monokinetic([](double) { return 0.003; },
                                             [](double) { return 1.0; }, 0.5, 1.5, 500);
    const DistributionField narrow = deposit_to_grid(flat, g, g.dv);
    const int i = 100;
    double total = 0.0, near = 0.0;
    for (int k = 0; k < g.nv; ++k) {
        total += narrow.at(i, k);
        const double lo = g.v0() + k * g.dv, hi = lo + g.dv;
        if (hi > 0.003 - 2.0 * g.dv && lo < 0.003 + 2.0 * g.dv) near += narrow.at(i, k);
    }
    CHECK(near >= 0.95 * total);
    CHECK_THROWS_AS(deposit_to_grid(s, PhaseGrid::make(2, 1.0, 1.0, 2, 2), 0.1), ValidationError);
}

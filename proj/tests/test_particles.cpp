#include <doctest.h>

#include <cmath>

#include "kinetic/errors.hpp"
#include "kinetic/particles.hpp"
#include "kinetic/scattering.hpp"

using namespace kinetic;

TEST_CASE("coupling calibration from the kernel integral") {
    PsiSpec ind;
    CHECK(calibrate_kappa(1.0, ind, 1).kappa == doctest::Approx(0.5));
    CHECK(calibrate_kappa(2.0, ind, 2).kappa == doctest::Approx(2.0 / M_PI));
    PsiSpec tri{PsiShape::Triangle, 1.0};
    CHECK(calibrate_kappa(1.0, tri, 1).kappa == doctest::Approx(1.0));
    CHECK(calibrate_kappa(1.0, tri, 2).kappa == doctest::Approx(3.0 / M_PI));
    PsiSpec none{PsiShape::Indicator, 0.0};
    CHECK_THROWS_AS(calibrate_kappa(1.0, none, 1), ZeroWeight);
}

TEST_CASE("refining eps with N leaves the coupling invariant") {
    for (int d : {1, 2}) {
        const PsiSpec psi;
        const ParticleEnsemble a = ParticleEnsemble::make(d, 100, 1.3, psi);
        const ParticleEnsemble b = ParticleEnsemble::make(d, 100 << d, 1.3, psi);
        CHECK(b.eps == doctest::Approx(0.5 * a.eps));
        for (const ParticleEnsemble* e : {&a, &b})
            CHECK(e->kappa * double(e->size()) * std::pow(e->eps, d) * psi.integral(d) ==
                  doctest::Approx(1.3));
    }
}

TEST_CASE("split-mix output matches the published reference stream") {
    SplitMix64 r(0);
    CHECK(r.next() == 0xe220a8397b1dcdafULL);
    CHECK(r.next() == 0x6e789e6aa1b965f4ULL);
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("two co-located particles attract with unit acceleration") {
    ParticleEnsemble e = ParticleEnsemble::make(1, 2, 1.0);
    e.eps = 1.0;
    e.kappa = 0.5;
    e.v[0][0] = 1.0;
    e.v[1][0] = -1.0;
    const auto a = rcs_rhs(e);
    CHECK(a[0][0] == doctest::Approx(-1.0));
    CHECK(a[1][0] == doctest::Approx(1.0));
}

TEST_CASE("flocked or separated ensembles feel no force") {
    ParticleEnsemble e = ParticleEnsemble::make(1, 3, 1.0);
    e.eps = 0.1;
    for (std::size_t i = 0; i < 3; ++i) e.v[i][0] = 0.7;
    for (const Vec& a : rcs_rhs(e)) CHECK(a[0] == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        e.x[i][0] = 0.5 * double(i);
        e.v[i][0] = double(i);
    }
    for (const Vec& a : rcs_rhs(e)) CHECK(a[0] == 0.0);
    // free flight
    ParticleEnsemble before = e;
    step_rk4(e, 0.01);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(e.x[i][0] == doctest::Approx(before.x[i][0] + before.v[i][0] * 0.01));
        CHECK(e.v[i][0] == before.v[i][0]);
    }
}

TEST_CASE("cell-list forces equal brute force bit for bit") {
    for (int d : {1, 2}) {
        ParticleEnsemble e = ParticleEnsemble::make(d, 1000, 1.0);
        PatchSpec p;
        p.center_x = {1.0, 1.0};
        p.center_v = {0.0, 0.0};
        p.side = 1.0;
        sample_patch(e, p, 99 + d);
        const auto fast = rcs_rhs(e);
        const auto slow = rcs_rhs_bruteforce(e);
        bool same = true;
        for (std::size_t i = 0; i < e.size(); ++i)
            for (int a = 0; a < d; ++a) same = same && fast[i][a] == slow[i][a];
        CHECK(same);
    }
}

TEST_CASE("RK4 conserves momentum and shrinks the velocity diameter") {
    ParticleEnsemble e = ParticleEnsemble::make(2, 400, 1.0);
    PatchSpec p;
    p.center_x = {1.0, 1.0};
    p.center_v = {0.2, -0.1};
    p.side = 1.0;
    sample_patch(e, p, 5);
    const Vec m0 = mean_velocity(e);
    double diam = velocity_diameter(e);
    for (int n = 0; n < 50; ++n) {
        step_rk4(e, particle_dt(e));
        const Vec m = mean_velocity(e);
        CHECK(std::abs(m[0] - m0[0]) <= 1e-10);
        CHECK(std::abs(m[1] - m0[1]) <= 1e-10);
        const double dnew = velocity_diameter(e);
        CHECK(dnew <= diam + 1e-10);
        diam = dnew;
    }
}

TEST_CASE("relative velocity of a pair decays at rate 2 kappa psi(0)") {
    ParticleEnsemble e = ParticleEnsemble::make(1, 2, 1.0);
    e.eps = 1.0;
    e.v[0][0] = 1e-3;
    e.v[1][0] = -1e-3;
    const double dt = 1e-3;
    const double w0 = e.v[0][0] - e.v[1][0];
    step_rk4(e, dt);
    const double w1 = e.v[0][0] - e.v[1][0];
    const double slope = std::log(w1 / w0) / dt;
    CHECK(slope == doctest::Approx(-2.0 * e.kappa).epsilon(0.01));
    CHECK(e.v[0][0] + e.v[1][0] == doctest::Approx(0.0));
    CHECK_THROWS_AS(step_rk4(e, 0.0), ValidationError);
}

TEST_CASE("particle time step") {
    ParticleEnsemble e = ParticleEnsemble::make(1, 1000, 1.0);
    CHECK(particle_dt(e) == 1e-3);
    e.v[3][0] = 0.1;
    CHECK(particle_dt(e) == 1e-3);
    e.v[3][0] = -2.0;
    CHECK(particle_dt(e) == doctest::Approx(1e-3 / 8.0).epsilon(1e-12));
}

TEST_CASE("binning deposits 1/N per particle") {
    const PhaseGrid g = PhaseGrid::make(1, 4.0, 2.0, 4, 4);
    ParticleEnsemble e = ParticleEnsemble::make(1, 2, 1.0);
    e.x[0][0] = 1.5;  // cell center
    e.v[0][0] = 0.25;
    e.x[1][0] = 9.0;  // outside
    const BinnedField b = bin_empirical(e, g);
    CHECK(b.out_of_domain == 1);
    CHECK(b.field.at(1, 2) == doctest::Approx(1.0 / (2.0 * g.cell_volume())));
    CHECK(b.field.mass() == doctest::Approx(0.5));

    ParticleEnsemble empty = e;
    empty.x.clear();
    empty.v.clear();
    CHECK(bin_empirical(empty, g).field.max_value() == 0.0);

    const std::vector<DistributionField> one{b.field};
    CHECK(compare_to_kinetic(one, one)[0] == 0.0);
    const std::vector<DistributionField> none;
    CHECK_THROWS_AS(compare_to_kinetic(one, none), GridMismatch);
}

TEST_CASE("binning error of i.i.d. samples shrinks with N") {
    const PhaseGrid g = PhaseGrid::make(1, 4.0, 4.0, 16, 16);
    PatchSpec p;
    p.center_x = {2.0, 0.0};
    p.center_v = {0.0, 0.0};
    p.side = 2.0;
    p.height = 0.25;
    const DistributionField exact = make_patch(g, p);
    double prev = 1e9;
    for (std::size_t N : {1000, 10000, 100000}) {
        ParticleEnsemble e = ParticleEnsemble::make(1, N, 1.0);
        sample_patch(e, p, 11);
        const double dist = l1_distance(bin_empirical(e, g).field, exact);
        CHECK(dist < prev);
        prev = dist;
    }
}

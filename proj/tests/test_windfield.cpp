#include <doctest.h>

#include <cmath>

#include "driftsim/windfield.hpp"

using namespace driftsim;
using namespace driftsim::wind;

TEST_CASE("gust profile is zero before arrival and peaks at half duration") {
    GustEvent e;
    e.amplitude = 19.0;
    e.direction = Vec2(0, 1);
    e.t_start = 5.0;
    e.duration = 10.0;
    e.origin = Vec2(0, 0);
    e.propagation_speed = 10.0;

    const Vec2 p(0, 20);  // arrival at t_start + 2
    CHECK(gust_profile(e, p, 6.9).norm() == 0.0);
    const Vec2 peak = gust_profile(e, p, 7.0 + 5.0);
    CHECK(peak.y() == doctest::Approx(19.0).epsilon(1e-12));
    CHECK(peak.x() == doctest::Approx(0.0));
    CHECK(gust_profile(e, p, 17.1).norm() == 0.0);
}

TEST_CASE("gust envelope formula at a quarter of the duration") {
    GustEvent e;
    e.amplitude = 18.0;
    e.direction = Vec2(1, 0);
    e.t_start = 0.0;
    e.duration = 10.0;
    e.propagation_speed = 0.0;  // arrives everywhere at t_start
    // 0.5*(1 - cos(pi/2)) = 0.5
    const Vec2 v = gust_profile(e, Vec2(3, 4), 2.5);
    CHECK(v.x() == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("gust envelope is C1 at both ends") {
    GustEvent e;
    e.amplitude = 10.0;
    e.direction = Vec2(1, 0);
    e.t_start = 1.0;
    e.duration = 4.0;
    const double h = 1e-5;
    const auto rate = [&](double t) {
        return (gust_profile(e, Vec2(0, 0), t + h).x() - gust_profile(e, Vec2(0, 0), t - h).x()) /
               (2 * h);
    };
    CHECK(std::abs(rate(1.0)) < 1e-3);
    CHECK(std::abs(rate(5.0)) < 1e-3);
}

TEST_CASE("sigma zero yields an identically zero grid") {
    TurbulenceParams p;
    p.sigma = 0.0;
    p.grid_size = 64;
    const TurbulenceGrid g = synthesize_turbulence(p);
    for (double x : g.u) CHECK(x == 0.0);
    for (double x : g.v) CHECK(x == 0.0);
}

TEST_CASE("grid size must be a power of two") {
    TurbulenceParams p;
    p.grid_size = 100;
    CHECK_THROWS_AS(synthesize_turbulence(p), InvalidGridError);
}

TEST_CASE("same seed reproduces the grid bit for bit") {
    TurbulenceParams p;
    p.sigma = 1.5;
    p.grid_size = 64;
    p.cell = 2.0;
    p.seed = 1234;
    const TurbulenceGrid a = synthesize_turbulence(p);
    const TurbulenceGrid b = synthesize_turbulence(p);
    REQUIRE(a.u.size() == b.u.size());
    for (std::size_t i = 0; i < a.u.size(); ++i) {
        CHECK(a.u[i] == b.u[i]);
        CHECK(a.v[i] == b.v[i]);
    }
}

TEST_CASE("turbulence variance matches sigma^2 within the Monte-Carlo band") {
    TurbulenceParams p;
    p.sigma = 1.0;
    p.L = 50.0;
    p.grid_size = 256;
    p.cell = 2.0;
    double var_u = 0.0, var_v = 0.0;
    const int n_seeds = 20;
    for (int s = 0; s < n_seeds; ++s) {
        p.seed = 1000 + s;
        const TurbulenceGrid g = synthesize_turbulence(p);
        double su = 0.0, sv = 0.0;
        for (double x : g.u) su += x * x;
        for (double x : g.v) sv += x * x;
        var_u += su / g.u.size();
        var_v += sv / g.v.size();
    }
    var_u /= n_seeds;
    var_v /= n_seeds;
    CHECK(var_u > 0.7);
    CHECK(var_u < 1.3);
    CHECK(var_v > 0.7);
    CHECK(var_v < 1.3);
}

TEST_CASE("sample_wind composes mean, masks, and gusts") {
    WindField calm = WindField::create(Vec2(0, 0), std::nullopt, {}, {});
    CHECK(sample_wind(calm, Vec2(17, -3), 9.0).norm() == 0.0);

    WindField masked = WindField::create(Vec2(9, 0), std::nullopt, {},
                                         {MaskRect{Vec2(-10, -10), Vec2(10, 10)}});
    CHECK(sample_wind(masked, Vec2(0, 0), 1.0).norm() == 0.0);
    CHECK(sample_wind(masked, Vec2(20, 0), 1.0).x() == doctest::Approx(9.0));

    GustEvent gust;
    gust.amplitude = 19.0;
    gust.direction = Vec2(0, 1);
    gust.t_start = 0.0;
    gust.duration = 10.0;
    gust.propagation_speed = 0.0;
    WindField gusty = WindField::create(Vec2(0, 0), std::nullopt, {gust}, {});
    CHECK(sample_wind(gusty, Vec2(0, 0), 5.0).norm() == doctest::Approx(19.0).epsilon(1e-12));
}

TEST_CASE("turbulence sampling is deterministic and advects with the mean") {
    TurbulenceParams p;
    p.sigma = 1.0;
    p.grid_size = 64;
    p.cell = 2.0;
    p.seed = 77;
    WindField f = WindField::create(Vec2(3, 0), p, {}, {});
    const Vec2 a = sample_wind(f, Vec2(10, 5), 2.0);
    const Vec2 b = sample_wind(f, Vec2(10, 5), 2.0);
    CHECK(a.x() == b.x());
    CHECK(a.y() == b.y());
    // Taylor frozen field: the pattern at (p, t) equals the pattern at
    // (p + mean dt, t + dt).
    const Vec2 c = sample_wind(f, Vec2(10, 5) + Vec2(3, 0) * 1.5, 3.5);
    CHECK(c.x() == doctest::Approx(a.x()).epsilon(1e-12));
    CHECK(c.y() == doctest::Approx(a.y()).epsilon(1e-12));
}

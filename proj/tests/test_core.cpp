#include <doctest.h>

#include <random>

#include "driftsim/core.hpp"

using namespace driftsim;

TEST_CASE("signed_angle quarter turn and identity") {
    CHECK(signed_angle({1, 0}, {0, 1}) == doctest::Approx(kPi / 2).epsilon(1e-12));
    CHECK(signed_angle({1, 0}, {1, 0}) == doctest::Approx(0.0));
    // atan2 oracle
    CHECK(signed_angle({1, 0}, {1, -1}) == doctest::Approx(-kPi / 4).epsilon(1e-12));
}

TEST_CASE("signed_angle rejects zero vectors") {
    CHECK_THROWS_AS(signed_angle({0, 0}, {1, 0}), ZeroVectorError);
    CHECK_THROWS_AS(signed_angle({1, 0}, {0, 0}), ZeroVectorError);
}

TEST_CASE("signed_angle resolves the pi branch to +pi") {
    CHECK(signed_angle({1, 0}, {-1, 0}) == doctest::Approx(kPi));
    CHECK(signed_angle({1, 0}, {-1, 0}) > 0.0);
}

TEST_CASE("rotate basics") {
    const Vec2 r = rotate({1, 0}, kPi / 2);
    CHECK(r.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.y() == doctest::Approx(1.0));
    const Vec2 id = rotate({3, 4}, 0.0);
    CHECK(id.x() == doctest::Approx(3.0));
    CHECK(id.y() == doctest::Approx(4.0));
    const Vec2 hex = rotate({1, 0}, kPi / 6);
    CHECK(hex.x() == doctest::Approx(0.8660254).epsilon(1e-6));
    CHECK(hex.y() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("rotate round trip and length preservation") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> ang(-6.0, 6.0);
    for (int i = 0; i < 500; ++i) {
        const Vec2 v(coord(rng), coord(rng));
        const double theta = ang(rng);
        const Vec2 back = rotate(rotate(v, theta), -theta);
        CHECK((back - v).norm() < 1e-10);
        CHECK(rotate(v, theta).norm() == doctest::Approx(v.norm()).epsilon(1e-12));
    }
}

TEST_CASE("signed_angle antisymmetry away from the branch") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    for (int i = 0; i < 500; ++i) {
        const Vec2 a(coord(rng), coord(rng));
        const Vec2 b(coord(rng), coord(rng));
        if (a.norm() < 1e-6 || b.norm() < 1e-6) continue;
        const double ab = signed_angle(a, b);
        if (std::abs(std::abs(ab) - kPi) < 1e-9) continue;
        CHECK(signed_angle(b, a) == doctest::Approx(-ab).epsilon(1e-9));
    }
}

TEST_CASE("Rotation2 composes with its inverse to identity") {
    const Rotation2 r{0.73};
    const Vec2 v(2.0, -1.0);
    const Vec2 round = r.inverse().apply(r.apply(v));
    CHECK((round - v).norm() < 1e-12);
    CHECK(r.compose(r.inverse()).angle == doctest::Approx(0.0));
}

TEST_CASE("euler round trip matches the project convention") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ang(-1.2, 1.2);
    for (int i = 0; i < 200; ++i) {
        const double roll = ang(rng), pitch = ang(rng), yaw = ang(rng);
        const Mat3 r_bi = rotation_from_euler(roll, pitch, yaw);
        const Vec3 q = euler_from_rotation(r_bi);
        CHECK(q.x() == doctest::Approx(roll).epsilon(1e-9));
        CHECK(q.y() == doctest::Approx(pitch).epsilon(1e-9));
        CHECK(q.z() == doctest::Approx(yaw).epsilon(1e-9));
    }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "driftsim/trajgen.hpp"

using namespace driftsim;
using namespace driftsim::traj;

namespace {

PlannerLimits test_limits() {
    PlannerLimits lim;
    lim.f_planar_max = 2.8174;
    lim.k_d = 0.0142;
    lim.mass = 0.54;
    lim.v_air_max = 0.0;
    lim.v_o_max = 0.0;
    lim.r_c = 2.0;
    lim.v_c = 1.25;
    lim.r_s = 12.5;
    lim.dT_s = 1.0;
    return lim;
}

PeerInfo peer(std::uint32_t id, double v_c, const Vec2& pd_dot, double v_w_op = 12.0) {
    PeerInfo p;
    p.id = id;
    p.v_c = v_c;
    p.pd_dot = pd_dot;
    p.r_c = 1.0;
    p.v_w_op = v_w_op;
    return p;
}

}  // namespace

// --------------------------- maneuver ranking ------------------------------

TEST_CASE("over-winded and hovering peers rank at zero maneuverability") {
    CHECK(v_c_star(1.25, 13.0, 12.0, 1.0) == 0.0);
    CHECK(v_c_star(1.25, 5.0, 12.0, 0.0) == 0.0);
    CHECK(v_c_star(1.25, 5.0, 12.0, 1.0) == 1.25);
}

TEST_CASE("self maneuvers for less capable peers") {
    const PeerInfo self = peer(1, 1.25, Vec2(1, 0));
    // peer 2 is over its operating wind: its v_c* = 0, ours is positive
    auto m = rank_vehicles(self, {peer(2, 1.25, Vec2(1, 0), 4.0)}, 5.0);
    CHECK(m.count(2) == 1);
    // hovering peer ranks zero as well
    m = rank_vehicles(self, {peer(3, 1.25, Vec2(0, 0))}, 5.0);
    CHECK(m.count(3) == 1);
}

TEST_CASE("equal maneuverability breaks ties by ID: the higher ID yields") {
    const PeerInfo self5 = peer(5, 1.0, Vec2(1, 0));
    const PeerInfo self3 = peer(3, 1.0, Vec2(1, 0));
    CHECK(rank_vehicles(self5, {peer(3, 1.0, Vec2(0, 1))}, 0.0).count(3) == 1);
    CHECK(rank_vehicles(self3, {peer(5, 1.0, Vec2(0, 1))}, 0.0).empty());
}

TEST_CASE("duplicate peer IDs are rejected") {
    const PeerInfo self = peer(1, 1.0, Vec2(1, 0));
    CHECK_THROWS_AS(
        rank_vehicles(self, {peer(2, 1.0, Vec2(1, 0)), peer(2, 1.0, Vec2(0, 1))}, 0.0),
        DuplicateIdError);
}

// --------------------------- clustering ------------------------------------

namespace {

std::vector<ScanReturn> wall_scan(double range, double b0, double b1, double step_deg = 1.0) {
    std::vector<ScanReturn> scan;
    for (double b = b0; b <= b1 + 1e-9; b += deg2rad(step_deg)) {
        ScanReturn r;
        r.range = range;
        r.bearing = b;
        scan.push_back(r);
    }
    return scan;
}

}  // namespace

TEST_CASE("a contiguous wall is one cluster; a range gap splits it") {
    const auto one = cluster_obstacles(wall_scan(6.0, -0.3, 0.3), Vec2(0, 0), {}, 1.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0].points.size() >= 30);
    CHECK(one[0].e1 == 0);
    CHECK(one[0].e2 == static_cast<int>(one[0].points.size()) - 1);

    auto scan = wall_scan(6.0, -0.3, -0.05);
    const auto far_part = wall_scan(9.0, 0.05, 0.3);
    scan.insert(scan.end(), far_part.begin(), far_part.end());
    const auto two = cluster_obstacles(scan, Vec2(0, 0), {}, 1.0);
    CHECK(two.size() == 2);
}

TEST_CASE("cluster ids stay stable and velocity comes from centroid displacement") {
    const auto first = cluster_obstacles(wall_scan(6.0, -0.2, 0.2), Vec2(0, 0), {}, 1.0);
    REQUIRE(first.size() == 1);
    const int id0 = first[0].id;

    // same wall seen 1 m further +x one sensor period later
    std::vector<ScanReturn> moved;
    for (const auto& r : wall_scan(6.0, -0.2, 0.2)) {
        ScanReturn m = r;
        const Vec2 p = 6.0 * Vec2(std::cos(r.bearing), std::sin(r.bearing)) + Vec2(1.0, 0.0);
        m.range = p.norm();
        m.bearing = std::atan2(p.y(), p.x());
        moved.push_back(m);
    }
    const auto second = cluster_obstacles(moved, Vec2(0, 0), first, 1.0);
    REQUIRE(second.size() == 1);
    CHECK(second[0].id == id0);
    CHECK(second[0].velocity.x() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(second[0].velocity.y() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("attached truth velocities win over finite differences") {
    auto scan = wall_scan(6.0, -0.2, 0.2);
    for (auto& r : scan) r.velocity = Vec2(0.5, -0.25);
    const auto got = cluster_obstacles(scan, Vec2(0, 0), {}, 1.0);
    REQUIRE(got.size() == 1);
    CHECK(got[0].velocity.x() == doctest::Approx(0.5));
    CHECK(got[0].velocity.y() == doctest::Approx(-0.25));
}

TEST_CASE("empty scan produces no clusters") {
    CHECK(cluster_obstacles({}, Vec2(0, 0), {}, 1.0).empty());
}

TEST_CASE("min_idx is the closest sensed point") {
    std::vector<ScanReturn> scan;
    for (int i = -10; i <= 10; ++i) {
        ScanReturn r;
        r.bearing = deg2rad(static_cast<double>(i));
        r.range = 6.0 + 0.05 * std::abs(i);
        scan.push_back(r);
    }
    const auto got = cluster_obstacles(scan, Vec2(0, 0), {}, 1.0);
    REQUIRE(got.size() == 1);
    CHECK(got[0].min_idx == 10);  // the i = 0 ray
}

// --------------------------- projection geometry ----------------------------

TEST_CASE("outside-branch projection satisfies the tangency geometry") {
    // course toward +y picks the k = +1 tangent; -y would pick the mirror
    const Vec2 p_d(0, 0), p_k(5, 0);
    const Projection pr = project_point(p_d, Vec2(0, 1), p_k, p_k, 3.0);
    CHECK(pr.p_star.x() == doctest::Approx(3.2).epsilon(1e-9));
    CHECK(pr.p_star.y() == doctest::Approx(2.4).epsilon(1e-9));
    CHECK((pr.p_star - p_k).norm() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK((pr.p_star - p_d).dot(pr.p_star - p_k) == doctest::Approx(0.0).epsilon(1e-9));

    const Projection mirror = project_point(p_d, Vec2(0, -1), p_k, p_k, 3.0);
    CHECK(mirror.p_star.y() == doctest::Approx(-2.4).epsilon(1e-9));
}

TEST_CASE("projection degenerates to the point itself as r_c goes to zero") {
    const Vec2 p_d(1, 1), p_k(4, 5);
    const Projection pr = project_point(p_d, Vec2(1, 0), p_k, p_k, 1e-12);
    CHECK((pr.p_star - p_k).norm() < 1e-6);
}

TEST_CASE("inside-branch projection pushes out along the rotated axis") {
    const Projection pr = project_point(Vec2(0, 0), Vec2(0, 1), Vec2(1, 0), Vec2(1, 0), 2.0);
    CHECK(pr.p_star.x() == doctest::Approx(-0.9997).epsilon(1e-3));
    CHECK(pr.p_star.y() == doctest::Approx(0.0349).epsilon(1e-2));
    CHECK((pr.p_star - Vec2(1, 0)).norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("coincident point is rejected") {
    CHECK_THROWS_AS(project_point(Vec2(0, 0), Vec2(1, 0), Vec2(0, 0), Vec2(1, 0), 1.0),
                    CoincidentPointError);
}

TEST_CASE("random outside-branch projections: tangency oracle") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coord(-20.0, 20.0);
    std::uniform_real_distribution<double> rc_dist(0.1, 5.0);
    int checked = 0;
    while (checked < 300) {
        const Vec2 p_d(coord(rng), coord(rng));
        const Vec2 p_k(coord(rng), coord(rng));
        const double r_c = rc_dist(rng);
        if ((p_k - p_d).norm() <= r_c + 1e-6) continue;
        const Vec2 course(std::cos(coord(rng)), std::sin(coord(rng)));
        const Projection pr = project_point(p_d, course, p_k, p_k, r_c);
        CHECK((pr.p_star - p_k).norm() == doctest::Approx(r_c).epsilon(1e-9));
        const double dot = (pr.p_star - p_d).dot(pr.p_star - p_k);
        CHECK(std::abs(dot) < 1e-8 * std::max(1.0, (p_k - p_d).squaredNorm()));
        ++checked;
    }
}

TEST_CASE("inside-branch projections increase the vehicle-obstacle distance") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    int checked = 0;
    while (checked < 200) {
        const Vec2 p_d(coord(rng), coord(rng));
        const Vec2 p_k(coord(rng), coord(rng));
        const double r_c = 2.5;
        const double n = (p_k - p_d).norm();
        if (n < 1e-3 || n > r_c) continue;
        const Vec2 course(std::cos(coord(rng)), std::sin(coord(rng)));
        const Projection pr = project_point(p_d, course, p_k, p_k, r_c);
        CHECK((pr.p_star - p_k).norm() == doctest::Approx(r_c).epsilon(1e-9));
        // moving toward p_star moves away from the obstacle point
        const Vec2 dir = (pr.p_star - p_d).normalized();
        const double d_now = n;
        const double d_later = (p_k - (p_d + 0.2 * dir)).norm();
        CHECK(d_later > d_now - 1e-9);
        ++checked;
    }
}

TEST_CASE("tangent candidates switch anchors under clearance violation") {
    const Vec2 p_d(0, 0), e1(3, 2), e2(3, -2), mn(2.5, 0);
    const auto clear = tangent_candidates(p_d, e1, e2, mn, 5.0, 2.0);
    CHECK((clear.s1 - (e1 - mn)).norm() == doctest::Approx(0.0));
    CHECK((clear.s2 - e1).norm() == doctest::Approx(0.0));
    CHECK((clear.s3 - (e2 - mn)).norm() == doctest::Approx(0.0));
    CHECK((clear.s4 - e2).norm() == doctest::Approx(0.0));

    const auto viol = tangent_candidates(p_d, e1, e2, mn, 1.0, 2.0);
    CHECK((viol.s1 - e1).norm() == doctest::Approx(0.0));
    CHECK((viol.s3 - e2).norm() == doctest::Approx(0.0));
}

TEST_CASE("symmetric obstacle gives mirrored s1/s3 candidates") {
    const Vec2 p_d(0, 0);
    std::vector<Vec2> pts;
    for (double y = -2.0; y <= 2.0 + 1e-9; y += 0.25) pts.emplace_back(6.0, y);
    std::size_t min_i = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i].norm() < pts[min_i].norm()) min_i = i;
    const Vec2 course(1, 0);
    const double r_c = 1.5;
    std::vector<Projection> prs;
    for (const auto& p : pts) prs.push_back(project_point(p_d, course, p, pts[min_i], r_c));
    const auto tc = tangent_candidates(p_d, prs.front().p_star, prs.back().p_star,
                                       prs[min_i].p_star, pts[min_i].norm(), r_c);
    CHECK(tc.s1.x() == doctest::Approx(tc.s3.x()).epsilon(1e-9));
    CHECK(tc.s1.y() == doctest::Approx(-tc.s3.y()).epsilon(1e-9));
}

// --------------------------- course planning -------------------------------

namespace {

ObstacleCluster cluster_from_points(std::vector<Vec2> pts, const Vec2& p_d,
                                    const Vec2& vel = Vec2::Zero(), int id = 0) {
    ObstacleCluster c;
    c.id = id;
    c.points = std::move(pts);
    c.velocity = vel;
    c.e1 = 0;
    c.e2 = static_cast<int>(c.points.size()) - 1;
    c.min_idx = 0;
    for (std::size_t i = 1; i < c.points.size(); ++i)
        if ((c.points[i] - p_d).norm() < (c.points[c.min_idx] - p_d).norm())
            c.min_idx = static_cast<int>(i);
    return c;
}

}  // namespace

TEST_CASE("no clusters steers straight to the goal with a full feasible circle") {
    PlanInput in;
    in.p_d = Vec2(0, 0);
    in.course_dir = Vec2(1, 0);
    in.goal = Vec2(5, 5);
    const auto plan = plan_course_change({}, in, test_limits());
    CHECK(plan.delta_phi == doctest::Approx(kPi / 4).epsilon(1e-12));
    REQUIRE(plan.feasible_set.size() == 1);
    CHECK(plan.feasible_set[0].lo == doctest::Approx(-kPi));
    CHECK(plan.feasible_set[0].hi == doctest::Approx(kPi));
}

TEST_CASE("symmetric head-on obstacle breaks the tie counterclockwise") {
    PlanInput in;
    in.p_d = Vec2(0, 0);
    in.course_dir = Vec2(1, 0);
    in.v_now = 1.0;
    in.goal = Vec2(20, 0);
    std::vector<Vec2> pts;
    for (double y = -2.0; y <= 2.0 + 1e-9; y += 0.1) pts.emplace_back(8.0, y);
    const auto plan =
        plan_course_change({cluster_from_points(std::move(pts), in.p_d)}, in, test_limits());
    CHECK(plan.delta_phi > 0.0);
    CHECK(plan.z_k == CircumnavDirection::CCW);
    CHECK(std::abs(plan.delta_phi) < kPi / 2);
}

TEST_CASE("chosen course change always lies inside the feasible set") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    PlannerLimits lim = test_limits();
    for (int trial = 0; trial < 50; ++trial) {
        PlanInput in;
        in.p_d = Vec2(0, 0);
        in.course_dir = Vec2(std::cos(coord(rng)), std::sin(coord(rng))).normalized();
        in.v_now = 1.0;
        in.goal = Vec2(coord(rng), coord(rng)) * 2.0;
        std::vector<Vec2> pts;
        const Vec2 base(coord(rng), coord(rng));
        if (base.norm() < lim.r_c + 0.5) continue;
        for (int i = 0; i < 12; ++i) pts.push_back(base + Vec2(0.2 * i, 0.1 * i));
        try {
            const auto plan =
                plan_course_change({cluster_from_points(std::move(pts), in.p_d)}, in, lim);
            bool inside = false;
            for (const auto& ivl : plan.feasible_set)
                inside = inside || (plan.delta_phi >= ivl.lo && plan.delta_phi <= ivl.hi);
            CHECK(inside);
        } catch (const NoFeasibleCourseError&) {
            // acceptable outcome for a blocked scene
        }
    }
}

TEST_CASE("a wall with one gap forces the course into the gap") {
    PlanInput in;
    in.p_d = Vec2(0, 0);
    in.course_dir = Vec2(1, 0);
    in.v_now = 1.0;
    in.goal = Vec2(30, 0);
    PlannerLimits lim = test_limits();
    lim.r_c = 1.0;

    // wall along x = 8 from y = -25 to 25 with a gap at y in [4, 10]
    std::vector<Vec2> pts;
    for (double y = -25.0; y <= 25.0 + 1e-9; y += 0.5) {
        if (y > 4.0 && y < 10.0) continue;
        pts.emplace_back(8.0, y);
    }
    const auto plan =
        plan_course_change({cluster_from_points(std::move(pts), in.p_d)}, in, lim);

    // brute-force 1-degree oracle directly against the raw points
    const auto ray_ok = [&](double dphi) {
        const Vec2 dir = rotate(in.course_dir, dphi);
        for (const auto& p : pts) {
            const Vec2 r = p - in.p_d;
            if (dir.dot(r) <= 0.0) continue;
            if (std::abs(dir.x() * r.y() - dir.y() * r.x()) < lim.r_c) return false;
        }
        return true;
    };
    CHECK(ray_ok(plan.delta_phi));
    // the gap direction band: angles toward y in (4 + r_c, 10 - r_c) at x = 8
    const double lo = std::atan2(4.0 + lim.r_c, 8.0);
    const double hi = std::atan2(10.0 - lim.r_c, 8.0);
    const bool in_gap = plan.delta_phi > lo - deg2rad(2.0) && plan.delta_phi < hi + deg2rad(2.0);
    const bool around = std::abs(plan.delta_phi) > std::atan2(25.0, 8.0);
    CHECK(in_gap);
    CHECK(!around);
}

TEST_CASE("fully surrounding points give NoFeasibleCourse") {
    PlanInput in;
    in.p_d = Vec2(0, 0);
    in.course_dir = Vec2(1, 0);
    in.goal = Vec2(10, 0);
    PlannerLimits lim = test_limits();
    lim.r_c = 2.0;
    std::vector<Vec2> pts;
    for (int i = 0; i < 120; ++i) {
        const double a = -kPi + i * (2 * kPi / 120);
        pts.emplace_back(3.0 * std::cos(a), 3.0 * std::sin(a));
    }
    CHECK_THROWS_AS(plan_course_change({cluster_from_points(std::move(pts), in.p_d)}, in, lim),
                    NoFeasibleCourseError);
}

// --------------------------- sigmoid fitting -------------------------------

TEST_CASE("sigmoid coefficients match the closed form") {
    const PlannerLimits lim = test_limits();
    const auto seg = fit_sigmoid(0.0, kPi / 2, 2.0, SigmoidKind::Heading, lim);
    CHECK(seg.c3 == doctest::Approx(2.64665).epsilon(1e-4));
    CHECK(seg.c2 == doctest::Approx(2.64665).epsilon(1e-4));
    CHECK(seg.c1 == doctest::Approx(0.79331).epsilon(1e-4));
    CHECK(seg.value(seg.t0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(seg.value(seg.t0 + seg.tau_f) == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("zero-delta sigmoid is constant") {
    const auto seg = fit_sigmoid(0.7, 0.7, 1.0, SigmoidKind::Speed, test_limits());
    CHECK(seg.c1 == 0.0);
    CHECK(seg.value(seg.t0 + 0.5) == doctest::Approx(0.7));
}

TEST_CASE("endpoint exactness holds to 1e-12 for random fits") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> val(-3.0, 3.0);
    std::uniform_real_distribution<double> span(0.5, 10.0);
    const PlannerLimits lim = test_limits();
    for (int i = 0; i < 200; ++i) {
        const double a = val(rng), b = val(rng);
        const double tau = span(rng) + lim.tau_f_min_speed(std::abs(b - a));
        auto seg = fit_sigmoid(a, b, tau, SigmoidKind::Speed, lim);
        seg.t0 = val(rng);
        CHECK(seg.value(seg.t0) == doctest::Approx(a).epsilon(1e-12));
        CHECK(seg.value(seg.t0 + seg.tau_f) == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("at the minimum timespan the peak lateral acceleration is a_max") {
    const PlannerLimits lim = test_limits();
    const double dphi = kPi / 3;
    const double tau_min = lim.tau_f_min_heading(dphi, lim.v_c);
    const auto seg = fit_sigmoid(0.0, dphi, tau_min, SigmoidKind::Heading, lim);
    // peak heading rate c1 c2 times cruise speed equals a_max exactly
    CHECK(seg.c1 * seg.c2 * lim.v_c == doctest::Approx(lim.a_max()).epsilon(1e-12));
}

TEST_CASE("too-short timespans are rejected") {
    const PlannerLimits lim = test_limits();
    const double tau_min = lim.tau_f_min_heading(kPi / 2, lim.v_c);
    CHECK_THROWS_AS(fit_sigmoid(0.0, kPi / 2, 0.5 * tau_min, SigmoidKind::Heading, lim),
                    TooShortError);
}

// --------------------------- trajectory sampling ---------------------------

TEST_CASE("constant course and speed give constant velocity and zero accel") {
    PlanarTrajectory traj(0.0, Vec2(1, 2), 2.0, kPi / 6, 1.5);
    const auto s = sample_trajectory(traj, 3.0);
    CHECK(s.pd_dot.x() == doctest::Approx(1.5 * std::cos(kPi / 6)).epsilon(1e-12));
    CHECK(s.pd_dot.y() == doctest::Approx(1.5 * std::sin(kPi / 6)).epsilon(1e-12));
    CHECK(s.pd_ddot.norm() == doctest::Approx(0.0));
    CHECK(s.p_d.z() == doctest::Approx(2.0));
    // position integrates the constant velocity exactly
    CHECK(s.p_d.x() == doctest::Approx(1.0 + 3.0 * 1.5 * std::cos(kPi / 6)).epsilon(1e-12));
}

TEST_CASE("a single speed sigmoid peaks at d1 d2 along the course") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory traj(0.0, Vec2(0, 0), 2.0, 0.0, 0.0);
    auto seg = fit_sigmoid(0.0, 1.0, 3.0, SigmoidKind::Speed, lim);
    seg.t0 = 1.0;
    traj.add_segment(seg);
    // the tanh centre is at t0 + tau_f/2
    const auto s = sample_trajectory(traj, 1.0 + 1.5);
    CHECK(s.pd_ddot.x() == doctest::Approx(seg.c1 * seg.c2).epsilon(1e-9));
    CHECK(s.pd_ddot.y() == doctest::Approx(0.0));
}

TEST_CASE("analytic derivatives match central finite differences") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory traj(0.0, Vec2(0, 0), 2.0, 0.2, 0.8);
    auto h1 = fit_sigmoid(0.2, 1.4, 4.0, SigmoidKind::Heading, lim);
    h1.t0 = 1.0;
    traj.add_segment(h1);
    auto v1 = fit_sigmoid(0.8, 1.3, 5.0, SigmoidKind::Speed, lim);
    v1.t0 = 2.0;
    traj.add_segment(v1);
    auto h2 = fit_sigmoid(1.4, 0.9, 6.0, SigmoidKind::Heading, lim);
    h2.t0 = 7.0;
    traj.add_segment(h2);

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> when(0.5, 14.0);
    const double h = 1e-4;
    for (int i = 0; i < 100; ++i) {
        const double t = when(rng);
        const auto sm = sample_trajectory(traj, t);
        const auto sp = sample_trajectory(traj, t + h);
        const auto sn = sample_trajectory(traj, t - h);

        const Vec3 fd1 = (sp.p_d - sn.p_d) / (2 * h);
        const Vec3 fd2 = (sp.pd_dot - sn.pd_dot) / (2 * h);
        const Vec3 fd3 = (sp.pd_ddot - sn.pd_ddot) / (2 * h);
        const Vec3 fd4 = (sp.pd_d3 - sn.pd_d3) / (2 * h);

        CHECK((sm.pd_dot - fd1).norm() <= 1e-4 * std::max(1.0, fd1.norm()));
        CHECK((sm.pd_ddot - fd2).norm() <= 1e-4 * std::max(1.0, fd2.norm()));
        CHECK((sm.pd_d3 - fd3).norm() <= 1e-4 * std::max(1.0, fd3.norm()));
        CHECK((sm.pd_d4 - fd4).norm() <= 1e-4 * std::max(1.0, fd4.norm()));
    }
}

TEST_CASE("position integration is Richardson-consistent") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory coarse(0.0, Vec2(0, 0), 2.0, 0.0, 1.0, 0.1);
    PlanarTrajectory fine(0.0, Vec2(0, 0), 2.0, 0.0, 1.0, 0.0125);
    for (auto* tr : {&coarse, &fine}) {
        auto h1 = fit_sigmoid(0.0, 2.0, 4.0, SigmoidKind::Heading, lim);
        h1.t0 = 1.0;
        tr->add_segment(h1);
        auto v1 = fit_sigmoid(1.0, 0.2, 5.0, SigmoidKind::Speed, lim);
        v1.t0 = 3.0;
        tr->add_segment(v1);
    }
    for (double t : {2.0, 5.0, 9.0, 14.0}) {
        const Vec3 a = sample_trajectory(coarse, t).p_d;
        const Vec3 b = sample_trajectory(fine, t).p_d;
        CHECK((a - b).norm() < 1e-9);
    }
}

// --------------------------- appending -------------------------------------

TEST_CASE("appending a zero-delta segment leaves the trajectory unchanged") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory traj(0.0, Vec2(0, 0), 2.0, 0.3, 1.0);
    auto seg = fit_sigmoid(0.3, 0.3, 1.0, SigmoidKind::Heading, lim);
    seg.t0 = 2.0;
    append_transition(traj, seg, 2.0, lim);
    const auto s = sample_trajectory(traj, 5.0);
    CHECK(s.heading == doctest::Approx(0.3));
    CHECK(s.speed == doctest::Approx(1.0));
    CHECK(s.pd_ddot.norm() == doctest::Approx(0.0));
}

TEST_CASE("opposing overlapped turns are delayed or stretched to respect a_max") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory traj(0.0, Vec2(0, 0), 2.0, 0.0, lim.v_c);
    const double tau = lim.tau_f_min_heading(kPi / 2, lim.v_c);

    auto turn1 = fit_sigmoid(0.0, kPi / 2, tau, SigmoidKind::Heading, lim);
    turn1.t0 = 1.0;
    append_transition(traj, turn1, 1.0, lim);
    auto turn2 = fit_sigmoid(kPi / 2, 0.0, tau, SigmoidKind::Heading, lim);
    turn2.t0 = 1.0 + 0.3 * tau;  // heavy overlap with the first turn
    append_transition(traj, turn2, turn2.t0, lim);

    // dense-sampling oracle at 1 ms
    double peak = 0.0;
    for (double t = 0.0; t <= traj.last_transition_end() + 2.0; t += 1e-3) {
        const auto s = sample_trajectory(traj, t);
        peak = std::max(peak, s.pd_ddot.norm());
    }
    CHECK(peak <= lim.a_max() + 1e-6);
}

TEST_CASE("disjoint segments keep the larger individual peak") {
    const PlannerLimits lim = test_limits();
    PlanarTrajectory traj(0.0, Vec2(0, 0), 2.0, 0.0, lim.v_c);
    auto turn1 = fit_sigmoid(0.0, kPi / 4, 4.0, SigmoidKind::Heading, lim);
    turn1.t0 = 1.0;
    append_transition(traj, turn1, 1.0, lim);
    auto turn2 = fit_sigmoid(kPi / 4, kPi / 2, 8.0, SigmoidKind::Heading, lim);
    turn2.t0 = 20.0;  // far from the first
    append_transition(traj, turn2, 5.0, lim);

    const double peak1 = turn1.c1 * turn1.c2 * lim.v_c;
    double peak = 0.0;
    for (double t = 0.0; t <= 35.0; t += 1e-3)
        peak = std::max(peak, sample_trajectory(traj, t).pd_ddot.norm());
    CHECK(peak == doctest::Approx(peak1).epsilon(1e-2));
}

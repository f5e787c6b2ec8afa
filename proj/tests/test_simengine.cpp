#include <doctest.h>

#include <sstream>

#include "driftsim/scenario_io.hpp"
#include "driftsim/simengine.hpp"
#include "sim_params.hpp"

using namespace driftsim;
using namespace driftsim::sim;

namespace {

VehicleSpec basic_vehicle(std::uint32_t id, const Vec3& start, const Vec2& goal) {
    VehicleSpec v;
    v.params = testing::sim_vehicle();
    v.params.id = id;
    v.params.r_cv = 0.3;
    v.start = start;
    v.goal = goal;
    v.drift_cfg.r_ce_min = 0.5;
    v.drift_cfg.r_ce_max = 1.5;
    return v;
}

Scenario baseline_scenario() {
    Scenario sc;
    sc.name = "baseline";
    sc.vehicles.push_back(basic_vehicle(1, Vec3(0, 0, 2), Vec2(10, 0)));
    sc.wind = wind::WindField::create(Vec2(0, 0), std::nullopt, {}, {});
    sc.t_end = 30.0;
    return sc;
}

}  // namespace

TEST_CASE("baseline: one vehicle reaches the goal with no safety events") {
    const Scenario sc = baseline_scenario();
    const RunLog log = run(sc);
    REQUIRE(log.summaries.size() == 1);
    CHECK(log.summaries[0].reached);
    CHECK(!log.summaries[0].crashed);
    CHECK(!log.any_collision);
    for (const auto& e : log.events) CHECK(e.kind != "Collision");
    // altitude is held throughout
    CHECK(log.summaries[0].max_altitude_error < 0.2);
}

TEST_CASE("a disc obstacle on the path is avoided") {
    Scenario sc = baseline_scenario();
    sc.vehicles[0].goal = Vec2(16, 0);
    Obstacle disc;
    disc.kind = Obstacle::Kind::Disc;
    disc.center = Vec2(8, 0);
    disc.radius = 2.0;
    sc.obstacles.push_back(disc);
    sc.t_end = 60.0;
    const RunLog log = run(sc);
    CHECK(!log.any_collision);
    CHECK(log.summaries[0].reached);
    // the vehicle kept the core clearance at all times
    CHECK(log.summaries[0].min_obstacle_distance >= sc.vehicles[0].params.r_cv);
}

TEST_CASE("check_safety distinguishes collision, violation, and clear") {
    std::vector<dyn::VehicleState> states(1);
    states[0].p = Vec3(0, 0, 2);
    std::vector<VehicleSpec> specs{basic_vehicle(1, Vec3(0, 0, 2), Vec2(1, 0))};
    specs[0].params.r_cv = 0.5;
    std::vector<double> r_cs{2.0};
    Obstacle disc;
    disc.kind = Obstacle::Kind::Disc;
    disc.radius = 1.0;

    disc.center = Vec2(3.5, 0);  // boundary 2.5 m away: beyond r_c
    CHECK(check_safety(0.0, states, specs, r_cs, {disc}).empty());

    disc.center = Vec2(2.2, 0);  // boundary 1.2 m away: inside r_c, outside r_cv
    auto events = check_safety(0.0, states, specs, r_cs, {disc});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == "RcViolation");

    disc.center = Vec2(1.3, 0);  // boundary 0.3 m away: collision
    events = check_safety(0.0, states, specs, r_cs, {disc});
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == "Collision");
}

TEST_CASE("pairwise vehicle checks use the sum of the clearance cores") {
    std::vector<dyn::VehicleState> states(2);
    states[0].p = Vec3(0, 0, 2);
    states[1].p = Vec3(0.9, 0, 2);
    std::vector<VehicleSpec> specs{basic_vehicle(1, Vec3(0, 0, 2), Vec2(1, 0)),
                                   basic_vehicle(2, Vec3(0.9, 0, 2), Vec2(1, 0))};
    specs[0].params.r_cv = 0.5;
    specs[1].params.r_cv = 0.5;
    std::vector<double> r_cs{0.6, 0.6};
    const auto events = check_safety(0.0, states, specs, r_cs, {});
    REQUIRE(!events.empty());
    CHECK(events[0].kind == "Collision");
}

TEST_CASE("goal progress requires staying inside the ball for two seconds") {
    Scenario sc = baseline_scenario();
    RunLog log;
    // synthetic rows: vehicle passes through the ball without stopping
    for (int i = 0; i <= 100; ++i) {
        LogRow row;
        row.t = 0.1 * i;
        row.id = 1;
        row.p = Vec3(0.5 * row.t, 0, 2);  // goal at (10,0): inside the ball for 0.8 s only
        log.rows.push_back(row);
    }
    const auto progress = goal_progress(log, sc);
    REQUIRE(progress.size() == 1);
    CHECK(!progress[0].reached);

    // now the vehicle parks at the goal
    RunLog parked;
    for (int i = 0; i <= 100; ++i) {
        LogRow row;
        row.t = 0.1 * i;
        row.id = 1;
        const double x = std::min(10.0, 2.0 * row.t);
        row.p = Vec3(x, 0, 2);
        parked.rows.push_back(row);
    }
    const auto progress2 = goal_progress(parked, sc);
    CHECK(progress2[0].reached);
    CHECK(progress2[0].t_reach > 0.0);
}

TEST_CASE("two runs with the same seed produce byte-identical logs") {
    Scenario sc = baseline_scenario();
    wind::TurbulenceParams turb;
    turb.sigma = 0.5;
    turb.grid_size = 64;
    turb.seed = 42;
    sc.wind = wind::WindField::create(Vec2(1, 0), turb, {}, {});
    sc.t_end = 10.0;

    std::ostringstream a, b;
    run(sc).write_csv(a);
    run(sc).write_csv(b);
    CHECK(a.str() == b.str());
    CHECK(a.str().size() > 1000);
}

TEST_CASE("scenario json round trip with diagnostics") {
    const std::string good = R"({
        "name": "demo",
        "sim": {"dT_s": 1.0, "dT_c": 0.1, "t_end": 5.0, "seed": 7},
        "wind": {"mean": [1, 0]},
        "obstacles": [{"type": "disc", "center": [5, 0], "radius": 1.5}],
        "vehicles": [{"id": 1, "start": [0, 0, 2], "goal": [10, 0]}]
    })";
    const Scenario sc = parse_scenario(good);
    CHECK(sc.name == "demo");
    CHECK(sc.seed == 7);
    REQUIRE(sc.vehicles.size() == 1);
    CHECK(sc.vehicles[0].params.id == 1);
    REQUIRE(sc.obstacles.size() == 1);
    CHECK(sc.wind.mean.x() == doctest::Approx(1.0));

    const Scenario overridden = parse_scenario(good, 99);
    CHECK(overridden.seed == 99);

    // malformed configs carry the field path
    try {
        parse_scenario(R"({"vehicles": [{"id": 1, "start": [0, 0], "goal": [1, 0]}]})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("vehicles[0].start") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_scenario("not json"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(R"({"vehicles": []})"), ConfigError);
}

TEST_CASE("duplicate vehicle ids are rejected at validation") {
    Scenario sc = baseline_scenario();
    sc.vehicles.push_back(sc.vehicles[0]);
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}

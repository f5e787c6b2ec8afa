// Deterministic discrete-time multi-vehicle simulation loop: sensing/comms at
// dT_s, planning on sensor rounds, control at dT_c with the attitude loop on
// the 10 ms substep, safety monitoring, and structured logging. Identical
// scenario + seed produce byte-identical logs.
#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "driftsim/controller.hpp"
#include "driftsim/driftframe.hpp"
#include "driftsim/dynamics.hpp"
#include "driftsim/trajgen.hpp"
#include "driftsim/windfield.hpp"

namespace driftsim::sim {

struct Obstacle {
    enum class Kind { Disc, Polygon };
    Kind kind = Kind::Disc;
    Vec2 center = Vec2::Zero();       // disc center (at t = 0)
    double radius = 1.0;              // disc radius, m
    std::vector<Vec2> vertices;       // polygon (closed, at t = 0)
    Vec2 velocity = Vec2::Zero();     // constant velocity, m/s

    Vec2 center_at(double t) const { return center + velocity * t; }
    /// Distance from p to the obstacle boundary at time t (0 when inside).
    double boundary_distance(const Vec2& p, double t) const;
};

struct VehicleSpec {
    dyn::VehicleParams params;
    ctrl::ControlGains gains;
    drift::DriftConfig drift_cfg;
    traj::ClusterParams cluster_cfg;
    Vec3 start = Vec3(0, 0, 2);
    double yaw0 = 0.0;
    Vec2 goal = Vec2::Zero();
    double r_s = 12.5;           // sensor/comms range, m
    bool drift_enabled = true;
    double goal_speed_gain = 0.5;  // target speed = gain * distance near the goal
};

struct Scenario {
    std::string name = "scenario";
    std::vector<VehicleSpec> vehicles;
    std::vector<Obstacle> obstacles;
    wind::WindField wind;
    double dT_s = 1.0;
    double dT_c = 0.1;
    double t_end = 60.0;
    std::uint64_t seed = 0;
    EnvironmentConstants env;

    void validate() const;  // throws ConfigError
};

struct Event {
    double t = 0.0;
    std::uint32_t vehicle = 0;
    std::string kind;    // Collision, RcViolation, Crash, DriftEnter, DriftExit, ...
    std::string detail;
};

struct LogRow {
    double t = 0.0;
    std::uint32_t id = 0;
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 p_d = Vec3::Zero();
    int mode = 0;  // 0 normal, 1 drift
    Vec2 v_drift = Vec2::Zero();
    double f_cmd = 0.0;
    double f_demand = 0.0;  // outer-loop force request before saturation
    Vec2 v_air_tilde = Vec2::Zero();
    double r_c = 0.0;
    double v_c = 0.0;
    double min_obst_dist = 0.0;
    std::string events;
};

struct VehicleSummary {
    std::uint32_t id = 0;
    bool reached = false;
    double t_reach = -1.0;
    bool crashed = false;
    double min_altitude = 0.0;
    double min_obstacle_distance = 0.0;
    double max_f_cmd = 0.0;
    double max_f_demand_in_drift = 0.0;
    double max_saturation_streak = 0.0;  // s of continuous outer-loop demand above the cap
    double max_altitude_error = 0.0;
    std::vector<std::pair<double, double>> drift_intervals;
};

struct RunLog {
    std::vector<LogRow> rows;
    std::vector<Event> events;
    std::vector<VehicleSummary> summaries;
    bool any_collision = false;
    bool aborted_nonfinite = false;

    void write_csv(std::ostream& out) const;
    void write_events(std::ostream& out) const;
    void write_summary(std::ostream& out) const;
};

/// Runs the scenario to t_end (or to a non-finite abort). Vehicles are
/// updated in ascending ID order; all randomness comes from the scenario
/// seed through the wind field.
RunLog run(const Scenario& scenario);

/// Raw clearance conditions at one instant: Collision below the vehicle-core
/// radius (pairwise: sum of cores), RcViolation below the current clearance
/// radius. The engine edge-filters these into events.
std::vector<Event> check_safety(double t, const std::vector<dyn::VehicleState>& states,
                                const std::vector<VehicleSpec>& specs,
                                const std::vector<double>& r_c_current,
                                const std::vector<Obstacle>& obstacles);

struct GoalProgress {
    bool reached = false;
    double t_reach = -1.0;
};

/// Reached = entered the 0.2 m goal ball and stayed inside for 2 s.
std::vector<GoalProgress> goal_progress(const RunLog& log, const Scenario& scenario);

}  // namespace driftsim::sim

// Reactive trajectory generation: maneuver ranking, sensor clustering,
// clearance-aware projection geometry, tangent candidates, feasible
// course-change sets, and sigmoid transition synthesis with derivatives
// through 4th order.
//
// Headings and speeds are sums of tanh segments
//   phi = c1 tanh(c2 tau - c3) + c4,   v = d1 tanh(d2 tau - d3) + d4
// whose coefficients pin the endpoint values exactly and bound the peak rate.
// All functions are pure over immutable snapshots; planner state is owned by
// one vehicle agent.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "driftsim/core.hpp"

namespace driftsim::traj {

/// Endpoint saturation of the tanh transitions: x(t0) and x(t0+tau_f) land
/// exactly on the commanded values with tanh saturated to +-(1 - kEpsS).
inline constexpr double kEpsS = 0.01;

/// atanh(1 - kEpsS); the half-width of the tanh argument over a transition.
double sigmoid_c3();

enum class SigmoidKind { Heading, Speed };

/// One tanh transition. Its contribution to the summed trajectory is
/// c1 * (tanh(c2 (t - t0) - c3) + (1 - kEpsS)), i.e. zero at t0 and exactly
/// (x_new - x_prev) at t0 + tau_f.
struct SigmoidSegment {
    SigmoidKind kind = SigmoidKind::Heading;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double t0 = 0.0;     // segment start, s
    double tau_f = 0.0;  // transition timespan, s

    double value(double t) const;  // c1 tanh(c2 (t-t0) - c3) + c4
    /// Contribution relative to the segment's start value (used in sums).
    double delta(double t) const;
    double rate(double t, int order = 1) const;  // analytic d^order/dt^order
};

/// Scalar heading or speed profile: base value plus summed tanh segments.
struct Trajectory1D {
    double base = 0.0;
    std::vector<SigmoidSegment> segments;

    double value(double t) const;
    double derivative(double t, int order) const;  // order 1..4
};

struct TrajectorySample {
    Vec3 p_d = Vec3::Zero();
    Vec3 pd_dot = Vec3::Zero();
    Vec3 pd_ddot = Vec3::Zero();
    Vec3 pd_d3 = Vec3::Zero();
    Vec3 pd_d4 = Vec3::Zero();
    double heading = 0.0;
    double speed = 0.0;
};

/// Planar desired trajectory: heading/speed sigmoid sums plus exact cumulative
/// position integration on a fixed grid (Gauss-Legendre per step, cached).
/// Altitude is constant. The cache makes sampling non-reentrant; each vehicle
/// agent owns its trajectory.
class PlanarTrajectory {
public:
    PlanarTrajectory() = default;
    PlanarTrajectory(double epoch, const Vec2& origin, double altitude, double heading0,
                     double speed0, double cache_dt = 0.1);

    double epoch() const { return epoch_; }
    double heading_at(double t) const { return heading_.value(t); }
    double speed_at(double t) const { return speed_.value(t); }
    const Trajectory1D& heading() const { return heading_; }
    const Trajectory1D& speed() const { return speed_; }

    void add_segment(const SigmoidSegment& seg);

    /// Position/derivatives through 4th order at t >= epoch.
    TrajectorySample sample(double t) const;

    /// max_t |planar acceleration| over [t_begin, t_end] by dense sampling.
    double peak_acceleration(double t_begin, double t_end, double step = 1e-3) const;

    /// Latest time at which any segment is still transitioning.
    double last_transition_end() const;

    /// Latest end among segments still transitioning after time t.
    double last_transition_end_after(double t) const;

private:
    Vec2 velocity_at(double t) const;

    double epoch_ = 0.0;
    Vec2 origin_ = Vec2::Zero();
    double altitude_ = 0.0;
    Trajectory1D heading_;
    Trajectory1D speed_;
    double cache_dt_ = 0.1;
    mutable std::vector<Vec2> cache_;  // cache_[k] = integral of velocity over [epoch, epoch + k dt]
};

/// Hardware/environment limits the planner must respect in the active frame.
struct PlannerLimits {
    double f_planar_max = 1.0;  // N, in-plane thrust budget
    double k_d = 0.01;          // kg/m, worst-case planar drag gain
    double mass = 0.54;         // kg
    double v_air_max = 0.0;     // m/s, wind bound in this frame
    double v_o_max = 0.0;       // m/s, obstacle speed bound in this frame
    double r_c = 1.0;           // m, clearance radius
    double v_c = 1.0;           // m/s, cruise speed
    double r_s = 12.5;          // m, sensor range
    double dT_s = 1.0;          // s, sensor period

    /// Max planar acceleration with the worst-case resultant airspeed
    /// (vehicle at v_c moving against v_air_max).
    double a_max() const {
        const double v_rel = v_c + v_air_max;
        return (f_planar_max - k_d * v_rel * v_rel) / mass;
    }

    /// Minimum heading-transition timespan for a course change dphi at speed v.
    double tau_f_min_heading(double dphi, double v) const {
        return std::abs(dphi) * sigmoid_c3() * v / ((1.0 - kEpsS) * a_max());
    }

    /// Minimum speed-transition timespan for a speed change dv.
    double tau_f_min_speed(double dv) const {
        return std::abs(dv) * sigmoid_c3() / ((1.0 - kEpsS) * a_max());
    }
};

/// Comms tuple shared between vehicles in range.
struct PeerInfo {
    std::uint32_t id = 0;
    double v_c = 0.0;
    Vec2 pd_dot = Vec2::Zero();
    double r_c = 0.0;
    double v_w_op = 0.0;
    Vec2 position = Vec2::Zero();
};

/// Effective cruise speed used for the maneuver ranking: zero for over-winded
/// or hovering vehicles, v_c otherwise.
double v_c_star(double v_c, double v_air_mag, double v_w_op, double pd_dot_norm);

/// IDs of the peers this vehicle must maneuver around: peers with smaller
/// v_c_star, with higher ID yielding on ties. Throws DuplicateIdError.
std::set<std::uint32_t> rank_vehicles(const PeerInfo& self, const std::vector<PeerInfo>& peers,
                                      double v_air_mag);

/// One sensor return; bearing is inertial. The engine attaches the true
/// source velocity (the sensor reports perfect velocity information); bare
/// range/bearing scans fall back to finite-difference cluster velocities.
struct ScanReturn {
    double range = 0.0;
    double bearing = 0.0;
    std::optional<Vec2> velocity;
    std::int64_t source = -1;  // engine-side tag; -1 when unknown
};

struct ObstacleCluster {
    int id = -1;
    std::vector<Vec2> points;  // inertial positions of the sensed points
    Vec2 velocity = Vec2::Zero();
    int e1 = 0;       // bounding extent index (lowest bearing)
    int e2 = 0;       // bounding extent index (highest bearing)
    int min_idx = 0;  // closest sensed point
    std::int64_t source = -1;

    const Vec2& p_e1() const { return points[static_cast<std::size_t>(e1)]; }
    const Vec2& p_e2() const { return points[static_cast<std::size_t>(e2)]; }
    const Vec2& p_min() const { return points[static_cast<std::size_t>(min_idx)]; }
};

struct ClusterParams {
    double delta_range = 1.0;                // m
    double delta_bearing = deg2rad(5.0);     // rad
    double match_gate = 3.0;                 // m, centroid gate for id matching
};

/// Splits a bearing-sorted scan at range/bearing discontinuities, keeps local
/// ids stable across scans by nearest-centroid matching, and estimates cluster
/// velocities (truth mean when attached, centroid displacement / dT_s else).
std::vector<ObstacleCluster> cluster_obstacles(const std::vector<ScanReturn>& scan,
                                               const Vec2& sensor_pos,
                                               const std::vector<ObstacleCluster>& previous,
                                               double dT_s, const ClusterParams& params = {});

struct Projection {
    double phi_e = 0.0;  // course-change angle to the projected point
    Vec2 p_star = Vec2::Zero();
};

/// Clearance-aware projection of a sensed point. Outside the clearance radius
/// the projected point sits on the tangent ray that clears p_ki by r_c; inside
/// (a temporary violation) it is pushed out along the vehicle-to-point axis
/// rotated one degree toward the side away from the current course.
/// Throws CoincidentPointError when p_ki is within 1e-9 of p_d.
Projection project_point(const Vec2& p_d, const Vec2& pd_dot, const Vec2& p_ki,
                         const Vec2& p_k_min, double r_c);

struct TangentCandidates {
    Vec2 s1, s2, s3, s4;
};

/// The four candidate traverse vectors; the violation branch anchors s1/s3 at
/// the vehicle instead of the projected minimum point.
TangentCandidates tangent_candidates(const Vec2& p_d, const Vec2& p_star_e1,
                                     const Vec2& p_star_e2, const Vec2& p_star_min,
                                     double dist_to_cluster, double r_c);

enum class CircumnavDirection { CW, CCW };

struct AngleInterval {
    double lo = 0.0;
    double hi = 0.0;  // radians, course-change angles; lo <= hi
};

struct ProjectedGeometry {
    std::vector<Projection> projections;  // most imminent cluster, planning positions
    TangentCandidates tangents{};
    std::vector<AngleInterval> feasible_set;  // O_k
    CircumnavDirection z_k = CircumnavDirection::CCW;
    double delta_phi = 0.0;
    int cluster_id = -1;
    double time_to_violation = std::numeric_limits<double>::infinity();
    double est_cost = 0.0;  // estimated traverse distance to the goal
};

struct PlanInput {
    Vec2 p_d = Vec2::Zero();       // current desired position
    Vec2 course_dir{1.0, 0.0};     // unit vector of the current course
    double v_now = 0.0;            // current planned speed
    Vec2 goal = Vec2::Zero();
};

/// Course-change selection. Builds the feasible set by a 0.5-degree ray sweep
/// against all cluster points propagated one maneuver duration ahead, then
/// picks the feasible course change minimizing estimated time to goal
/// (traverse distance around the obstacle / v_c), tie-breaking toward smaller
/// |dphi| and then counterclockwise. Throws NoFeasibleCourseError when the
/// feasible set is empty (caller should command a stop).
ProjectedGeometry plan_course_change(const std::vector<ObstacleCluster>& clusters,
                                     const PlanInput& input, const PlannerLimits& limits);

/// Coefficients for one transition from x_prev to x_new over tau_f.
/// Throws TooShortError if tau_f is below the limit for this kind
/// (heading transitions are checked at cruise speed).
SigmoidSegment fit_sigmoid(double x_prev, double x_new, double tau_f, SigmoidKind kind,
                           const PlannerLimits& limits);

/// Adds a transition to the trajectory by superposition. If the combined peak
/// planar acceleration would exceed a_max, the start time is delayed and/or
/// the timespan stretched minimally (bisection) until it fits.
void append_transition(PlanarTrajectory& traj, SigmoidSegment segment, double t_now,
                       const PlannerLimits& limits);

/// Full kinematic sample of the desired trajectory at time t.
TrajectorySample sample_trajectory(const PlanarTrajectory& traj, double t);

}  // namespace driftsim::traj

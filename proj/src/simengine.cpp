#include "driftsim/simengine.hpp"

#include <algorithm>
#include <cstdlib>
#include <cmath>
#include <set>

#include "driftsim/log.hpp"

namespace driftsim::sim {

namespace {

constexpr std::int64_t kPeerTagBase = 1'000'000;
constexpr int kScanRays = 360;

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& verts) {
    bool inside = false;
    for (std::size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++) {
        const Vec2& a = verts[i];
        const Vec2& b = verts[j];
        const bool crosses = (a.y() > p.y()) != (b.y() > p.y());
        if (crosses && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
            inside = !inside;
    }
    return inside;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 < 1e-18) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

/// Nearest nonnegative ray parameter hitting a circle, or +inf.
double ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center, double radius) {
    const Vec2 oc = center - origin;
    const double proj = oc.dot(dir);
    const double d2 = oc.squaredNorm() - proj * proj;
    const double r2 = radius * radius;
    if (d2 > r2) return std::numeric_limits<double>::infinity();
    const double off = std::sqrt(r2 - d2);
    const double s1 = proj - off;
    const double s2 = proj + off;
    if (s1 >= 0.0) return s1;
    if (s2 >= 0.0) return 0.0;  // origin inside the circle
    return std::numeric_limits<double>::infinity();
}

double ray_segment(const Vec2& origin, const Vec2& dir, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double denom = dir.x() * ab.y() - dir.y() * ab.x();
    if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
    const Vec2 ao = a - origin;
    const double s = (ao.x() * ab.y() - ao.y() * ab.x()) / denom;
    const double u = (ao.x() * dir.y() - ao.y() * dir.x()) / denom;
    if (s >= 0.0 && u >= 0.0 && u <= 1.0) return s;
    return std::numeric_limits<double>::infinity();
}

Vec2 planar(const Vec3& v) { return {v.x(), v.y()}; }

}  // namespace

double Obstacle::boundary_distance(const Vec2& p, double t) const {
    if (kind == Kind::Disc) {
        return std::max(0.0, (p - center_at(t)).norm() - radius);
    }
    const Vec2 shift = velocity * t;
    std::vector<Vec2> verts = vertices;
    for (auto& v : verts) v += shift;
    if (point_in_polygon(p, verts)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++)
        best = std::min(best, point_segment_distance(p, verts[j], verts[i]));
    return best;
}

void Scenario::validate() const {
    if (vehicles.empty()) throw ConfigError("scenario has no vehicles");
    if (dT_c <= 0.0 || dT_s < dT_c)
        throw ConfigError("sim periods must satisfy dT_s >= dT_c > 0");
    if (t_end <= 0.0) throw ConfigError("t_end must be positive");
    std::set<std::uint32_t> ids;
    for (const auto& v : vehicles) {
        if (!ids.insert(v.params.id).second)
            throw ConfigError("duplicate vehicle id " + std::to_string(v.params.id));
        if (v.params.m <= 0.0) throw ConfigError("vehicle mass must be positive");
        if (v.params.effective_f_max() <= v.params.m * 9.81)
            throw ConfigError("vehicle " + std::to_string(v.params.id) +
                              " cannot hover under its thrust cap");
        if (v.r_s <= v.params.r_cv)
            throw ConfigError("sensor range must exceed the clearance core");
    }
    for (const auto& o : obstacles)
        if (o.kind == Obstacle::Kind::Polygon && o.vertices.size() < 3)
            throw ConfigError("polygon obstacle needs at least 3 vertices");
}

// ===========================================================================
// vehicle agent
// ===========================================================================

namespace {

struct TickOutput {
    double f_cmd = 0.0;
    double f_demand = 0.0;
};

class Agent {
public:
    Agent(const VehicleSpec& spec, const Scenario& sc)
        : spec_(spec),
          estimator_(spec.drift_cfg),
          rc_adapter_(spec.drift_cfg, spec.params.r_cv, spec.params.v_w_op),
          dT_c_(sc.dT_c),
          env_(sc.env) {
        state_.p = spec.start;
        state_.R_IB = rotation_from_euler(0.0, 0.0, spec.yaw0).transpose();
        yaw_ref_ = spec.yaw0;
        summary_.min_altitude = spec.start.z();

        base_limits_.f_planar_max = spec.params.f_planar_max(env_.g.norm());
        base_limits_.k_d = dyn::kd_planar_max(spec.params, env_.rho);
        base_limits_.mass = spec.params.m;
        base_limits_.r_s = spec.r_s;
        base_limits_.dT_s = sc.dT_s;
        dstate_.f_planar_max = base_limits_.f_planar_max;

        update_rc_vc(0.0);
        traj_ = traj::PlanarTrajectory(0.0, planar(spec.start), spec.start.z(), spec.yaw0, 0.0,
                                       sc.dT_c);
        f_applied_prev_ = Vec3(0.0, 0.0, spec.params.m * env_.g.norm());
    }

    const VehicleSpec& spec() const { return spec_; }
    const dyn::VehicleState& state() const { return state_; }
    const drift::DriftState& drift_state() const { return dstate_; }
    const drift::WindEstimate& estimate() const { return estimator_.last(); }
    bool crashed() const { return crashed_; }
    const VehicleSummary& summary() const { return summary_; }

    VehicleSummary finalize_summary(double t_end) {
        summary_.id = spec_.params.id;
        summary_.crashed = crashed_;
        if (dstate_.mode == drift::Mode::Drift)
            summary_.drift_intervals.emplace_back(drift_enter_t_, t_end);
        return summary_;
    }
    const std::vector<Event>& pending_events() { return events_; }
    void clear_events() { events_.clear(); }
    traj::TrajectorySample reference(double t) const { return sample_inertial(t); }

    traj::PeerInfo comms_tuple(double t) const {
        traj::PeerInfo info;
        info.id = spec_.params.id;
        info.v_c = dstate_.inertial_cruise();
        info.pd_dot = planar(sample_inertial(t).pd_dot);
        info.r_c = dstate_.r_c;
        info.v_w_op = spec_.params.v_w_op;
        info.position = planar(state_.p);
        return info;
    }

    void sensor_round(double t, const std::vector<traj::ScanReturn>& scan,
                      const std::vector<traj::PeerInfo>& peers) {
        if (crashed_) return;
        clusters_ = traj::cluster_obstacles(scan, planar(state_.p), clusters_,
                                            base_limits_.dT_s, spec_.cluster_cfg);
        // refresh the peer cache; entries stay valid for one extra sensor period
        for (const auto& p : peers) peer_cache_[p.id] = {p, t};
        std::vector<traj::PeerInfo> active;
        for (auto it = peer_cache_.begin(); it != peer_cache_.end();) {
            if (t - it->second.second > 1.5 * base_limits_.dT_s) {
                it = peer_cache_.erase(it);
            } else {
                active.push_back(it->second.first);
                ++it;
            }
        }

        const auto& est = estimator_.last();
        maneuver_for_ = traj::rank_vehicles(comms_tuple(t), active, est.v_air_tilde.norm());
        update_rc_vc(t);
        replan(t);
    }

    TickOutput control_tick(double t, const wind::WindField& field) {
        TickOutput out;
        if (crashed_) return out;

        estimator_.update(state_, f_applied_prev_, spec_.params, env_.rho, t, env_);
        maybe_update_mode(t);

        const traj::TrajectorySample ref = sample_inertial(t);
        const Vec3 f_des = ctrl::rise_force(state_, ref.p_d, ref.pd_dot, spec_.gains, rise_,
                                            dT_c_, spec_.params.m, env_);
        out.f_demand = f_des.norm();
        const Vec2 course = planar(ref.pd_dot);
        if (course.norm() > 0.1) yaw_ref_ = std::atan2(course.y(), course.x());
        const ctrl::AttitudeCommand att = ctrl::attitude_from_force(
            f_des, yaw_ref_, spec_.params.effective_f_max(), spec_.gains.tilt_limit);
        out.f_cmd = att.f_cmd;

        const int n_sub = std::max(1, static_cast<int>(std::round(dT_c_ / 0.01)));
        const double h = dT_c_ / n_sub;
        Vec3 f_app_sum = Vec3::Zero();
        for (int k = 0; k < n_sub; ++k) {
            dyn::ControlCommand cmd;
            cmd.f_cmd = att.f_cmd;
            cmd.q_d = att.q_d;
            cmd.u = ctrl::pid_torque(att.q_d, state_, spec_.gains, rise_, h);
            const Vec2 w = field.sample(planar(state_.p), t + k * h);
            state_ = dyn::step(state_, spec_.params, cmd, Vec3(w.x(), w.y(), 0.0), {}, h, env_);
            f_app_sum += state_.R_IB.transpose() * Vec3(0.0, 0.0, att.f_cmd);
        }
        f_applied_prev_ = f_app_sum / n_sub;

        if (state_.p.z() <= 0.0) {
            crashed_ = true;
            state_.p.z() = 0.0;
            state_.v = Vec3::Zero();
            state_.omega = Vec3::Zero();
            push_event(t, "Crash", "altitude reached ground plane");
        }

        // summary bookkeeping
        const double cap = spec_.params.effective_f_max();
        summary_.max_f_cmd = std::max(summary_.max_f_cmd, out.f_cmd);
        if (out.f_demand > cap + 1e-9) {
            sat_streak_ += dT_c_;
        } else {
            sat_streak_ = 0.0;
        }
        summary_.max_saturation_streak = std::max(summary_.max_saturation_streak, sat_streak_);
        summary_.min_altitude = std::min(summary_.min_altitude, state_.p.z());
        summary_.max_altitude_error =
            std::max(summary_.max_altitude_error, std::abs(state_.p.z() - ref.p_d.z()));
        if (dstate_.mode == drift::Mode::Drift)
            summary_.max_f_demand_in_drift =
                std::max(summary_.max_f_demand_in_drift, out.f_demand);
        return out;
    }

private:
    void push_event(double t, const std::string& kind, const std::string& detail) {
        events_.push_back({t, spec_.params.id, kind, detail});
    }

    traj::TrajectorySample sample_inertial(double t) const {
        traj::TrajectorySample s = traj_.sample(t);
        if (frame_vel_.norm() > 0.0) {
            const double dt = t - frame_t0_;
            s.p_d.x() += frame_vel_.x() * dt;
            s.p_d.y() += frame_vel_.y() * dt;
            s.pd_dot.x() += frame_vel_.x();
            s.pd_dot.y() += frame_vel_.y();
        }
        return s;
    }

    /// Current-frame planner limits.
    traj::PlannerLimits frame_limits() const {
        traj::PlannerLimits lim = base_limits_;
        lim.r_c = dstate_.r_c;
        if (dstate_.mode == drift::Mode::Drift) {
            lim.v_air_max = dstate_.v_air_max_D;
            lim.v_o_max = dstate_.v_o_max_D;
            lim.v_c = std::max(dstate_.v_c_D, 0.05);
        } else {
            lim.v_air_max = estimator_.last().v_air_max_tilde;
            lim.v_o_max = dstate_.v_c;
            lim.v_c = dstate_.v_c;
        }
        return lim;
    }

    void update_rc_vc(double t) {
        const auto& est = estimator_.last();
        traj::PlannerLimits lim = base_limits_;
        lim.v_air_max = est.v_air_max_tilde;
        try {
            const auto rc = rc_adapter_.update(est.v_air_max_tilde, t, lim);
            dstate_.r_c = rc.r_c;
            dstate_.r_ce = rc.r_ce;
            dstate_.v_c = rc.v_c;
        } catch (const NoControlAuthorityError&) {
            // over-winded in the inertial frame; drift-capable vehicles handle
            // this through the mode machine, others must report it
            if (!spec_.drift_enabled && dstate_.v_c > 0.0)
                push_event(t, "GroundingRequired",
                           "no feasible cruise speed in the inertial frame");
            dstate_.v_c = 0.0;
        }
    }

    /// Re-seeds the local trajectory in a frame moving at new_vel. Drift
    /// entries and retunes seed the nominal hover (||pd_dot^D|| = 0), which
    /// steps the reference velocity by a bounded jump; the exit back to the
    /// inertial frame keeps the reference velocity continuous instead.
    void switch_frame(double t, const Vec2& new_vel, bool reset_nu, bool hover_seed) {
        const traj::TrajectorySample s = sample_inertial(t);
        double speed0 = 0.0;
        double heading0 = traj_.heading_at(t);
        if (!hover_seed) {
            const Vec2 v_local = planar(s.pd_dot) - new_vel;
            speed0 = v_local.norm();
            if (speed0 > 1e-3) heading0 = std::atan2(v_local.y(), v_local.x());
        }
        traj_ = traj::PlanarTrajectory(t, planar(s.p_d), s.p_d.z(), heading0, speed0, dT_c_);
        frame_vel_ = new_vel;
        frame_t0_ = t;
        // the reference jump lands in e2(0); the RISE integral survives
        // same-mode retunes and resets across mode changes
        rise_.e2_captured = false;
        if (reset_nu) rise_.nu = Vec3::Zero();
    }

    void maybe_update_mode(double t) {
        if (!spec_.drift_enabled) return;
        const auto& est = estimator_.last();
        const drift::Mode next =
            drift::drift_trigger(est, base_limits_.f_planar_max, base_limits_.k_d,
                                 spec_.drift_cfg.eta, dstate_.mode);
        if (next == drift::Mode::Drift) {
            Vec2 desired = dstate_.v_drift;
            try {
                desired = drift::solve_drift_velocity(
                    est.v_air_tilde, est.v_air_max_tilde,
                    spec_.drift_cfg.authority_margin * base_limits_.f_planar_max,
                    base_limits_.k_d);
            } catch (const DegenerateWindError&) {
                // keep the previous drift velocity until the direction firms up
            }
            const bool entering = dstate_.mode != drift::Mode::Drift;
            const bool retune = !entering && (desired - dstate_.v_drift).norm() > 0.5;
            if (entering || retune) {
                dstate_.mode = drift::Mode::Drift;
                dstate_.v_drift = desired;
                const auto view =
                    drift::to_drift_frame(desired, est.v_air_tilde, est.v_air_max_tilde, {});
                dstate_.v_air_max_D = view.v_air_max_D;
                dstate_.v_o_max_D = view.v_o_max_D;
                traj::PlannerLimits lim = base_limits_;
                lim.r_c = dstate_.r_c;
                try {
                    dstate_.v_c_D =
                        drift::cruise_velocity(lim, dstate_.v_air_max_D, dstate_.v_o_max_D);
                } catch (const NoControlAuthorityError&) {
                    dstate_.v_c_D = 0.0;
                    push_event(t, "GroundingRequired", "no cruise speed in the drift frame");
                }
                switch_frame(t, desired, entering, true);
                last_frame_switch_ = t;
                push_event(t, entering ? "DriftEnter" : "DriftUpdate",
                           "v_drift " + std::to_string(desired.norm()) + " m/s");
                if (entering) drift_enter_t_ = t;
                replan(t);
            }
        } else if (dstate_.mode == drift::Mode::Drift) {
            dstate_.mode = drift::Mode::Normal;
            dstate_.v_drift = Vec2::Zero();
            dstate_.v_air_max_D = 0.0;
            dstate_.v_o_max_D = 0.0;
            dstate_.v_c_D = 0.0;
            switch_frame(t, Vec2::Zero(), true, false);
            last_frame_switch_ = t;
            push_event(t, "DriftExit", "returning to the inertial frame");
            summary_.drift_intervals.emplace_back(drift_enter_t_, t);
            replan(t);
        }
    }

    /// Clusters transformed into the current planning frame; peers that will
    /// maneuver for us are dropped.
    std::vector<traj::ObstacleCluster> planning_clusters(double t, bool include_peers) const {
        std::vector<traj::ObstacleCluster> out;
        const double dt = t - frame_t0_;
        for (const auto& c : clusters_) {
            const bool is_peer = c.source >= kPeerTagBase;
            if (is_peer) {
                const auto id = static_cast<std::uint32_t>(c.source - kPeerTagBase);
                if (!include_peers || maneuver_for_.count(id) == 0) continue;
            }
            traj::ObstacleCluster fc = c;
            for (auto& p : fc.points) p -= frame_vel_ * dt;
            fc.velocity -= frame_vel_;
            out.push_back(std::move(fc));
        }
        return out;
    }

    void replan(double t) {
        const traj::PlannerLimits lim = frame_limits();
        // without maneuvering authority in this frame no new transition is
        // trackable; hold the current profile (drift entry restores authority)
        if (lim.a_max() <= 1e-6) return;
        const traj::TrajectorySample now = traj_.sample(t);
        const double dt_frame = t - frame_t0_;
        const Vec2 goal_frame = spec_.goal - frame_vel_ * dt_frame;
        const Vec2 p_now = planar(now.p_d);
        const double dist_goal = (goal_frame - p_now).norm();

        // permanent hold once the goal ball is captured at low speed
        const double dist_goal_inertial = (spec_.goal - planar(state_.p)).norm();
        if (goal_latched_ ||
            (dstate_.mode == drift::Mode::Normal && dist_goal_inertial < 0.15 &&
             now.speed < 0.2)) {
            goal_latched_ = true;
            command_speed(t, 0.0, lim);
            return;
        }

        traj::PlanInput input;
        input.p_d = p_now;
        input.course_dir = Vec2(std::cos(now.heading), std::sin(now.heading));
        input.v_now = now.speed;
        input.goal = goal_frame;

        // bound the transition backlog: corrections re-issue every sensor
        // round, so skipping while queued segments drain loses nothing
        const bool backlogged = traj_.last_transition_end_after(t) - t > 3.0;

        bool yield_wait = false;   // a peer will clear the way; bounded by a timeout
        bool safety_wait = false;  // no safe course exists; never overridden
        double delta_phi = 0.0;
        const bool terminal = dstate_.mode == drift::Mode::Normal && dist_goal < 2.0;
        try {
            const auto all = planning_clusters(t, true);
            const auto plan = traj::plan_course_change(all, input, lim);
            delta_phi = plan.delta_phi;
            // yield-and-wait: if the plan is much worse than it would be
            // without the peers we must avoid, hold until they pass (bounded
            // by a timeout so a congested goal area cannot pin us forever)
            bool has_peer = false;
            for (const auto& c : all)
                has_peer = has_peer || c.source >= kPeerTagBase;
            if (has_peer && !terminal) {
                const auto peer_free = planning_clusters(t, false);
                const auto base_plan = traj::plan_course_change(peer_free, input, lim);
                if (plan.est_cost > base_plan.est_cost + 4.0 * lim.r_c) yield_wait = true;
            }
        } catch (const NoFeasibleCourseError&) {
            safety_wait = true;
        }
        if (yield_wait) {
            wait_since_ = wait_since_ < 0.0 ? t : wait_since_;
            if (t - wait_since_ > 8.0) yield_wait = false;  // timed out; take the detour
        } else {
            wait_since_ = -1.0;
        }
        bool wait = yield_wait || safety_wait;

        if (!wait && !backlogged) {
            // close to the goal steer straight at it (goals are clear of
            // obstacles); the swept-path guard still vets the turn
            if (terminal && (goal_frame - p_now).norm() > 1e-6)
                delta_phi = signed_angle(input.course_dir, goal_frame - p_now);
            // command the absolute course; queued turn segments already cover
            // part of delta_phi, so only the residual is appended
            const double target = now.heading + delta_phi;
            const double final_heading =
                traj_.heading_at(traj_.last_transition_end() + 5.0);
            const double correction = wrap_angle(target - final_heading);
            if (std::abs(correction) > deg2rad(0.5)) {
                const double tau =
                    std::max(lim.tau_f_min_heading(correction, lim.v_c), 0.5);
                auto seg = traj::fit_sigmoid(final_heading, final_heading + correction, tau,
                                             traj::SigmoidKind::Heading, lim);
                seg.t0 = t;
                // swept-path guard: the turn arc (not just the settled ray)
                // must keep clearance; otherwise hold course and slow down
                traj::PlanarTrajectory trial = traj_;
                traj::append_transition(trial, seg, t, lim);
                const auto clusters_now = planning_clusters(t, true);
                double current_min = std::numeric_limits<double>::infinity();
                for (const auto& c : clusters_now)
                    for (const auto& q : c.points)
                        current_min = std::min(current_min, (q - p_now).norm());
                const double floor = std::min(lim.r_c - 0.05, current_min - 0.05);
                bool safe = true;
                const double horizon = tau + 2.0;
                // guard only when currently clear; escaping an existing
                // violation must not be vetoed
                if (current_min >= lim.r_c) {
                    for (double dt_s = 0.0; safe && dt_s <= horizon; dt_s += 0.25) {
                        const Vec2 pos = planar(trial.sample(t + dt_s).p_d);
                        for (const auto& c : clusters_now) {
                            for (const auto& q : c.points) {
                                if ((q + c.velocity * dt_s - pos).norm() < floor) {
                                    safe = false;
                                    break;
                                }
                            }
                            if (!safe) break;
                        }
                    }
                }
                if (safe) {
                    traj_ = trial;
                } else {
                    wait = true;  // swept-path veto is a safety stop
                }
            }
        }

        double v_tgt = 0.0;
        if (!wait) v_tgt = std::min(lim.v_c, spec_.goal_speed_gain * dist_goal);
        const double v_final = traj_.speed_at(traj_.last_transition_end() + 5.0);
        if (!backlogged || v_tgt < v_final) command_speed(t, v_tgt, lim);
    }

    void command_speed(double t, double v_tgt, const traj::PlannerLimits& lim) {
        const double v_final = traj_.speed_at(traj_.last_transition_end() + 5.0);
        const double dv = v_tgt - v_final;
        if (std::abs(dv) < 0.02) return;
        const double tau = std::max(lim.tau_f_min_speed(dv), 0.3);
        auto seg = traj::fit_sigmoid(v_final, v_tgt, tau, traj::SigmoidKind::Speed, lim);
        seg.t0 = t;
        traj::append_transition(traj_, seg, t, lim);
    }

    VehicleSpec spec_;
    dyn::VehicleState state_;
    ctrl::RiseState rise_;
    drift::WindEstimator estimator_;
    drift::RcVcAdapter rc_adapter_;
    drift::DriftState dstate_;
    traj::PlannerLimits base_limits_;
    traj::PlanarTrajectory traj_;
    Vec2 frame_vel_ = Vec2::Zero();
    double frame_t0_ = 0.0;
    double dT_c_ = 0.1;
    EnvironmentConstants env_;
    double yaw_ref_ = 0.0;
    Vec3 f_applied_prev_ = Vec3::Zero();
    std::vector<traj::ObstacleCluster> clusters_;
    std::map<std::uint32_t, std::pair<traj::PeerInfo, double>> peer_cache_;
    std::set<std::uint32_t> maneuver_for_;
    bool crashed_ = false;
    bool goal_latched_ = false;
    double wait_since_ = -1.0;
    double sat_streak_ = 0.0;
    double drift_enter_t_ = 0.0;
    double last_frame_switch_ = -1e9;
    VehicleSummary summary_;
    std::vector<Event> events_;
};

}  // namespace

// ===========================================================================
// sensing
// ===========================================================================

namespace {

std::vector<traj::ScanReturn> make_scan(const std::vector<Agent>& agents, std::size_t self,
                                        const std::vector<Obstacle>& obstacles, double t) {
    const Vec2 origin = planar(agents[self].state().p);
    const double r_s = agents[self].spec().r_s;
    std::vector<traj::ScanReturn> scan;

    for (int j = 0; j < kScanRays; ++j) {
        const double bearing = -kPi + (j + 0.5) * (2.0 * kPi / kScanRays);
        const Vec2 dir(std::cos(bearing), std::sin(bearing));
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_obstacle = 0;
        for (std::size_t o = 0; o < obstacles.size(); ++o) {
            const auto& obs = obstacles[o];
            double s;
            if (obs.kind == Obstacle::Kind::Disc) {
                s = ray_circle(origin, dir, obs.center_at(t), obs.radius);
            } else {
                s = std::numeric_limits<double>::infinity();
                const Vec2 shift = obs.velocity * t;
                for (std::size_t i = 0, k = obs.vertices.size() - 1; i < obs.vertices.size();
                     k = i++)
                    s = std::min(s, ray_segment(origin, dir, obs.vertices[k] + shift,
                                                obs.vertices[i] + shift));
            }
            if (s < best) {
                best = s;
                best_obstacle = o;
            }
        }
        if (best <= r_s) {
            traj::ScanReturn r;
            r.range = best;
            r.bearing = bearing;
            r.velocity = obstacles[best_obstacle].velocity;
            r.source = static_cast<std::int64_t>(best_obstacle);
            scan.push_back(r);
        }
    }

    // peers are small; synthesize their returns directly so they are never
    // lost between scan rays
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (i == self || agents[i].crashed()) continue;
        const Vec2 rel = planar(agents[i].state().p) - origin;
        const double dist = rel.norm();
        if (dist > r_s || dist < 1e-6) continue;
        const double bearing = std::atan2(rel.y(), rel.x());
        const double half_width = std::atan2(agents[i].spec().params.r_min, dist);
        const Vec2 vel = planar(agents[i].state().v);
        for (int k = -1; k <= 1; ++k) {
            traj::ScanReturn r;
            r.bearing = wrap_angle(bearing + k * half_width);
            r.range = std::max(0.05, dist - (k == 0 ? agents[i].spec().params.r_min : 0.0));
            r.velocity = vel;
            r.source = kPeerTagBase + agents[i].spec().params.id;
            scan.push_back(r);
        }
    }

    std::sort(scan.begin(), scan.end(), [](const traj::ScanReturn& a, const traj::ScanReturn& b) {
        return a.bearing < b.bearing;
    });
    return scan;
}

}  // namespace

// ===========================================================================
// safety and goals
// ===========================================================================

std::vector<Event> check_safety(double t, const std::vector<dyn::VehicleState>& states,
                                const std::vector<VehicleSpec>& specs,
                                const std::vector<double>& r_c_current,
                                const std::vector<Obstacle>& obstacles) {
    std::vector<Event> out;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Vec2 p = planar(states[i].p);
        for (std::size_t o = 0; o < obstacles.size(); ++o) {
            const double d = obstacles[o].boundary_distance(p, t);
            if (d < specs[i].params.r_cv) {
                out.push_back({t, specs[i].params.id, "Collision",
                               "obstacle " + std::to_string(o) + " at " + std::to_string(d) +
                                   " m"});
            } else if (d < r_c_current[i]) {
                out.push_back({t, specs[i].params.id, "RcViolation",
                               "obstacle " + std::to_string(o) + " at " + std::to_string(d) +
                                   " m"});
            }
        }
        for (std::size_t j = i + 1; j < states.size(); ++j) {
            const double d = (planar(states[j].p) - p).norm();
            if (d < specs[i].params.r_cv + specs[j].params.r_cv) {
                out.push_back({t, specs[i].params.id, "Collision",
                               "vehicle " + std::to_string(specs[j].params.id) + " at " +
                                   std::to_string(d) + " m"});
            } else {
                if (d < r_c_current[i] + specs[j].params.r_cv)
                    out.push_back({t, specs[i].params.id, "RcViolation",
                                   "vehicle " + std::to_string(specs[j].params.id) + " at " +
                                       std::to_string(d) + " m"});
                if (d < r_c_current[j] + specs[i].params.r_cv)
                    out.push_back({t, specs[j].params.id, "RcViolation",
                                   "vehicle " + std::to_string(specs[i].params.id) + " at " +
                                       std::to_string(d) + " m"});
            }
        }
    }
    return out;
}

std::vector<GoalProgress> goal_progress(const RunLog& log, const Scenario& scenario) {
    std::vector<GoalProgress> out(scenario.vehicles.size());
    for (std::size_t v = 0; v < scenario.vehicles.size(); ++v) {
        const auto id = scenario.vehicles[v].params.id;
        const Vec2 goal = scenario.vehicles[v].goal;
        std::vector<std::pair<double, bool>> inside;
        for (const auto& row : log.rows)
            if (row.id == id) inside.emplace_back(row.t, (planar(row.p) - goal).norm() <= 0.2);
        for (std::size_t k = 0; k < inside.size(); ++k) {
            if (!inside[k].second) continue;
            const double t0 = inside[k].first;
            bool stayed = true;
            bool window_complete = false;
            for (std::size_t m = k; m < inside.size(); ++m) {
                if (inside[m].first > t0 + 2.0) {
                    window_complete = true;
                    break;
                }
                if (!inside[m].second) {
                    stayed = false;
                    break;
                }
            }
            if (inside.back().first >= t0 + 2.0) window_complete = true;
            if (stayed && window_complete) {
                out[v].reached = true;
                out[v].t_reach = t0;
                break;
            }
        }
    }
    return out;
}

// ===========================================================================
// run loop
// ===========================================================================

RunLog run(const Scenario& scenario) {
    scenario.validate();
    RunLog log;

    std::vector<Agent> agents;
    agents.reserve(scenario.vehicles.size());
    std::vector<std::size_t> order(scenario.vehicles.size());
    for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scenario.vehicles[a].params.id < scenario.vehicles[b].params.id;
    });
    for (std::size_t i : order) agents.emplace_back(scenario.vehicles[i], scenario);

    const int sensor_every =
        std::max(1, static_cast<int>(std::round(scenario.dT_s / scenario.dT_c)));
    const int steps = static_cast<int>(std::round(scenario.t_end / scenario.dT_c));

    std::set<std::string> active_conditions;

    for (int k = 0; k < steps; ++k) {
        const double t = k * scenario.dT_c;

        if (k % sensor_every == 0) {
            // snapshot scans and comms before any agent updates
            std::vector<std::vector<traj::ScanReturn>> scans(agents.size());
            std::vector<std::vector<traj::PeerInfo>> peers(agents.size());
            for (std::size_t i = 0; i < agents.size(); ++i) {
                if (agents[i].crashed()) continue;
                scans[i] = make_scan(agents, i, scenario.obstacles, t);
                for (std::size_t j = 0; j < agents.size(); ++j) {
                    if (j == i || agents[j].crashed()) continue;
                    const double d =
                        (planar(agents[j].state().p) - planar(agents[i].state().p)).norm();
                    if (d <= agents[i].spec().r_s) peers[i].push_back(agents[j].comms_tuple(t));
                }
            }
            for (std::size_t i = 0; i < agents.size(); ++i)
                if (!agents[i].crashed()) agents[i].sensor_round(t, scans[i], peers[i]);
        }

        std::vector<TickOutput> ticks(agents.size());
        try {
            for (std::size_t i = 0; i < agents.size(); ++i)
                ticks[i] = agents[i].control_tick(t, scenario.wind);
        } catch (const NonFiniteStateError& e) {
            log.aborted_nonfinite = true;
            log.events.push_back({t, 0, "NonFiniteState", e.what()});
            log::error("aborting run at t=%.2f: %s", t, e.what());
            break;
        }

        const double t_row = t + scenario.dT_c;

        // safety conditions on the post-step states, edge-filtered into events
        std::vector<dyn::VehicleState> states;
        std::vector<VehicleSpec> specs;
        std::vector<double> r_cs;
        for (const auto& a : agents) {
            states.push_back(a.state());
            specs.push_back(a.spec());
            r_cs.push_back(a.drift_state().r_c);
        }
        const auto conditions = check_safety(t_row, states, specs, r_cs, scenario.obstacles);
        std::set<std::string> now_active;
        std::map<std::uint32_t, std::string> row_events;
        for (const auto& c : conditions) {
            const std::string key = c.kind + "#" + std::to_string(c.vehicle) + "#" + c.detail.substr(0, c.detail.find(" at "));
            now_active.insert(key);
            if (active_conditions.count(key) == 0) {
                log.events.push_back(c);
                if (c.kind == "Collision") log.any_collision = true;
                auto& s = row_events[c.vehicle];
                if (!s.empty()) s += ";";
                s += c.kind;
            }
        }
        active_conditions = std::move(now_active);

        for (std::size_t i = 0; i < agents.size(); ++i) {
            for (const auto& e : agents[i].pending_events()) {
                log.events.push_back(e);
                auto& s = row_events[e.vehicle];
                if (!s.empty()) s += ";";
                s += e.kind;
            }
            agents[i].clear_events();
        }

        for (std::size_t i = 0; i < agents.size(); ++i) {
            const auto& a = agents[i];
            LogRow row;
            row.t = t_row;
            row.id = a.spec().params.id;
            row.p = a.state().p;
            row.v = a.state().v;
            row.p_d = a.reference(t_row).p_d;
            row.mode = a.drift_state().mode == drift::Mode::Drift ? 1 : 0;
            row.v_drift = a.drift_state().v_drift;
            row.f_cmd = ticks[i].f_cmd;
            row.f_demand = ticks[i].f_demand;
            row.v_air_tilde = a.estimate().v_air_tilde;
            row.r_c = a.drift_state().r_c;
            row.v_c = a.drift_state().inertial_cruise();
            double min_d = std::numeric_limits<double>::infinity();
            for (const auto& o : scenario.obstacles)
                min_d = std::min(min_d, o.boundary_distance(planar(a.state().p), t_row));
            for (std::size_t j = 0; j < agents.size(); ++j)
                if (j != i)
                    min_d = std::min(
                        min_d, (planar(agents[j].state().p) - planar(a.state().p)).norm());
            row.min_obst_dist = std::isfinite(min_d) ? min_d : -1.0;
            const auto ev = row_events.find(row.id);
            if (ev != row_events.end()) row.events = ev->second;
            log.rows.push_back(std::move(row));
        }
    }

    // close out summaries
    for (auto& a : agents) log.summaries.push_back(a.finalize_summary(scenario.t_end));
    // summaries are gathered before goal evaluation so the log is complete
    Scenario ordered = scenario;
    ordered.vehicles.clear();
    for (std::size_t i : order) ordered.vehicles.push_back(scenario.vehicles[i]);
    const auto goals = goal_progress(log, ordered);
    for (std::size_t i = 0; i < log.summaries.size(); ++i) {
        log.summaries[i].reached = goals[i].reached;
        log.summaries[i].t_reach = goals[i].t_reach;
        double min_d = std::numeric_limits<double>::infinity();
        for (const auto& row : log.rows)
            if (row.id == log.summaries[i].id && row.min_obst_dist >= 0.0)
                min_d = std::min(min_d, row.min_obst_dist);
        log.summaries[i].min_obstacle_distance = std::isfinite(min_d) ? min_d : -1.0;
    }
    return log;
}

// ===========================================================================
// serialization
// ===========================================================================

void RunLog::write_csv(std::ostream& out) const {
    out << "t,id,px,py,pz,vx,vy,vz,pdx,pdy,pdz,mode,vdriftx,vdrifty,fcmd,fdemand,"
           "vairx,vairy,rc,vc,mindist,events\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%.3f,%u,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.6f,%.6f,%.6f,"
                      "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s\n",
                      r.t, r.id, r.p.x(), r.p.y(), r.p.z(), r.v.x(), r.v.y(), r.v.z(),
                      r.p_d.x(), r.p_d.y(), r.p_d.z(), r.mode, r.v_drift.x(), r.v_drift.y(),
                      r.f_cmd, r.f_demand, r.v_air_tilde.x(), r.v_air_tilde.y(), r.r_c, r.v_c,
                      r.min_obst_dist, r.events.c_str());
        out << buf;
    }
}

void RunLog::write_events(std::ostream& out) const {
    char buf[512];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof(buf), "%.3f vehicle=%u %s: %s\n", e.t, e.vehicle,
                      e.kind.c_str(), e.detail.c_str());
        out << buf;
    }
}

void RunLog::write_summary(std::ostream& out) const {
    char buf[512];
    for (const auto& s : summaries) {
        std::snprintf(buf, sizeof(buf),
                      "vehicle %u: reached=%d t_reach=%.2f crashed=%d min_alt=%.3f "
                      "min_dist=%.3f max_fcmd=%.3f max_fdemand_drift=%.3f max_sat_streak=%.2f "
                      "max_alt_err=%.3f drift_intervals=%zu\n",
                      s.id, s.reached ? 1 : 0, s.t_reach, s.crashed ? 1 : 0, s.min_altitude,
                      s.min_obstacle_distance, s.max_f_cmd, s.max_f_demand_in_drift,
                      s.max_saturation_streak, s.max_altitude_error, s.drift_intervals.size());
        out << buf;
    }
}

}  // namespace driftsim::sim

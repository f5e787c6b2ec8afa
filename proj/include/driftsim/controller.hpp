// Cascaded flight controller. The outer loop is a RISE law on translational
// error producing a desired force; desired attitude and thrust are extracted
// from that force, and a PID inner loop on attitude error produces torques.
//
//   e2   = (pd_dot - p_dot) + alpha1 (pd - p)
//   f    = (k_s + 1) e2 - (k_s + 1) e2(0) + nu   (+ gravity feed-forward)
//   nu_d = (k_s + 1) alpha2 e2 + beta sgn(e2)
//   u    = k_p e_q + k_i int e_q + k_d e_q_dot   (error form; see DESIGN notes)
#pragma once

#include "driftsim/core.hpp"
#include "driftsim/dynamics.hpp"

namespace driftsim::ctrl {

struct ControlGains {
    // RISE (stability requires k_s > 0, alpha2 > 1/2)
    double alpha1 = 0.1;
    double alpha2 = 1.0;
    double k_s = 0.05;
    double beta = 0.25;
    // attitude PID; the inner loop runs at the dynamics substep rate (10 ms),
    // a decade faster than the RISE outer loop
    double k_p = 1.0;
    double k_i = 0.5;
    double k_d = 0.12;
    double integral_clamp = 0.5;     // rad s
    double integral_leak_tau = 2.0;  // s
    double d_filter_tau = 0.02;      // s
    double tilt_limit = deg2rad(60.0);
};

/// Mutable controller state. Re-anchored on every planning-frame or mode
/// switch so the integral terms do not fight the new reference.
struct RiseState {
    Vec3 nu = Vec3::Zero();
    Vec3 e2_initial = Vec3::Zero();
    bool e2_captured = false;
    // attitude PID internals
    Vec3 integral_q = Vec3::Zero();
    Vec3 prev_error_q = Vec3::Zero();
    Vec3 d_filtered = Vec3::Zero();
    bool have_prev_error = false;

    /// Drop e2(0) and the RISE integral; keeps the attitude-loop state.
    void re_anchor() {
        nu = Vec3::Zero();
        e2_captured = false;
    }
};

struct AttitudeCommand {
    double f_cmd = 0.0;
    Vec3 q_d = Vec3::Zero();  // roll, pitch, yaw
    bool degenerate = false;  // desired force pointed downward; clamped to hover attitude
};

/// RISE outer loop. Captures e2(0) on the first call after (re-)anchoring and
/// integrates nu by explicit Euler with a deadbanded sign term. Returns the
/// desired inertial force including gravity feed-forward m*(-g).
Vec3 rise_force(const dyn::VehicleState& state, const Vec3& p_d, const Vec3& pd_dot,
                const ControlGains& gains, RiseState& rise, double dt, double mass,
                const EnvironmentConstants& env = {});

/// Thrust magnitude and Euler angles realizing the desired force at the given
/// yaw. Roll/pitch are clamped to tilt_limit with thrust re-scaled to preserve
/// the vertical force component when feasible; thrust saturates at f_max.
AttitudeCommand attitude_from_force(const Vec3& desired_force, double yaw_d, double f_max,
                                    double tilt_limit = deg2rad(60.0));

/// PID on attitude error (q_d - q) with trapezoidal leaky integral and
/// filtered derivative.
Vec3 pid_torque(const Vec3& q_d, const dyn::VehicleState& state, const ControlGains& gains,
                RiseState& rise, double dt);

}  // namespace driftsim::ctrl

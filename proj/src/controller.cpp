#include "driftsim/controller.hpp"

#include <cmath>

namespace driftsim::ctrl {

Vec3 rise_force(const dyn::VehicleState& state, const Vec3& p_d, const Vec3& pd_dot,
                const ControlGains& gains, RiseState& rise, double dt, double mass,
                const EnvironmentConstants& env) {
    const Vec3 e2 = (pd_dot - state.v) + gains.alpha1 * (p_d - state.p);
    if (!rise.e2_captured) {
        rise.e2_initial = e2;
        rise.e2_captured = true;
    }
    const double ks1 = gains.k_s + 1.0;
    const Vec3 force = ks1 * e2 - ks1 * rise.e2_initial + rise.nu + mass * (-env.g);
    rise.nu += dt * (ks1 * gains.alpha2 * e2 + gains.beta * sgn_deadband(e2));
    return force;
}

AttitudeCommand attitude_from_force(const Vec3& desired_force, double yaw_d, double f_max,
                                    double tilt_limit) {
    AttitudeCommand cmd;
    const double norm = desired_force.norm();
    if (norm < 1e-12 || desired_force.z() <= 0.0) {
        // Downward (or vanishing) desired force cannot be realized by body-z
        // thrust; hold a level attitude and let the outer loop recover.
        cmd.degenerate = true;
        cmd.q_d = Vec3(0.0, 0.0, yaw_d);
        cmd.f_cmd = std::clamp(desired_force.z(), 0.0, f_max);
        return cmd;
    }

    const Vec3 zb = desired_force / norm;
    const Vec2 w_xy = rotate(Vec2(zb.x(), zb.y()), -yaw_d);
    // With R_BI = Rz(yaw) Ry(-pitch) Rx(roll), the body z axis at yaw 0 is
    // (-sin(pitch) cos(roll), -sin(roll), cos(pitch) cos(roll)).
    double roll = -std::asin(std::clamp(w_xy.y(), -1.0, 1.0));
    double pitch = std::atan2(-w_xy.x(), zb.z());

    const bool clamped = std::abs(roll) > tilt_limit || std::abs(pitch) > tilt_limit;
    roll = std::clamp(roll, -tilt_limit, tilt_limit);
    pitch = std::clamp(pitch, -tilt_limit, tilt_limit);
    cmd.q_d = Vec3(roll, pitch, yaw_d);

    if (clamped) {
        const double cz = std::cos(roll) * std::cos(pitch);
        cmd.f_cmd = cz > 1e-6 ? std::min(desired_force.z() / cz, f_max) : f_max;
    } else {
        cmd.f_cmd = std::min(norm, f_max);
    }
    return cmd;
}

Vec3 pid_torque(const Vec3& q_d, const dyn::VehicleState& state, const ControlGains& gains,
                RiseState& rise, double dt) {
    const Vec3 q = euler_from_rotation(state.R_IB.transpose());
    Vec3 error;
    for (int i = 0; i < 3; ++i) error[i] = wrap_angle(q_d[i] - q[i]);

    if (!rise.have_prev_error) {
        rise.prev_error_q = error;
        rise.have_prev_error = true;
    }

    // trapezoidal integral with exponential leak, clamped for anti-windup
    rise.integral_q += dt * (0.5 * (error + rise.prev_error_q) -
                             rise.integral_q / gains.integral_leak_tau);
    for (int i = 0; i < 3; ++i)
        rise.integral_q[i] = std::clamp(rise.integral_q[i], -gains.integral_clamp,
                                        gains.integral_clamp);

    const Vec3 d_raw = (error - rise.prev_error_q) / dt;
    rise.d_filtered += dt / (gains.d_filter_tau + dt) * (d_raw - rise.d_filtered);
    rise.prev_error_q = error;

    const Vec3 pid = gains.k_p * error + gains.k_i * rise.integral_q + gains.k_d * rise.d_filtered;
    // Map Euler-angle corrections to body torques: pitch is nose-up positive,
    // which is a negative rotation about body y.
    return {pid.x(), -pid.y(), pid.z()};
}

}  // namespace driftsim::ctrl

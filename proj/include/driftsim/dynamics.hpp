// Quadrotor rigid-body translational/rotational dynamics with quadratic
// aerodynamic drag and a disturbance-injection hook.
//
//   m p_dd = f + m g + f_drag + d_p        (inertial frame)
//   J w_d  = w x J w + u + R_IB d_w        (body frame)
//
// f is the body-z thrust mapped to inertial by R_IB^T. Unmodeled rotor
// aerodynamics enter through the disturbance inputs.
#pragma once

#include <cstdint>

#include "driftsim/core.hpp"

namespace driftsim::dyn {

struct VehicleParams {
    double m = 0.54;                  // kg
    Mat3 J = Mat3::Identity();        // kg m^2, symmetric positive definite
    double f_max = 15.0;              // N, hardware thrust cap
    double thrust_derate = 1.0;       // (0,1]; models inflow/flapping losses
    double C_d = 0.41;
    Vec3 A{0.04, 0.04, 0.09};         // per-axis reference areas, m^2
    double r_cv = 0.5;                // vehicle-core clearance radius, m
    double v_w_op = 12.0;             // max operable wind, m/s
    std::uint32_t id = 0;
    double r_min = 0.09;              // documented vehicle geometry radius, m

    /// Thrust cap after the derate knob.
    double effective_f_max() const { return thrust_derate * f_max; }

    /// In-plane thrust budget remaining after weight support.
    double f_planar_max(double g_mag) const {
        const double fe = effective_f_max();
        const double w = m * g_mag;
        return fe > w ? std::sqrt(fe * fe - w * w) : 0.0;
    }
};

struct VehicleState {
    Vec3 p = Vec3::Zero();        // m, inertial
    Vec3 v = Vec3::Zero();        // m/s, inertial
    Mat3 R_IB = Mat3::Identity(); // inertial -> body
    Vec3 omega = Vec3::Zero();    // rad/s, body frame
};

/// Relative wind v_w = p_dot - v_air and its unit axis x_W.
struct RelativeWind {
    Vec3 v_w = Vec3::Zero();
    Vec3 x_W = Vec3::Zero();
    double magnitude = 0.0;
    bool undefined = false;  // set when magnitude < 1e-9

    static RelativeWind from(const Vec3& p_dot, const Vec3& v_air) {
        RelativeWind r;
        r.v_w = p_dot - v_air;
        r.magnitude = r.v_w.norm();
        if (r.magnitude < 1e-9) {
            r.undefined = true;
        } else {
            r.x_W = r.v_w / r.magnitude;
        }
        return r;
    }
};

struct DisturbanceInputs {
    Vec3 d_p = Vec3::Zero();      // N, translational (drag excluded; computed internally)
    Vec3 d_omega = Vec3::Zero();  // N m
};

struct ControlCommand {
    double f_cmd = 0.0;       // N, total thrust along body z
    Vec3 q_d = Vec3::Zero();  // desired Euler angles (roll, pitch, yaw)
    Vec3 u = Vec3::Zero();    // N m, body torque
};

/// K_d = 1/2 rho C_d A_eff with the projected area A_eff = sum_i A_i |x_W,i|.
/// Throws UndefinedDirectionError when the direction is degenerate; callers
/// must treat zero relative wind as zero drag instead.
double drag_coefficient_Kd(const VehicleParams& params, const Vec3& x_W, double rho);
double drag_coefficient_Kd(const VehicleParams& params, const RelativeWind& rel, double rho);

/// Worst-case planar K_d over all horizontal relative-wind directions.
double kd_planar_max(const VehicleParams& params, double rho);

/// f_w = K_d ||v_w||^2 (-x_W); zero when ||v_w|| < 1e-9.
Vec3 drag_force(const VehicleParams& params, const Vec3& p_dot, const Vec3& v_air, double rho);

/// One control period of 4th-order Runge-Kutta integration (10 ms substeps).
/// Thrust is saturated to [0, effective_f_max] before integrating; R_IB is
/// re-orthonormalized after every substep. Throws NonFiniteStateError if any
/// state component becomes non-finite.
VehicleState step(const VehicleState& state, const VehicleParams& params,
                  const ControlCommand& command, const Vec3& v_air,
                  const DisturbanceInputs& dist, double dt,
                  const EnvironmentConstants& env = {});

}  // namespace driftsim::dyn

#include "driftsim/dynamics.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace driftsim::dyn {

namespace {

Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return s;
}

struct Derivative {
    Vec3 dp;
    Vec3 dv;
    Mat3 dR;
    Vec3 domega;
};

Derivative evaluate(const VehicleState& s, const VehicleParams& params, double f_cmd,
                    const Vec3& torque, const Vec3& v_air, const DisturbanceInputs& dist,
                    const EnvironmentConstants& env) {
    Derivative d;
    d.dp = s.v;
    const Vec3 thrust = s.R_IB.transpose() * Vec3(0.0, 0.0, f_cmd);
    const Vec3 f_w = drag_force(params, s.v, v_air, env.rho);
    d.dv = (thrust + f_w + dist.d_p) / params.m + env.g;
    d.dR = -skew(s.omega) * s.R_IB;
    d.domega = params.J.inverse() *
               (s.omega.cross(params.J * s.omega) + torque + s.R_IB * dist.d_omega);
    return d;
}

VehicleState advance(const VehicleState& s, const Derivative& d, double h) {
    VehicleState out;
    out.p = s.p + h * d.dp;
    out.v = s.v + h * d.dv;
    out.R_IB = s.R_IB + h * d.dR;
    out.omega = s.omega + h * d.domega;
    return out;
}

void renormalize(VehicleState& s) {
    Eigen::Quaterniond q(s.R_IB.transpose());  // body->inertial
    q.normalize();
    s.R_IB = q.toRotationMatrix().transpose();
}

bool finite(const VehicleState& s) {
    return s.p.allFinite() && s.v.allFinite() && s.R_IB.allFinite() && s.omega.allFinite();
}

}  // namespace

double drag_coefficient_Kd(const VehicleParams& params, const Vec3& x_W, double rho) {
    const double a_eff = params.A.x() * std::abs(x_W.x()) + params.A.y() * std::abs(x_W.y()) +
                         params.A.z() * std::abs(x_W.z());
    return 0.5 * rho * params.C_d * a_eff;
}

double drag_coefficient_Kd(const VehicleParams& params, const RelativeWind& rel, double rho) {
    if (rel.undefined)
        throw UndefinedDirectionError("drag_coefficient_Kd: zero relative wind has no axis");
    return drag_coefficient_Kd(params, rel.x_W, rho);
}

double kd_planar_max(const VehicleParams& params, double rho) {
    // max over theta of A_x|cos| + A_y|sin| is sqrt(A_x^2 + A_y^2)
    const double a_eff = std::hypot(params.A.x(), params.A.y());
    return 0.5 * rho * params.C_d * a_eff;
}

Vec3 drag_force(const VehicleParams& params, const Vec3& p_dot, const Vec3& v_air, double rho) {
    const RelativeWind rel = RelativeWind::from(p_dot, v_air);
    if (rel.undefined) return Vec3::Zero();
    const double kd = drag_coefficient_Kd(params, rel.x_W, rho);
    return -kd * rel.magnitude * rel.v_w;
}

VehicleState step(const VehicleState& state, const VehicleParams& params,
                  const ControlCommand& command, const Vec3& v_air,
                  const DisturbanceInputs& dist, double dt, const EnvironmentConstants& env) {
    const double f_cmd = std::clamp(command.f_cmd, 0.0, params.effective_f_max());

    VehicleState s = state;
    const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / 0.01 - 1e-9)));
    const double h = dt / n_sub;
    for (int k = 0; k < n_sub; ++k) {
        const Derivative k1 = evaluate(s, params, f_cmd, command.u, v_air, dist, env);
        const Derivative k2 =
            evaluate(advance(s, k1, h / 2.0), params, f_cmd, command.u, v_air, dist, env);
        const Derivative k3 =
            evaluate(advance(s, k2, h / 2.0), params, f_cmd, command.u, v_air, dist, env);
        const Derivative k4 = evaluate(advance(s, k3, h), params, f_cmd, command.u, v_air, dist, env);

        s.p += h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
        s.v += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        s.R_IB += h / 6.0 * (k1.dR + 2.0 * k2.dR + 2.0 * k3.dR + k4.dR);
        s.omega += h / 6.0 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
        renormalize(s);
    }

    if (!finite(s))
        throw NonFiniteStateError("dynamics step produced a non-finite state (vehicle " +
                                  std::to_string(params.id) + ")");
    return s;
}

}  // namespace driftsim::dyn

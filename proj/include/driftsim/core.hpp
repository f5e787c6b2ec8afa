// Planar vector/angle utilities and frame conventions shared by all modules.
//
// Planning math lives in the (x,y) sub-space of the 3D state; altitude is
// handled exclusively by the flight controller. Angles are radians,
// counterclockwise positive, in (-pi, pi] with the branch at exactly -pi
// resolved to +pi.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "driftsim/errors.hpp"

namespace driftsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Air density and gravity. g points along -z with magnitude 9.81 by default.
struct EnvironmentConstants {
    double rho = 1.225;       // kg/m^3
    Vec3 g{0.0, 0.0, -9.81};  // m/s^2
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

/// Wrap an angle to (-pi, pi]; exactly -pi maps to +pi.
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a = kPi;
    return a;
}

/// Counterclockwise rotation of a planar vector by theta. Length preserving.
inline Vec2 rotate(const Vec2& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// Signed angle theta in (-pi, pi] such that rotate(a, theta) is parallel to b.
/// Throws ZeroVectorError when either input has zero norm.
inline double signed_angle(const Vec2& a, const Vec2& b) {
    if (a.norm() <= 0.0 || b.norm() <= 0.0)
        throw ZeroVectorError("signed_angle: zero-norm input");
    const double cross = a.x() * b.y() - a.y() * b.x();
    const double dot = a.dot(b);
    double theta = std::atan2(cross, dot);
    if (theta <= -kPi) theta = kPi;  // deterministic tie-break at the branch cut
    return theta;
}

/// Planar rotation carrying an explicit angle, for geometry code that
/// composes and inverts turns.
struct Rotation2 {
    double angle = 0.0;

    Vec2 apply(const Vec2& v) const { return rotate(v, angle); }
    Rotation2 inverse() const { return {-angle}; }
    Rotation2 compose(const Rotation2& other) const { return {angle + other.angle}; }
};

inline double sgn(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

/// Componentwise sign with a deadband: |x| < tol maps to 0.
inline Vec3 sgn_deadband(const Vec3& v, double tol = 1e-6) {
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = (std::abs(v[i]) < tol) ? 0.0 : sgn(v[i]);
    return out;
}

// Euler angle convention used throughout:
//   R_BI(roll, pitch, yaw) = Rz(yaw) * Ry(-pitch) * Rx(roll)
// maps body coordinates to inertial (z-up world). Pitch is nose-up positive,
// so a +x force command corresponds to negative pitch.
inline Mat3 rotation_from_euler(double roll, double pitch, double yaw) {
    const Eigen::AngleAxisd rz(yaw, Vec3::UnitZ());
    const Eigen::AngleAxisd ry(-pitch, Vec3::UnitY());
    const Eigen::AngleAxisd rx(roll, Vec3::UnitX());
    return (rz * ry * rx).toRotationMatrix();
}

/// Inverse of rotation_from_euler for R_BI (body-to-inertial).
/// Returns (roll, pitch, yaw).
inline Vec3 euler_from_rotation(const Mat3& r_bi) {
    // With r_bi = Rz(yaw) Ry(-pitch) Rx(roll):
    //   r_bi(2,0) = sin(pitch)
    //   r_bi(2,1) = cos(pitch) sin(roll),  r_bi(2,2) = cos(pitch) cos(roll)
    //   r_bi(1,0) = sin(yaw) cos(pitch),   r_bi(0,0) = cos(yaw) cos(pitch)
    const double pitch = std::asin(std::clamp(r_bi(2, 0), -1.0, 1.0));
    const double roll = std::atan2(r_bi(2, 1), r_bi(2, 2));
    const double yaw = std::atan2(r_bi(1, 0), r_bi(0, 0));
    return {roll, pitch, yaw};
}

}  // namespace driftsim

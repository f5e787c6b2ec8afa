// Wind estimation, drift-mode triggering, drift-velocity selection, frame
// transformation, drift-frame cruise-velocity solution, and wind-adaptive
// clearance/cruise updates.
//
// The drift frame translates at constant velocity v_drift chosen so the
// worst-case relative airspeed seen inside the frame stays below the
// control-authority limit sqrt(f_planar / K_d):
//   v_air_max - sqrt(f_planar/K_d) <= ||v_drift|| <= sqrt(v_air_max^2 + f_planar/K_d)
//   v_air_max - sqrt(f_planar/K_d) <= v_drift . v_air_hat <= v_air_max
// Normal mode is the special case ||v_drift|| = 0.
#pragma once

#include <deque>

#include "driftsim/controller.hpp"
#include "driftsim/dynamics.hpp"
#include "driftsim/trajgen.hpp"

namespace driftsim::drift {

enum class Mode { Normal, Drift };

struct WindEstimate {
    Vec2 v_air_tilde = Vec2::Zero();  // filtered planar wind estimate
    double residual = 0.0;            // N, drag force magnitude used in the inversion
    double timestamp = 0.0;           // s
    double v_air_max_tilde = 0.0;     // running max of ||v_air_tilde|| over the window
    bool converged = true;
};

struct DriftConfig {
    double r_ce_min = 0.5;          // m, environment clearance margin at zero wind
    double r_ce_max = 1.5;          // m, margin at (and beyond) the operating wind cap
    double eta = 0.8;               // exit hysteresis fraction of f_planar_max
    double t_hold = 5.0;            // s, hold-down before r_c may decrease
    double window = 10.0;           // s, sliding window for v_air_max_tilde
    double tau_filter = 1.0;        // s, low-pass on the wind estimate
    double d_min = 0.02;            // N, below this the drag residual is noise
    double authority_margin = 0.7;  // fraction of f_planar_max used to size v_drift
};

/// Inverse-dynamics wind estimator. Feed it the measured state and the thrust
/// vector that was applied over the last control period; it differentiates
/// the velocity history, inverts the drag model for the relative wind (a
/// fixed-point on the direction-dependent drag gain), low-pass filters the
/// result, and tracks the windowed maximum.
class WindEstimator {
public:
    explicit WindEstimator(DriftConfig cfg = {}) : cfg_(cfg) {}

    WindEstimate update(const dyn::VehicleState& state, const Vec3& force_applied,
                        const dyn::VehicleParams& params, double rho, double t,
                        const EnvironmentConstants& env = {});

    const WindEstimate& last() const { return last_; }
    void reset();

private:
    DriftConfig cfg_;
    bool have_prev_ = false;
    Vec3 prev_velocity_ = Vec3::Zero();
    double prev_t_ = 0.0;
    bool have_filtered_ = false;
    Vec2 filtered_ = Vec2::Zero();
    std::deque<std::pair<double, double>> max_window_;
    WindEstimate last_;
};

/// Hysteretic mode decision: enter Drift when K_d v_max^2 exceeds the planar
/// thrust budget, return to Normal when it falls below eta times the budget.
Mode drift_trigger(const WindEstimate& est, double f_planar_max, double k_d, double eta,
                   Mode current);

/// Minimal-norm drift velocity satisfying the theorem bounds: zero when the
/// bounds are vacuous, otherwise (v_air_max - sqrt(f_planar_max/K_d)) along
/// the wind. Throws DegenerateWindError if the wind direction is undefined
/// while a nonzero drift velocity is required.
Vec2 solve_drift_velocity(const Vec2& v_air, double v_air_max, double f_planar_max, double k_d);

struct DriftFrameView {
    Vec2 v_air_D = Vec2::Zero();  // wind seen inside the frame
    double v_air_max_D = 0.0;
    double v_o_max_D = 0.0;       // stationary obstacles move at ||v_drift||
    std::vector<traj::ObstacleCluster> clusters;  // velocities shifted by -v_drift
};

/// Galilean transform of wind and obstacle quantities into the drift frame.
/// The nominal vehicle velocity inside the frame is zero at entry.
DriftFrameView to_drift_frame(const Vec2& v_drift, const Vec2& v_air, double v_air_max,
                              std::vector<traj::ObstacleCluster> clusters);

/// Largest cruise speed satisfying (i) positive maneuvering authority at the
/// worst-case resultant airspeed and (ii) the sensor reaction-distance bound
///   (v_c + v_o_max) (dT_s + tau_f_min(pi, v_c)) <= r_s - r_c.
/// Bisection to 1e-4 m/s. Throws NoControlAuthorityError when infeasible at
/// v_c = 0 (the vehicle should be grounded).
double cruise_velocity(const traj::PlannerLimits& limits, double v_air_max_frame,
                       double v_o_max_frame);

/// Normal-mode cruise speed with peers assumed to cruise at the same solved
/// speed: the fixed point of v = cruise_velocity(limits, v_air_max, v).
double cruise_velocity_peer_consistent(const traj::PlannerLimits& limits, double v_air_max_frame);

/// Wind-adaptive clearance radius and cruise speed. The environment margin
/// r_ce ramps linearly with the estimated wind maximum up to the operating
/// cap; decreases are deferred by the hold-down window.
class RcVcAdapter {
public:
    RcVcAdapter() = default;
    RcVcAdapter(DriftConfig cfg, double r_cv, double v_w_op)
        : cfg_(cfg), r_cv_(r_cv), v_w_op_(v_w_op) {}

    struct Result {
        double r_c = 0.0;
        double r_ce = 0.0;
        double v_c = 0.0;
    };

    /// Computes (r_c, v_c) for the current wind bound; limits.r_c is updated
    /// by the caller from the result. Propagates NoControlAuthorityError.
    Result update(double v_air_max_tilde, double t, traj::PlannerLimits limits);

    double desired_r_ce(double v_air_max_tilde) const;

private:
    DriftConfig cfg_;
    double r_cv_ = 0.5;
    double v_w_op_ = 12.0;
    std::deque<std::pair<double, double>> hold_;  // (t, desired r_c)
};

/// Current mode and drift-frame quantities for one vehicle.
struct DriftState {
    Mode mode = Mode::Normal;
    Vec2 v_drift = Vec2::Zero();
    double v_air_max_D = 0.0;
    double v_o_max_D = 0.0;
    double v_c_D = 0.0;
    double r_c = 0.0;
    double r_ce = 0.0;
    double v_c = 0.0;
    double f_planar_max = 0.0;

    /// Inertial-frame cruise speed: v_c^D + ||v_drift|| in drift mode.
    double inertial_cruise() const {
        return mode == Mode::Drift ? v_c_D + v_drift.norm() : v_c;
    }
};

}  // namespace driftsim::drift

#include "driftsim/driftframe.hpp"

#include <cmath>

#include "driftsim/log.hpp"

namespace driftsim::drift {

WindEstimate WindEstimator::update(const dyn::VehicleState& state, const Vec3& force_applied,
                                   const dyn::VehicleParams& params, double rho, double t,
                                   const EnvironmentConstants& env) {
    if (!have_prev_) {
        have_prev_ = true;
        prev_velocity_ = state.v;
        prev_t_ = t;
        last_.v_air_tilde = Vec2(state.v.x(), state.v.y());
        last_.timestamp = t;
        filtered_ = last_.v_air_tilde;
        have_filtered_ = true;
        max_window_.emplace_back(t, filtered_.norm());
        last_.v_air_max_tilde = filtered_.norm();
        return last_;
    }

    const double dt = t - prev_t_;
    if (dt <= 0.0) return last_;
    const Vec3 accel = (state.v - prev_velocity_) / dt;
    prev_velocity_ = state.v;
    prev_t_ = t;

    // residual force not explained by thrust and gravity = drag
    const Vec3 d = params.m * accel - force_applied - params.m * env.g;
    const Vec2 d_xy(d.x(), d.y());
    const Vec2 pdot_xy(state.v.x(), state.v.y());

    Vec2 raw;
    bool converged = true;
    double residual = d_xy.norm();
    if (residual < cfg_.d_min) {
        raw = pdot_xy;  // zero relative wind
    } else {
        // K_d depends on the relative-wind axis x_W = -d_hat; iterate the
        // direction-dependent gain to a fixed point
        Vec3 x_w(-d_xy.x() / residual, -d_xy.y() / residual, 0.0);
        double k_d = dyn::drag_coefficient_Kd(params, x_w, rho);
        double v_w_mag = std::sqrt(residual / k_d);
        converged = false;
        for (int i = 0; i < 10; ++i) {
            const double k_next = dyn::drag_coefficient_Kd(params, x_w, rho);
            const double v_next = std::sqrt(residual / k_next);
            if (std::abs(v_next - v_w_mag) < 1e-10) {
                converged = true;
                v_w_mag = v_next;
                break;
            }
            k_d = k_next;
            v_w_mag = v_next;
        }
        if (!converged) {
            log::debug("wind estimate direction iteration did not converge");
            return last_;  // retain the previous estimate
        }
        const Vec2 v_w(x_w.x() * v_w_mag, x_w.y() * v_w_mag);
        raw = pdot_xy - v_w;
    }

    if (!have_filtered_) {
        filtered_ = raw;
        have_filtered_ = true;
    } else {
        filtered_ += dt / (cfg_.tau_filter + dt) * (raw - filtered_);
    }

    max_window_.emplace_back(t, filtered_.norm());
    while (!max_window_.empty() && max_window_.front().first < t - cfg_.window)
        max_window_.pop_front();
    double v_max = 0.0;
    for (const auto& [tau, mag] : max_window_) v_max = std::max(v_max, mag);

    last_.v_air_tilde = filtered_;
    last_.residual = residual;
    last_.timestamp = t;
    last_.v_air_max_tilde = v_max;
    last_.converged = converged;
    return last_;
}

void WindEstimator::reset() {
    have_prev_ = false;
    have_filtered_ = false;
    filtered_ = Vec2::Zero();
    max_window_.clear();
    last_ = WindEstimate{};
}

Mode drift_trigger(const WindEstimate& est, double f_planar_max, double k_d, double eta,
                   Mode current) {
    const double worst_drag = k_d * est.v_air_max_tilde * est.v_air_max_tilde;
    if (worst_drag > f_planar_max) return Mode::Drift;
    if (worst_drag < eta * f_planar_max) return Mode::Normal;
    return current;
}

Vec2 solve_drift_velocity(const Vec2& v_air, double v_air_max, double f_planar_max, double k_d) {
    const double authority = std::sqrt(f_planar_max / k_d);
    if (v_air_max <= authority) return Vec2::Zero();
    if (v_air.norm() < 1e-9)
        throw DegenerateWindError("drift velocity requested with no wind direction");
    return (v_air_max - authority) * v_air.normalized();
}

DriftFrameView to_drift_frame(const Vec2& v_drift, const Vec2& v_air, double v_air_max,
                              std::vector<traj::ObstacleCluster> clusters) {
    DriftFrameView view;
    view.v_air_D = v_air - v_drift;
    const Vec2 worst = v_air.norm() > 1e-12 ? Vec2(v_air_max * v_air.normalized() - v_drift)
                                            : Vec2(-v_drift);
    view.v_air_max_D = worst.norm();
    view.v_o_max_D = v_drift.norm();
    view.clusters = std::move(clusters);
    for (auto& c : view.clusters) c.velocity -= v_drift;
    return view;
}

double cruise_velocity(const traj::PlannerLimits& limits, double v_air_max_frame,
                       double v_o_max_frame) {
    const auto feasible = [&](double v_c) {
        const double v_rel = v_c + v_air_max_frame;
        const double a = (limits.f_planar_max - limits.k_d * v_rel * v_rel) / limits.mass;
        if (a <= 0.0) return false;
        const double tau_pi = kPi * traj::sigmoid_c3() * v_c / ((1.0 - traj::kEpsS) * a);
        return (v_c + v_o_max_frame) * (limits.dT_s + tau_pi) <= limits.r_s - limits.r_c;
    };

    const double authority = std::sqrt(limits.f_planar_max / limits.k_d);
    double hi = authority - v_air_max_frame;
    if (hi <= 0.0 || !feasible(0.0))
        throw NoControlAuthorityError(
            "no feasible cruise speed: v_air_max " + std::to_string(v_air_max_frame) +
            " against authority limit " + std::to_string(authority));

    double lo = 0.0;
    if (feasible(hi)) return hi;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

double cruise_velocity_peer_consistent(const traj::PlannerLimits& limits,
                                       double v_air_max_frame) {
    double v = cruise_velocity(limits, v_air_max_frame, 0.0);
    for (int i = 0; i < 30; ++i) {
        const double next = cruise_velocity(limits, v_air_max_frame, v);
        if (std::abs(next - v) < 1e-5) return next;
        v = next;
    }
    return v;
}

double RcVcAdapter::desired_r_ce(double v_air_max_tilde) const {
    const double frac = std::clamp(v_air_max_tilde / v_w_op_, 0.0, 1.0);
    return cfg_.r_ce_min + (cfg_.r_ce_max - cfg_.r_ce_min) * frac;
}

RcVcAdapter::Result RcVcAdapter::update(double v_air_max_tilde, double t,
                                        traj::PlannerLimits limits) {
    const double desired = r_cv_ + desired_r_ce(v_air_max_tilde);
    hold_.emplace_back(t, desired);
    while (!hold_.empty() && hold_.front().first < t - cfg_.t_hold) hold_.pop_front();

    Result out;
    out.r_c = desired;
    for (const auto& [tau, rc] : hold_) out.r_c = std::max(out.r_c, rc);
    out.r_ce = out.r_c - r_cv_;

    limits.r_c = out.r_c;
    out.v_c = cruise_velocity_peer_consistent(limits, v_air_max_tilde);
    return out;
}

}  // namespace driftsim::drift

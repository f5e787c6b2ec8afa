#include "driftsim/trajgen.hpp"

#include <algorithm>
#include <cmath>

namespace driftsim::traj {

double sigmoid_c3() {
    static const double c3 = std::atanh(1.0 - kEpsS);
    return c3;
}

// ---------------------------------------------------------------------------
// sigmoid segments and 1D trajectories
// ---------------------------------------------------------------------------

double SigmoidSegment::value(double t) const { return c1 * std::tanh(c2 * (t - t0) - c3) + c4; }

double SigmoidSegment::delta(double t) const {
    return c1 * (std::tanh(c2 * (t - t0) - c3) + (1.0 - kEpsS));
}

double SigmoidSegment::rate(double t, int order) const {
    const double u = c2 * (t - t0) - c3;
    const double T = std::tanh(u);
    const double S2 = 1.0 - T * T;
    switch (order) {
        case 1:
            return c1 * c2 * S2;
        case 2:
            return -2.0 * c1 * c2 * c2 * T * S2;
        case 3:
            return -2.0 * c1 * c2 * c2 * c2 * S2 * (S2 - 2.0 * T * T);
        case 4:
            return 4.0 * c1 * std::pow(c2, 4) * T * S2 * (4.0 * S2 - 2.0 * T * T);
        default:
            return 0.0;
    }
}

double Trajectory1D::value(double t) const {
    double x = base;
    for (const auto& seg : segments) x += seg.delta(t);
    return x;
}

double Trajectory1D::derivative(double t, int order) const {
    double x = 0.0;
    for (const auto& seg : segments) x += seg.rate(t, order);
    return x;
}

// ---------------------------------------------------------------------------
// planar trajectory
// ---------------------------------------------------------------------------

namespace {

// 4-point Gauss-Legendre quadrature on [a, b]
constexpr double kGlNode = 0.33998104358485626;
constexpr double kGlNodeOuter = 0.8611363115940526;
constexpr double kGlWeight = 0.6521451548625461;
constexpr double kGlWeightOuter = 0.34785484513745385;

template <typename F>
Vec2 gauss_legendre4(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Vec2 acc = kGlWeight * (f(mid - half * kGlNode) + f(mid + half * kGlNode));
    acc += kGlWeightOuter * (f(mid - half * kGlNodeOuter) + f(mid + half * kGlNodeOuter));
    return half * acc;
}

// Segments whose tanh support overlaps [t0, t1]; 4 timespans away the rate
// has decayed below 1e-15 of its peak, so exclusions cannot move a peak
// comparison at 1e-9 tolerance.
bool segment_active(const SigmoidSegment& s, double t0, double t1) {
    return s.t0 - 4.0 * s.tau_f <= t1 && s.t0 + 5.0 * s.tau_f >= t0;
}

double combined_peak_accel(const Trajectory1D& heading, const Trajectory1D& speed,
                           const SigmoidSegment* extra, double t0, double t1, double step) {
    std::vector<const SigmoidSegment*> h_active;
    std::vector<const SigmoidSegment*> v_active;
    for (const auto& s : heading.segments)
        if (segment_active(s, t0, t1)) h_active.push_back(&s);
    for (const auto& s : speed.segments)
        if (segment_active(s, t0, t1)) v_active.push_back(&s);

    // the speed value (the v in v*phi_dot) still needs inactive segments;
    // their contribution is constant over the window to within 1e-15
    double v_done = speed.base;
    for (const auto& s : speed.segments)
        if (!segment_active(s, t0, t1)) v_done += s.delta(0.5 * (t0 + t1));

    double peak = 0.0;
    const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step)));
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + (t1 - t0) * i / n;
        double v = v_done;
        double v_dot = 0.0;
        double phi_dot = 0.0;
        for (const auto* s : v_active) {
            v += s->delta(t);
            v_dot += s->rate(t, 1);
        }
        for (const auto* s : h_active) phi_dot += s->rate(t, 1);
        if (extra != nullptr) {
            if (extra->kind == SigmoidKind::Speed) {
                v += extra->delta(t);
                v_dot += extra->rate(t, 1);
            } else {
                phi_dot += extra->rate(t, 1);
            }
        }
        peak = std::max(peak, std::hypot(v_dot, v * phi_dot));
    }
    return peak;
}

}  // namespace

PlanarTrajectory::PlanarTrajectory(double epoch, const Vec2& origin, double altitude,
                                   double heading0, double speed0, double cache_dt)
    : epoch_(epoch), origin_(origin), altitude_(altitude), cache_dt_(cache_dt) {
    heading_.base = heading0;
    speed_.base = speed0;
    cache_.push_back(Vec2::Zero());
}

void PlanarTrajectory::add_segment(const SigmoidSegment& seg) {
    if (seg.kind == SigmoidKind::Heading) {
        heading_.segments.push_back(seg);
    } else {
        speed_.segments.push_back(seg);
    }
    // position integrals beyond the segment start are stale
    const double keep_t = std::max(seg.t0, epoch_);
    const auto keep = static_cast<std::size_t>(std::floor((keep_t - epoch_) / cache_dt_)) + 1;
    if (cache_.size() > keep) cache_.resize(keep);
}

Vec2 PlanarTrajectory::velocity_at(double t) const {
    const double v = speed_.value(t);
    const double phi = heading_.value(t);
    return {v * std::cos(phi), v * std::sin(phi)};
}

TrajectorySample PlanarTrajectory::sample(double t) const {
    if (t < epoch_) t = epoch_;
    const auto vel = [this](double tau) { return velocity_at(tau); };

    const auto k = static_cast<std::size_t>(std::floor((t - epoch_) / cache_dt_));
    while (cache_.size() <= k) {
        const auto i = cache_.size();
        const double a = epoch_ + (static_cast<double>(i) - 1.0) * cache_dt_;
        cache_.push_back(cache_.back() + gauss_legendre4(vel, a, a + cache_dt_));
    }
    const double t_k = epoch_ + static_cast<double>(k) * cache_dt_;
    Vec2 planar = origin_ + cache_[k];
    if (t > t_k) planar += gauss_legendre4(vel, t_k, t);

    TrajectorySample s;
    s.heading = heading_.value(t);
    s.speed = speed_.value(t);

    const double phi = s.heading;
    const double v = s.speed;
    const double v1 = speed_.derivative(t, 1), v2 = speed_.derivative(t, 2),
                 v3 = speed_.derivative(t, 3);
    const double p1 = heading_.derivative(t, 1), p2 = heading_.derivative(t, 2),
                 p3 = heading_.derivative(t, 3);
    const Vec2 e(std::cos(phi), std::sin(phi));
    const Vec2 ep(-std::sin(phi), std::cos(phi));

    const Vec2 vel2 = v * e;
    const Vec2 acc = v1 * e + v * p1 * ep;
    const Vec2 jerk = (v2 - v * p1 * p1) * e + (2.0 * v1 * p1 + v * p2) * ep;
    const Vec2 snap = (v3 - 3.0 * v1 * p1 * p1 - 3.0 * v * p1 * p2) * e +
                      (3.0 * v2 * p1 + 3.0 * v1 * p2 + v * p3 - v * p1 * p1 * p1) * ep;

    s.p_d = Vec3(planar.x(), planar.y(), altitude_);
    s.pd_dot = Vec3(vel2.x(), vel2.y(), 0.0);
    s.pd_ddot = Vec3(acc.x(), acc.y(), 0.0);
    s.pd_d3 = Vec3(jerk.x(), jerk.y(), 0.0);
    s.pd_d4 = Vec3(snap.x(), snap.y(), 0.0);
    return s;
}

double PlanarTrajectory::peak_acceleration(double t_begin, double t_end, double step) const {
    return combined_peak_accel(heading_, speed_, nullptr, t_begin, t_end, step);
}

double PlanarTrajectory::last_transition_end() const {
    double end = epoch_;
    for (const auto& seg : heading_.segments) end = std::max(end, seg.t0 + seg.tau_f);
    for (const auto& seg : speed_.segments) end = std::max(end, seg.t0 + seg.tau_f);
    return end;
}

double PlanarTrajectory::last_transition_end_after(double t) const {
    double end = t;
    for (const auto& seg : heading_.segments)
        if (seg.t0 + seg.tau_f > t) end = std::max(end, seg.t0 + seg.tau_f);
    for (const auto& seg : speed_.segments)
        if (seg.t0 + seg.tau_f > t) end = std::max(end, seg.t0 + seg.tau_f);
    return end;
}

// ---------------------------------------------------------------------------
// maneuver ranking
// ---------------------------------------------------------------------------

double v_c_star(double v_c, double v_air_mag, double v_w_op, double pd_dot_norm) {
    if (v_air_mag > v_w_op) return 0.0;
    if (pd_dot_norm <= 1e-3) return 0.0;
    return v_c;
}

std::set<std::uint32_t> rank_vehicles(const PeerInfo& self, const std::vector<PeerInfo>& peers,
                                      double v_air_mag) {
    std::set<std::uint32_t> seen{self.id};
    for (const auto& p : peers) {
        if (!seen.insert(p.id).second)
            throw DuplicateIdError("duplicate vehicle ID " + std::to_string(p.id) +
                                   " in comms round");
    }

    const double vs_self = v_c_star(self.v_c, v_air_mag, self.v_w_op, self.pd_dot.norm());
    std::set<std::uint32_t> maneuver_for;
    for (const auto& p : peers) {
        const double vs_peer = v_c_star(p.v_c, v_air_mag, p.v_w_op, p.pd_dot.norm());
        if (vs_self > vs_peer || (vs_self == vs_peer && self.id > p.id)) maneuver_for.insert(p.id);
    }
    return maneuver_for;
}

// ---------------------------------------------------------------------------
// sensor clustering
// ---------------------------------------------------------------------------

std::vector<ObstacleCluster> cluster_obstacles(const std::vector<ScanReturn>& scan,
                                               const Vec2& sensor_pos,
                                               const std::vector<ObstacleCluster>& previous,
                                               double dT_s, const ClusterParams& params) {
    std::vector<ObstacleCluster> clusters;
    if (scan.empty()) return clusters;

    // split at range/bearing discontinuities
    std::vector<std::vector<std::size_t>> groups;
    groups.emplace_back();
    groups.back().push_back(0);
    for (std::size_t i = 1; i < scan.size(); ++i) {
        const bool jump = std::abs(scan[i].range - scan[i - 1].range) > params.delta_range ||
                          (scan[i].bearing - scan[i - 1].bearing) > params.delta_bearing ||
                          scan[i].source != scan[i - 1].source;
        if (jump) groups.emplace_back();
        groups.back().push_back(i);
    }
    // merge across the +-pi seam
    if (groups.size() > 1) {
        const auto& first = scan[groups.front().front()];
        const auto& last = scan[groups.back().back()];
        const double seam_gap = 2.0 * kPi - (last.bearing - first.bearing);
        if (seam_gap <= params.delta_bearing && last.source == first.source &&
            std::abs(last.range - first.range) <= params.delta_range) {
            auto merged = groups.back();
            merged.insert(merged.end(), groups.front().begin(), groups.front().end());
            groups.front() = std::move(merged);
            groups.pop_back();
        }
    }

    for (const auto& g : groups) {
        ObstacleCluster c;
        bool all_velocity = true;
        Vec2 vel_sum = Vec2::Zero();
        double best_range = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < g.size(); ++j) {
            const ScanReturn& r = scan[g[j]];
            c.points.push_back(sensor_pos +
                               r.range * Vec2(std::cos(r.bearing), std::sin(r.bearing)));
            if (r.velocity) {
                vel_sum += *r.velocity;
            } else {
                all_velocity = false;
            }
            if (r.range < best_range) {
                best_range = r.range;
                c.min_idx = static_cast<int>(j);
            }
            if (c.source == -1) c.source = r.source;
        }
        c.e1 = 0;
        c.e2 = static_cast<int>(g.size()) - 1;
        if (all_velocity) c.velocity = vel_sum / static_cast<double>(g.size());
        clusters.push_back(std::move(c));
    }

    // stable local ids by nearest-centroid matching against the previous scan
    const auto centroid = [](const ObstacleCluster& c) {
        Vec2 s = Vec2::Zero();
        for (const auto& p : c.points) s += p;
        return Vec2(s / static_cast<double>(c.points.size()));
    };
    int next_id = 0;
    for (const auto& p : previous) next_id = std::max(next_id, p.id + 1);

    std::vector<bool> prev_used(previous.size(), false);
    struct Pair {
        double dist;
        std::size_t cur, prev;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < clusters.size(); ++i)
        for (std::size_t j = 0; j < previous.size(); ++j) {
            const double d = (centroid(clusters[i]) - centroid(previous[j])).norm();
            if (d <= params.match_gate) pairs.push_back({d, i, j});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.cur != b.cur) return a.cur < b.cur;
        return a.prev < b.prev;
    });
    std::vector<bool> cur_matched(clusters.size(), false);
    for (const auto& pr : pairs) {
        if (cur_matched[pr.cur] || prev_used[pr.prev]) continue;
        cur_matched[pr.cur] = true;
        prev_used[pr.prev] = true;
        ObstacleCluster& c = clusters[pr.cur];
        c.id = previous[pr.prev].id;
        const bool have_truth = std::all_of(scan.begin(), scan.end(),
                                            [](const ScanReturn& r) { return bool(r.velocity); });
        if (!have_truth && dT_s > 0.0)
            c.velocity = (centroid(c) - centroid(previous[pr.prev])) / dT_s;
    }
    for (auto& c : clusters)
        if (c.id < 0) c.id = next_id++;
    return clusters;
}

// ---------------------------------------------------------------------------
// projection geometry
// ---------------------------------------------------------------------------

Projection project_point(const Vec2& p_d, const Vec2& pd_dot, const Vec2& p_ki,
                         const Vec2& p_k_min, double r_c) {
    const Vec2 r_i = p_ki - p_d;
    const double n_i = r_i.norm();
    if (n_i < 1e-9) throw CoincidentPointError();
    Vec2 r_min = p_k_min - p_d;
    if (r_min.norm() < 1e-9) throw CoincidentPointError("minimum sensed point at vehicle");

    const bool course_known = pd_dot.norm() > 1e-12;
    Projection out;
    if (n_i > r_c) {
        const double phi_e1 = signed_angle(r_min, r_i);
        double k;
        if (std::abs(phi_e1) > 0.0) {
            k = sgn(phi_e1);
        } else {
            // head-on tie: side chosen by the current course; exactly head-on
            // stays on the axis (k = 0)
            k = course_known ? sgn(signed_angle(r_min, pd_dot)) : 1.0;
        }
        const double phi_e2 = k * std::asin(std::clamp(r_c / n_i, 0.0, 1.0));
        out.phi_e = phi_e1 + phi_e2;
        out.p_star =
            p_d + std::sqrt(n_i * n_i - r_c * r_c) * rotate(r_min.normalized(), out.phi_e);
    } else {
        double phi_pm = kPi / 180.0;
        if (course_known) phi_pm *= sgn(signed_angle(pd_dot, r_min));
        out.p_star = p_ki + r_c * rotate(-r_i / n_i, phi_pm);
        const Vec2 dir = out.p_star - p_d;
        out.phi_e = dir.norm() > 1e-12 ? signed_angle(r_min, dir) : 0.0;
    }
    return out;
}

TangentCandidates tangent_candidates(const Vec2& p_d, const Vec2& p_star_e1,
                                     const Vec2& p_star_e2, const Vec2& p_star_min,
                                     double dist_to_cluster, double r_c) {
    const bool violation = dist_to_cluster < r_c;
    TangentCandidates t;
    t.s1 = violation ? Vec2(p_star_e1 - p_d) : Vec2(p_star_e1 - p_star_min);
    t.s2 = p_star_e1 - p_d;
    t.s3 = violation ? Vec2(p_star_e2 - p_d) : Vec2(p_star_e2 - p_star_min);
    t.s4 = p_star_e2 - p_d;
    return t;
}

// ---------------------------------------------------------------------------
// course-change planning
// ---------------------------------------------------------------------------

namespace {

constexpr int kSweepSteps = 720;  // 0.5 degree resolution

// First time at which a point at r (relative) moving at v_rel comes within
// r_c; +inf when it never does.
double time_to_violation_point(const Vec2& r, const Vec2& v_rel, double r_c) {
    if (r.norm() <= r_c) return 0.0;
    const double a = v_rel.squaredNorm();
    if (a < 1e-12) return std::numeric_limits<double>::infinity();
    const double b = 2.0 * r.dot(v_rel);
    const double c = r.squaredNorm() - r_c * r_c;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    const double t = (-b - std::sqrt(disc)) / (2.0 * a);
    return t >= 0.0 ? t : std::numeric_limits<double>::infinity();
}

// A ray from the origin along dir clears the point at r by r_c. Points
// already violating r_c are acceptable only if the ray moves away from them.
bool ray_clears(const Vec2& dir, const Vec2& r, double r_c) {
    const double n = r.norm();
    if (n < r_c) return dir.dot(r) <= 0.0;
    if (dir.dot(r) <= 0.0) return true;  // behind
    const double lateral = std::abs(dir.x() * r.y() - dir.y() * r.x());
    return lateral >= r_c;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 < 1e-18) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

bool segment_clears(const Vec2& a, const Vec2& b, const std::vector<Vec2>& points, double r_c) {
    for (const auto& p : points)
        if (point_segment_distance(p, a, b) < r_c) return false;
    return true;
}

// Estimated distance to goal along a candidate ray: travel along dir until
// the straight run to the goal clears the constraining points by r_c, then
// go straight. Rays that never open a clear run to the goal get a penalty.
double traverse_cost(const Vec2& p_d, const Vec2& dir, const Vec2& goal,
                     const std::vector<Vec2>& points, double r_c, double s_max) {
    const int kSteps = 16;
    for (int i = 0; i <= kSteps; ++i) {
        const double s = s_max * i / kSteps;
        const Vec2 q = p_d + s * dir;
        if (segment_clears(q, goal, points, r_c)) return s + (goal - q).norm();
    }
    const Vec2 q = p_d + s_max * dir;
    return 2.0 * s_max + (goal - q).norm();
}

}  // namespace

ProjectedGeometry plan_course_change(const std::vector<ObstacleCluster>& clusters,
                                     const PlanInput& input, const PlannerLimits& limits) {
    ProjectedGeometry out;
    const Vec2 to_goal = input.goal - input.p_d;

    if (clusters.empty()) {
        out.delta_phi =
            to_goal.norm() > 1e-9 ? signed_angle(input.course_dir, to_goal) : 0.0;
        out.est_cost = to_goal.norm();
        out.feasible_set = {{-kPi, kPi}};
        out.z_k = out.delta_phi >= 0.0 ? CircumnavDirection::CCW : CircumnavDirection::CW;
        return out;
    }

    // most imminent cluster along the current course; ties (including the
    // never-violating case) go to the nearest cluster
    const Vec2 v_self = input.v_now * input.course_dir;
    double best_time = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t imminent = 0;
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        double t_k = std::numeric_limits<double>::infinity();
        double d_k = std::numeric_limits<double>::infinity();
        for (const auto& p : clusters[k].points) {
            t_k = std::min(t_k, time_to_violation_point(p - input.p_d,
                                                        clusters[k].velocity - v_self,
                                                        limits.r_c));
            d_k = std::min(d_k, (p - input.p_d).norm());
        }
        if (t_k < best_time || (t_k == best_time && d_k < best_dist)) {
            best_time = t_k;
            best_dist = d_k;
            imminent = k;
        }
    }
    out.cluster_id = clusters[imminent].id;
    out.time_to_violation = best_time;

    // evaluate against positions propagated one maneuver duration ahead
    const double tau_h = limits.dT_s + limits.tau_f_min_heading(kPi, limits.v_c);
    std::vector<std::vector<Vec2>> prop(clusters.size());
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        prop[k].reserve(clusters[k].points.size());
        for (const auto& p : clusters[k].points) prop[k].push_back(p + tau_h * clusters[k].velocity);
    }

    // clearance-aware projections and tangent candidates for the imminent cluster
    const auto& icl = clusters[imminent];
    const auto& ipts = prop[imminent];
    std::size_t min_prop = 0;
    for (std::size_t i = 1; i < ipts.size(); ++i)
        if ((ipts[i] - input.p_d).norm() < (ipts[min_prop] - input.p_d).norm()) min_prop = i;
    out.projections.reserve(ipts.size());
    for (const auto& q : ipts)
        out.projections.push_back(
            project_point(input.p_d, input.course_dir, q, ipts[min_prop], limits.r_c));
    out.tangents = tangent_candidates(
        input.p_d, out.projections[static_cast<std::size_t>(icl.e1)].p_star,
        out.projections[static_cast<std::size_t>(icl.e2)].p_star,
        out.projections[min_prop].p_star, (ipts[min_prop] - input.p_d).norm(), limits.r_c);

    // 0.5-degree ray sweep for the feasible set. The commanded turn is not
    // instantaneous: the vehicle advances along the current course for about
    // half the transition before the new ray is established, so the ray must
    // clear from that advanced origin as well.
    const double step = 2.0 * kPi / kSweepSteps;
    std::vector<bool> ok(kSweepSteps, false);
    bool any = false;
    for (int j = 0; j < kSweepSteps; ++j) {
        const double dphi = -kPi + (j + 0.5) * step;
        const Vec2 dir = rotate(input.course_dir, dphi);
        const double advance =
            input.v_now * 0.5 * limits.tau_f_min_heading(dphi, std::max(input.v_now, 0.1));
        const Vec2 origin2 = input.p_d + advance * input.course_dir;
        bool clear = true;
        for (std::size_t k = 0; k < clusters.size() && clear; ++k)
            for (const auto& q : prop[k]) {
                if (!ray_clears(dir, q - input.p_d, limits.r_c) ||
                    !ray_clears(dir, q - origin2, limits.r_c)) {
                    clear = false;
                    break;
                }
            }
        ok[static_cast<std::size_t>(j)] = clear;
        any = any || clear;
    }
    if (!any) throw NoFeasibleCourseError();

    for (int j = 0; j < kSweepSteps;) {
        if (!ok[static_cast<std::size_t>(j)]) {
            ++j;
            continue;
        }
        int end = j;
        while (end < kSweepSteps && ok[static_cast<std::size_t>(end)]) ++end;
        out.feasible_set.push_back({-kPi + j * step, -kPi + end * step});
        j = end;
    }

    // pick the feasible course change minimizing estimated time to goal;
    // the cost heuristic prices the traverse against every sensed cluster on
    // a decimated point set (the feasibility sweep above used every point)
    std::vector<Vec2> cost_pts;
    {
        std::size_t total = 0;
        for (const auto& pts : prop) total += pts.size();
        const std::size_t stride = std::max<std::size_t>(1, total / 96);
        for (const auto& pts : prop)
            for (std::size_t i = 0; i < pts.size(); i += stride) cost_pts.push_back(pts[i]);
        cost_pts.push_back(ipts[static_cast<std::size_t>(icl.e1)]);
        cost_pts.push_back(ipts[static_cast<std::size_t>(icl.e2)]);
        cost_pts.push_back(ipts[min_prop]);
    }
    const double s_max = 2.0 * limits.r_s;
    double best_cost = std::numeric_limits<double>::infinity();
    double best_dphi = 0.0;
    bool have_best = false;
    for (int j = 0; j < kSweepSteps; ++j) {
        if (!ok[static_cast<std::size_t>(j)]) continue;
        const double dphi = -kPi + (j + 0.5) * step;
        const Vec2 dir = rotate(input.course_dir, dphi);
        const double cost =
            traverse_cost(input.p_d, dir, input.goal, cost_pts, limits.r_c, s_max);
        const bool better =
            !have_best || cost < best_cost - 1e-9 ||
            (std::abs(cost - best_cost) <= 1e-9 &&
             (std::abs(dphi) < std::abs(best_dphi) - 1e-12 ||
              (std::abs(std::abs(dphi) - std::abs(best_dphi)) <= 1e-12 && dphi > best_dphi)));
        if (better) {
            best_cost = cost;
            best_dphi = dphi;
            have_best = true;
        }
    }
    out.delta_phi = best_dphi;
    out.est_cost = best_cost;
    out.z_k = best_dphi >= 0.0 ? CircumnavDirection::CCW : CircumnavDirection::CW;
    return out;
}

// ---------------------------------------------------------------------------
// sigmoid fitting and appending
// ---------------------------------------------------------------------------

SigmoidSegment fit_sigmoid(double x_prev, double x_new, double tau_f, SigmoidKind kind,
                           const PlannerLimits& limits) {
    const double dx = x_new - x_prev;
    const double tau_min = kind == SigmoidKind::Heading
                               ? limits.tau_f_min_heading(dx, limits.v_c)
                               : limits.tau_f_min_speed(dx);
    if (tau_f < tau_min - 1e-9)
        throw TooShortError("sigmoid timespan " + std::to_string(tau_f) + " below minimum " +
                            std::to_string(tau_min));
    SigmoidSegment seg;
    seg.kind = kind;
    seg.c3 = sigmoid_c3();
    seg.c2 = 2.0 * seg.c3 / tau_f;
    seg.c1 = dx / (2.0 * (1.0 - kEpsS));
    seg.c4 = 0.5 * (x_new + x_prev);
    seg.tau_f = tau_f;
    return seg;
}

void append_transition(PlanarTrajectory& traj, SigmoidSegment segment, double t_now,
                       const PlannerLimits& limits) {
    if (segment.t0 < t_now) segment.t0 = t_now;
    const double a_max = limits.a_max();
    const double tol = a_max * 1e-12 + 1e-9;
    if (a_max <= 0.0) {
        // no maneuvering authority in this frame; callers gate planning on
        // a_max > 0, so there is no budget to re-check against
        traj.add_segment(segment);
        return;
    }

    const auto feasible = [&](const SigmoidSegment& s) {
        const double w0 = std::min(t_now, s.t0);
        const double w1 =
            std::max(traj.last_transition_end_after(w0), s.t0 + s.tau_f) + 0.5 * s.tau_f;
        const double step = std::max(1e-3, (w1 - w0) / 20000.0);
        const double peak = combined_peak_accel(traj.heading(), traj.speed(), &s, w0, w1, step);
        return peak <= a_max + tol;
    };

    if (feasible(segment)) {
        traj.add_segment(segment);
        return;
    }

    // delay the start until clear of the committed transitions
    const double t_clear =
        std::max(traj.last_transition_end_after(t_now) + 0.5 * segment.tau_f, segment.t0);
    if (t_clear > segment.t0) {
        SigmoidSegment delayed = segment;
        delayed.t0 = t_clear;
        if (feasible(delayed)) {
            double lo = segment.t0, hi = t_clear;
            for (int i = 0; i < 40; ++i) {
                const double mid = 0.5 * (lo + hi);
                SigmoidSegment m = segment;
                m.t0 = mid;
                if (feasible(m)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            segment.t0 = hi;
            traj.add_segment(segment);
            return;
        }
        segment.t0 = t_clear;
    }

    // stretch the timespan; peak rate falls as 1/tau_f so this always resolves
    const auto stretched = [&](double s) {
        SigmoidSegment x = segment;
        x.tau_f = segment.tau_f * s;
        x.c2 = 2.0 * x.c3 / x.tau_f;
        return x;
    };
    double s_hi = 2.0;
    while (!feasible(stretched(s_hi)) && s_hi < 4096.0) s_hi *= 2.0;
    double s_lo = s_hi / 2.0;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (feasible(stretched(mid))) {
            s_hi = mid;
        } else {
            s_lo = mid;
        }
    }
    traj.add_segment(stretched(s_hi));
}

TrajectorySample sample_trajectory(const PlanarTrajectory& traj, double t) {
    return traj.sample(t);
}

}  // namespace driftsim::traj

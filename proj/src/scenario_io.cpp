#include "driftsim/scenario_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace driftsim::sim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required field");
    return *it;
}

double num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_or(const json& j, const char* key, double fallback, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return num(j[key], path + "." + key);
}

bool flag_or(const json& j, const char* key, bool fallback, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
    return j[key].get<bool>();
}

Vec2 vec2(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [x, y]");
    return {num(j[0], path + "[0]"), num(j[1], path + "[1]")};
}

Vec3 vec3(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
    return {num(j[0], path + "[0]"), num(j[1], path + "[1]"), num(j[2], path + "[2]")};
}

wind::WindField parse_wind(const json& j, std::uint64_t seed, const std::string& path) {
    Vec2 mean = Vec2::Zero();
    std::optional<wind::TurbulenceParams> turbulence;
    std::vector<wind::GustEvent> gusts;
    std::vector<wind::MaskRect> masks;
    if (j.is_null()) return wind::WindField::create(mean, turbulence, gusts, masks);
    if (!j.is_object()) fail(path, "expected an object");

    if (j.contains("mean")) mean = vec2(j["mean"], path + ".mean");
    if (j.contains("turbulence") && !j["turbulence"].is_null()) {
        const json& t = j["turbulence"];
        const std::string tp = path + ".turbulence";
        wind::TurbulenceParams p;
        p.sigma = num_or(t, "sigma", 1.0, tp);
        p.L = num_or(t, "L", 50.0, tp);
        p.grid_size = static_cast<int>(num_or(t, "grid_size", 256, tp));
        p.cell = num_or(t, "cell", 2.0, tp);
        p.spreading_exponent = num_or(t, "spreading_exponent", 2.0, tp);
        p.seed = seed;
        if (p.sigma < 0.0) fail(tp + ".sigma", "must be nonnegative");
        if (p.L <= 0.0) fail(tp + ".L", "must be positive");
        if (p.cell <= 0.0) fail(tp + ".cell", "must be positive");
        turbulence = p;
    }
    if (j.contains("gusts")) {
        const json& arr = j["gusts"];
        if (!arr.is_array()) fail(path + ".gusts", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string gp = path + ".gusts[" + std::to_string(i) + "]";
            const json& g = arr[i];
            wind::GustEvent e;
            e.amplitude = num(member(g, "amplitude", gp), gp + ".amplitude");
            e.direction = vec2(member(g, "direction", gp), gp + ".direction");
            const double n = e.direction.norm();
            if (n < 1e-9) fail(gp + ".direction", "must be nonzero");
            e.direction /= n;
            e.t_start = num(member(g, "t_start", gp), gp + ".t_start");
            e.duration = num(member(g, "duration", gp), gp + ".duration");
            if (e.duration <= 0.0) fail(gp + ".duration", "must be positive");
            if (e.amplitude < 0.0) fail(gp + ".amplitude", "must be nonnegative");
            if (g.contains("origin")) e.origin = vec2(g["origin"], gp + ".origin");
            e.propagation_speed = num_or(g, "propagation_speed", 0.0, gp);
            e.front_width = num_or(g, "front_width", 0.0, gp);
            gusts.push_back(e);
        }
    }
    if (j.contains("mask_regions")) {
        const json& arr = j["mask_regions"];
        if (!arr.is_array()) fail(path + ".mask_regions", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string mp = path + ".mask_regions[" + std::to_string(i) + "]";
            wind::MaskRect m;
            m.min = vec2(member(arr[i], "min", mp), mp + ".min");
            m.max = vec2(member(arr[i], "max", mp), mp + ".max");
            if (m.min.x() > m.max.x() || m.min.y() > m.max.y())
                fail(mp, "min must be componentwise <= max");
            masks.push_back(m);
        }
    }
    return wind::WindField::create(mean, turbulence, gusts, masks);
}

Obstacle parse_obstacle(const json& j, const std::string& path) {
    Obstacle o;
    const auto type = member(j, "type", path);
    if (!type.is_string()) fail(path + ".type", "expected \"disc\" or \"polygon\"");
    const std::string kind = type.get<std::string>();
    if (j.contains("velocity")) o.velocity = vec2(j["velocity"], path + ".velocity");
    if (kind == "disc") {
        o.kind = Obstacle::Kind::Disc;
        o.center = vec2(member(j, "center", path), path + ".center");
        o.radius = num(member(j, "radius", path), path + ".radius");
        if (o.radius <= 0.0) fail(path + ".radius", "must be positive");
    } else if (kind == "polygon") {
        o.kind = Obstacle::Kind::Polygon;
        const json& verts = member(j, "vertices", path);
        if (!verts.is_array() || verts.size() < 3)
            fail(path + ".vertices", "expected at least 3 [x, y] pairs");
        for (std::size_t i = 0; i < verts.size(); ++i)
            o.vertices.push_back(vec2(verts[i], path + ".vertices[" + std::to_string(i) + "]"));
    } else {
        fail(path + ".type", "unknown obstacle type '" + kind + "'");
    }
    return o;
}

VehicleSpec parse_vehicle(const json& j, const std::string& path) {
    VehicleSpec v;
    v.params.id = static_cast<std::uint32_t>(num(member(j, "id", path), path + ".id"));
    v.params.m = num_or(j, "mass", 0.54, path);
    v.params.f_max = num_or(j, "f_max", 15.0, path);
    v.params.thrust_derate = num_or(j, "thrust_derate", 1.0, path);
    v.params.C_d = num_or(j, "C_d", 0.41, path);
    if (j.contains("A")) v.params.A = vec3(j["A"], path + ".A");
    if (j.contains("inertia_diag"))
        v.params.J = Vec3(vec3(j["inertia_diag"], path + ".inertia_diag")).asDiagonal();
    v.params.r_cv = num_or(j, "r_cv", 0.5, path);
    v.params.v_w_op = num_or(j, "v_w_op", 12.0, path);
    v.params.r_min = num_or(j, "r_min", 0.09, path);
    v.r_s = num_or(j, "r_s", 12.5, path);
    v.start = vec3(member(j, "start", path), path + ".start");
    v.goal = vec2(member(j, "goal", path), path + ".goal");
    v.yaw0 = num_or(j, "yaw0", 0.0, path);
    v.drift_enabled = flag_or(j, "drift_enabled", true, path);
    v.goal_speed_gain = num_or(j, "goal_speed_gain", 0.5, path);

    if (j.contains("gains")) {
        const json& g = j["gains"];
        const std::string gp = path + ".gains";
        v.gains.alpha1 = num_or(g, "alpha1", v.gains.alpha1, gp);
        v.gains.alpha2 = num_or(g, "alpha2", v.gains.alpha2, gp);
        v.gains.k_s = num_or(g, "k_s", v.gains.k_s, gp);
        v.gains.beta = num_or(g, "beta", v.gains.beta, gp);
        v.gains.k_p = num_or(g, "k_p", v.gains.k_p, gp);
        v.gains.k_i = num_or(g, "k_i", v.gains.k_i, gp);
        v.gains.k_d = num_or(g, "k_d", v.gains.k_d, gp);
        v.gains.tilt_limit = deg2rad(num_or(g, "tilt_limit_deg", 60.0, gp));
        if (v.gains.k_s <= 0.0) fail(gp + ".k_s", "stability requires k_s > 0");
        if (v.gains.alpha2 <= 0.5) fail(gp + ".alpha2", "stability requires alpha2 > 1/2");
    }
    if (j.contains("drift")) {
        const json& d = j["drift"];
        const std::string dp = path + ".drift";
        v.drift_cfg.r_ce_min = num_or(d, "r_ce_min", v.drift_cfg.r_ce_min, dp);
        v.drift_cfg.r_ce_max = num_or(d, "r_ce_max", v.drift_cfg.r_ce_max, dp);
        v.drift_cfg.eta = num_or(d, "eta", v.drift_cfg.eta, dp);
        v.drift_cfg.t_hold = num_or(d, "t_hold", v.drift_cfg.t_hold, dp);
        v.drift_cfg.window = num_or(d, "window", v.drift_cfg.window, dp);
        v.drift_cfg.tau_filter = num_or(d, "tau_filter", v.drift_cfg.tau_filter, dp);
        v.drift_cfg.d_min = num_or(d, "d_min", v.drift_cfg.d_min, dp);
        v.drift_cfg.authority_margin =
            num_or(d, "authority_margin", v.drift_cfg.authority_margin, dp);
    }
    if (j.contains("cluster")) {
        const json& c = j["cluster"];
        const std::string cp = path + ".cluster";
        v.cluster_cfg.delta_range = num_or(c, "delta_range", v.cluster_cfg.delta_range, cp);
        v.cluster_cfg.delta_bearing =
            deg2rad(num_or(c, "delta_bearing_deg", 5.0, cp));
        v.cluster_cfg.match_gate = num_or(c, "match_gate", v.cluster_cfg.match_gate, cp);
    }
    return v;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text,
                        std::optional<std::uint64_t> seed_override) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }

    Scenario sc;
    if (j.contains("name")) {
        if (!j["name"].is_string()) fail("name", "expected a string");
        sc.name = j["name"].get<std::string>();
    }
    const json sim_block = j.contains("sim") ? j["sim"] : json::object();
    sc.dT_s = num_or(sim_block, "dT_s", 1.0, "sim");
    sc.dT_c = num_or(sim_block, "dT_c", 0.1, "sim");
    sc.t_end = num_or(sim_block, "t_end", 60.0, "sim");
    sc.seed = static_cast<std::uint64_t>(num_or(sim_block, "seed", 0.0, "sim"));
    if (seed_override) sc.seed = *seed_override;

    if (j.contains("obstacles")) {
        const json& arr = j["obstacles"];
        if (!arr.is_array()) fail("obstacles", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i)
            sc.obstacles.push_back(
                parse_obstacle(arr[i], "obstacles[" + std::to_string(i) + "]"));
    }

    const json& vehicles = member(j, "vehicles", "(root)");
    if (!vehicles.is_array() || vehicles.empty()) fail("vehicles", "expected a nonempty array");
    for (std::size_t i = 0; i < vehicles.size(); ++i)
        sc.vehicles.push_back(parse_vehicle(vehicles[i], "vehicles[" + std::to_string(i) + "]"));

    sc.wind = parse_wind(j.contains("wind") ? j["wind"] : json(), sc.seed, "wind");
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), seed_override);
}

}  // namespace driftsim::sim

#include "hdsf/drone.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hdsf/error.hpp"

namespace hdsf::drone {

namespace {

using nlohmann::json;

enum Idx : std::size_t { X, Y, ALT, VX, VY, VZ, IX, IY, IZ, BAT, DEP, FULL_DIM };

const std::vector<std::string> kFullSignals{"x",  "y",  "altitude", "vx",      "vy",           "vz",
                                            "ix", "iy", "iz",       "battery", "deployed_flag"};
const std::vector<std::string> kSurrogateSignals{"battery", "altitude", "deployed_flag"};

// Integrators only accumulate close to the setpoint so a long leg does not wind them up.
constexpr double kHorizontalWindow = 20.0;
constexpr double kVerticalWindow = 5.0;

double sat(double v, double limit) { return std::clamp(v, -limit, limit); }

double drain(double battery, double rate) { return battery > 0.0 ? -rate : 0.0; }

Guard emergency_guard(const DroneParams&, ControllerVariant variant) {
    Guard g;
    g.label = "emergency_deploy";
    g.reads = variant == ControllerVariant::Buggy ? SignalSet{"battery", "altitude"} : SignalSet{"battery"};
    g.parameters = {kLowBattThreshold, kMinDeployAlt, kMaxDeployAlt};
    return g;
}

} // namespace

void DroneParams::validate() const {
    auto fail = [](const std::string& m) { throw ConfigurationError("drone parameters: " + m); };
    if (!(min_deploy_alt < max_deploy_alt)) {
        fail("min_deploy_alt must be below max_deploy_alt");
    }
    if (!(cruise_drain >= 0.0) || !(hover_drain >= 0.0)) {
        fail("battery drains must be non-negative");
    }
    if (!(descent_rate > 0.0)) {
        fail("descent_rate must be positive");
    }
    if (!(dt > 0.0) || !(horizon >= 0.0) || !(physics_rate_hz > 0.0)) {
        fail("dt, horizon and physics rate must be positive");
    }
    if (!(delta >= 0.0) || !(max_accel > 0.0) || !(drag >= 0.0) || !(land_speed > 0.0)) {
        fail("delta, max_accel, drag and land_speed out of range");
    }
}

DroneParams params_from_json_text(const std::string& text) {
    DroneParams p;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("scenario file: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigurationError("scenario file must hold a JSON object");
    }
    const std::map<std::string, double*> scalars{
        {"min_deploy_alt", &p.min_deploy_alt},
        {"max_deploy_alt", &p.max_deploy_alt},
        {"low_batt_threshold", &p.low_batt_threshold},
        {"delta", &p.delta},
        {"cruise_drain", &p.cruise_drain},
        {"hover_drain", &p.hover_drain},
        {"descent_rate", &p.descent_rate},
        {"max_accel", &p.max_accel},
        {"drag", &p.drag},
        {"land_speed", &p.land_speed},
        {"airborne_min_altitude", &p.airborne_min_altitude},
        {"dt", &p.dt},
        {"horizon", &p.horizon},
        {"physics_rate_hz", &p.physics_rate_hz},
    };
    try {
        for (const auto& [key, value] : j.items()) {
            if (const auto it = scalars.find(key); it != scalars.end()) {
                *it->second = value.get<double>();
            } else if (key == "waypoint") {
                p.waypoint = value.get<std::array<double, 3>>();
            } else if (key == "pid_gains") {
                const auto rows = value.get<std::vector<std::array<double, 3>>>();
                if (rows.size() != 3) {
                    throw ConfigurationError("pid_gains needs one [kp, ki, kd] triple per axis");
                }
                for (std::size_t a = 0; a < 3; ++a) {
                    p.pid[a] = {rows[a][0], rows[a][1], rows[a][2]};
                }
            } else {
                throw ConfigurationError("unknown scenario field '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("scenario file: ") + e.what());
    }
    p.validate();
    return p;
}

DroneParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError("cannot open scenario file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return params_from_json_text(ss.str());
}

std::string to_json_text(const DroneParams& p) {
    json j;
    j["min_deploy_alt"] = p.min_deploy_alt;
    j["max_deploy_alt"] = p.max_deploy_alt;
    j["low_batt_threshold"] = p.low_batt_threshold;
    j["delta"] = p.delta;
    j["cruise_drain"] = p.cruise_drain;
    j["hover_drain"] = p.hover_drain;
    j["descent_rate"] = p.descent_rate;
    j["waypoint"] = p.waypoint;
    j["pid_gains"] = json::array();
    for (const auto& g : p.pid) {
        j["pid_gains"].push_back({g.kp, g.ki, g.kd});
    }
    j["max_accel"] = p.max_accel;
    j["drag"] = p.drag;
    j["land_speed"] = p.land_speed;
    j["airborne_min_altitude"] = p.airborne_min_altitude;
    j["dt"] = p.dt;
    j["horizon"] = p.horizon;
    j["physics_rate_hz"] = p.physics_rate_hz;
    return j.dump(2);
}

ControllerVariant variant_from_string(const std::string& name) {
    if (name == "buggy") {
        return ControllerVariant::Buggy;
    }
    if (name == "patched") {
        return ControllerVariant::Patched;
    }
    throw ConfigurationError("unknown controller variant '" + name + "' (expected buggy or patched)");
}

std::string to_string(ControllerVariant v) { return v == ControllerVariant::Buggy ? "buggy" : "patched"; }

bool emergency_deploy_decision(ControllerVariant variant, double battery, double altitude, double threshold,
                               double min_alt, double max_alt) {
    if (!(battery <= threshold)) {
        return false;
    }
    if (variant == ControllerVariant::Patched) {
        return true;
    }
    return altitude >= min_alt && altitude <= max_alt;
}

bool emergency_deploy_decision(ControllerVariant variant, double battery, double altitude, const DroneParams& p) {
    return emergency_deploy_decision(variant, battery, altitude, p.low_batt_threshold, p.min_deploy_alt,
                                     p.max_deploy_alt);
}

Configuration make_configuration(const DroneParams& p, double battery, double altitude) {
    return Configuration{{kBatteryInit, battery},
                         {kAltitudeInit, altitude},
                         {kMinDeployAlt, p.min_deploy_alt},
                         {kMaxDeployAlt, p.max_deploy_alt},
                         {kLowBattThreshold, p.low_batt_threshold},
                         {kDelta, p.delta}};
}

ConfigSpace default_space(std::uint64_t seed) {
    ConfigSpace s;
    s.bounds = {{kBatteryInit, 0.0, 100.0},  {kAltitudeInit, 0.0, 150.0},    {kMinDeployAlt, 40.0, 70.0},
                {kMaxDeployAlt, 70.0, 100.0}, {kLowBattThreshold, 5.0, 30.0}, {kDelta, 1.0, 5.0}};
    s.ordering = {{kMinDeployAlt, kMaxDeployAlt}};
    s.rng_seed = seed;
    return s;
}

stl::Formula property(const DroneParams& params) { return stl::builtin_phi_parametric(params.airborne_min_altitude); }

HybridSystem build_full_system(const DroneParams& params, ControllerVariant variant) {
    params.validate();
    const DroneParams p = params;

    Guard deploy = emergency_guard(p, variant);
    deploy.predicate = [variant](std::span<const double> x, const Configuration& mu) {
        return emergency_deploy_decision(variant, x[BAT], x[ALT], mu.at(kLowBattThreshold), mu.at(kMinDeployAlt),
                                         mu.at(kMaxDeployAlt));
    };
    Transition to_parachute;
    to_parachute.target = "PARACHUTE";
    to_parachute.writes = {"vx", "vy", "vz", "deployed_flag"};
    to_parachute.reset = [rate = p.descent_rate](std::span<double> x, const Configuration&) {
        x[VX] = 0.0;
        x[VY] = 0.0;
        x[VZ] = -rate;
        x[DEP] = 1.0;
    };

    Mode idle;
    idle.name = "IDLE";
    idle.dynamics = ContinuousDynamics::zero(kFullSignals);
    {
        Guard g;
        g.label = "mission_start";
        g.reads = {"x", "y"};
        g.parameters = {kMissionStart};
        g.predicate = [w = p.waypoint](std::span<const double> x, const Configuration& mu) {
            return mu.get_or(kMissionStart, 0.0) >= 0.5 && std::hypot(x[X] - w[0], x[Y] - w[1]) > 1.0;
        };
        idle.guards.push_back(g);
        idle.transitions["mission_start"] = Transition{"TAKE_OFF", {}, {}, {}, {}};
    }

    Mode takeoff;
    takeoff.name = "TAKE_OFF";
    takeoff.dynamics.signal_names = kFullSignals;
    takeoff.dynamics.dependencies = {{"altitude", {"vz"}},
                                     {"vz", {"altitude", "vz", "iz"}},
                                     {"iz", {"altitude"}},
                                     {"battery", {"battery"}}};
    takeoff.dynamics.field = [p](std::span<const double> x, const Configuration&, std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        const PidGains& g = p.pid[2];
        const double e = p.waypoint[2] - x[ALT];
        dx[ALT] = x[VZ];
        dx[VZ] = sat(g.kp * e + g.ki * x[IZ] - g.kd * x[VZ], p.max_accel) - p.drag * x[VZ] * std::abs(x[VZ]);
        dx[IZ] = std::abs(e) < kVerticalWindow ? e : 0.0;
        dx[BAT] = drain(x[BAT], p.cruise_drain);
    };
    {
        Guard g;
        g.label = "altitude_reached";
        g.reads = {"altitude", "vz"};
        g.predicate = [z = p.waypoint[2]](std::span<const double> x, const Configuration&) {
            return std::abs(x[ALT] - z) < 0.5 && std::abs(x[VZ]) < 0.3;
        };
        takeoff.guards.push_back(g);
        takeoff.transitions["altitude_reached"] =
            Transition{"GOTO", {}, {"vz", "iz"}, {}, [](std::span<double> x, const Configuration&) {
                           x[VZ] = 0.0;
                           x[IZ] = 0.0;
                       }};
    }

    Mode go;
    go.name = "GOTO";
    go.dynamics.signal_names = kFullSignals;
    go.dynamics.dependencies = {{"x", {"vx"}},           {"y", {"vy"}},
                                {"vx", {"x", "vx", "vy", "ix"}}, {"vy", {"y", "vx", "vy", "iy"}},
                                {"ix", {"x"}},           {"iy", {"y"}},
                                {"battery", {"battery"}}};
    go.dynamics.field = [p](std::span<const double> x, const Configuration&, std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        const double ex = p.waypoint[0] - x[X];
        const double ey = p.waypoint[1] - x[Y];
        const double speed = std::hypot(x[VX], x[VY]);
        dx[X] = x[VX];
        dx[Y] = x[VY];
        dx[VX] = sat(p.pid[0].kp * ex + p.pid[0].ki * x[IX] - p.pid[0].kd * x[VX], p.max_accel) -
                 p.drag * x[VX] * speed;
        dx[VY] = sat(p.pid[1].kp * ey + p.pid[1].ki * x[IY] - p.pid[1].kd * x[VY], p.max_accel) -
                 p.drag * x[VY] * speed;
        dx[IX] = std::abs(ex) < kHorizontalWindow ? ex : 0.0;
        dx[IY] = std::abs(ey) < kHorizontalWindow ? ey : 0.0;
        dx[BAT] = drain(x[BAT], p.cruise_drain);
    };
    go.guards.push_back(deploy);
    go.transitions["emergency_deploy"] = to_parachute;
    {
        Guard g;
        g.label = "waypoint_reached";
        g.reads = {"x", "y", "vx", "vy"};
        g.predicate = [w = p.waypoint](std::span<const double> x, const Configuration&) {
            return std::hypot(x[X] - w[0], x[Y] - w[1]) < 1.0 && std::hypot(x[VX], x[VY]) < 0.5;
        };
        go.guards.push_back(g);
        go.transitions["waypoint_reached"] =
            Transition{"LAND", {}, {"ix", "iy"}, {}, [](std::span<double> x, const Configuration&) {
                           x[IX] = 0.0;
                           x[IY] = 0.0;
                       }};
    }

    Mode land;
    land.name = "LAND";
    land.dynamics.signal_names = kFullSignals;
    land.dynamics.dependencies = {{"altitude", {"vz"}}, {"vz", {"altitude", "vz"}}, {"battery", {"battery"}}};
    land.dynamics.field = [p](std::span<const double> x, const Configuration&, std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        // slow down over the last few metres
        const double command = -p.land_speed * std::clamp(x[ALT] / 5.0, 0.2, 1.0);
        dx[ALT] = x[VZ];
        dx[VZ] = sat(2.0 * (command - x[VZ]), p.max_accel);
        dx[BAT] = drain(x[BAT], p.hover_drain);
    };
    land.guards.push_back(deploy);
    land.transitions["emergency_deploy"] = to_parachute;
    {
        Guard g;
        g.label = "touchdown";
        g.reads = {"altitude"};
        g.predicate = [](std::span<const double> x, const Configuration&) { return x[ALT] <= 0.05; };
        land.guards.push_back(g);
        land.transitions["touchdown"] =
            Transition{"IDLE", {}, {"altitude", "vz"}, {}, [](std::span<double> x, const Configuration&) {
                           x[ALT] = 0.0;
                           x[VZ] = 0.0;
                       }};
    }

    Mode chute;
    chute.name = "PARACHUTE";
    chute.terminal = true;
    chute.dynamics.signal_names = kFullSignals;
    chute.dynamics.dependencies = {{"altitude", {"altitude"}}};
    chute.dynamics.field = [rate = p.descent_rate](std::span<const double> x, const Configuration&,
                                                   std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
        dx[ALT] = x[ALT] > 0.0 ? -rate : 0.0;
    };

    ConfigSpace space = default_space();
    space.bounds.push_back({kMissionStart, 0.0, 1.0});
    return HybridSystem(kFullSignals, {idle, takeoff, go, land, chute}, "IDLE", space,
                        {{"battery", kBatteryInit}, {"altitude", kAltitudeInit}});
}

LinearSystem block_physical_model(const DroneParams& p, const std::string& mode) {
    double battery_rate = 0.0;
    double altitude_rate = 0.0;
    if (mode == "GOTO") {
        battery_rate = -p.cruise_drain;
    } else if (mode == "PARACHUTE") {
        altitude_rate = -p.descent_rate;
    } else {
        throw ConfigurationError("no block model for mode '" + mode + "'");
    }
    // Motor heating and ESC load track the electrical draw and the vertical work.
    const double thermal = 0.5 * -battery_rate;
    const double esc = 0.2 * -battery_rate + 0.1 * std::abs(altitude_rate);

    LinearSystem sys;
    sys.K.resize(4, 4);
    // clang-format off
    sys.K << 1.0,  0.0,  0.05, 0.03,
             0.0,  1.0,  0.0,  0.02,
             0.05, 0.0,  1.0,  0.01,
             0.03, 0.02, 0.01, 1.0;
    // clang-format on
    Eigen::Vector4d target(battery_rate, altitude_rate, thermal, esc);
    sys.F = sys.K * target;
    return sys;
}

ContinuousDynamics condensed_drone_descent(const DroneParams& params, const std::string& mode) {
    params.validate();
    const LinearSystem block = block_physical_model(params, mode);
    const CondensedSystem cs = condense(block, Partition::with_interface({0, 1}, 4));
    const Eigen::VectorXd rates = solve_condensed(cs);

    // Round-off from the elimination must not turn a zero rate into a declared write.
    const double scale = 1.0 + block.F.cwiseAbs().maxCoeff();
    auto flush = [scale](double r) { return std::abs(r) <= 1e-12 * scale ? 0.0 : r; };
    const double battery_rate = flush(rates(0));
    const double altitude_rate = flush(rates(1));

    ContinuousDynamics d;
    d.signal_names = kSurrogateSignals;
    if (battery_rate != 0.0) {
        d.dependencies["battery"] = {"battery"};
    }
    if (altitude_rate != 0.0) {
        d.dependencies["altitude"] = {"altitude"};
    }
    d.field = [battery_rate, altitude_rate](std::span<const double> x, const Configuration&, std::span<double> dx) {
        dx[0] = x[0] > 0.0 ? battery_rate : 0.0;
        dx[1] = x[1] > 0.0 ? altitude_rate : 0.0;
        dx[2] = 0.0;
    };
    return d;
}

ReducedSystem build_surrogate_system(const DroneParams& params, ControllerVariant variant) {
    params.validate();

    Guard deploy = emergency_guard(params, variant);
    deploy.predicate = [variant](std::span<const double> x, const Configuration& mu) {
        return emergency_deploy_decision(variant, x[0], x[1], mu.at(kLowBattThreshold), mu.at(kMinDeployAlt),
                                         mu.at(kMaxDeployAlt));
    };

    Mode go;
    go.name = "GOTO";
    go.dynamics = condensed_drone_descent(params, "GOTO");
    go.guards.push_back(deploy);
    go.transitions["emergency_deploy"] =
        Transition{"PARACHUTE", {}, {"deployed_flag"}, {}, [](std::span<double> x, const Configuration&) {
                       x[2] = 1.0;
                   }};

    Mode chute;
    chute.name = "PARACHUTE";
    chute.terminal = true;
    chute.dynamics = condensed_drone_descent(params, "PARACHUTE");

    const ConfigSpace space = default_space();
    ReducedSystem rs{HybridSystem(kSurrogateSignals, {go, chute}, "GOTO", space,
                                  {{"battery", kBatteryInit}, {"altitude", kAltitudeInit}}),
                     {},
                     space};

    // The audit report is the one the analysis produces on the full model.
    const HybridSystem full = build_full_system(params, variant);
    const ReductionOptions from_goto{"GOTO"};
    rs.report = relevant_modes(full, relevant_signals(property(params), full, from_goto), from_goto);
    return rs;
}

TrialOutcome run_full_trial(const HybridSystem& full, const DroneParams& params, const Configuration& config,
                            double horizon) {
    return run_trial(full, config, property(params), 1.0 / params.physics_rate_hz, horizon, "GOTO",
                     kSurrogateSignals);
}

ConformanceReport conformance_check(const DroneParams& params, ControllerVariant variant,
                                    const std::vector<Configuration>& configs, double dt, double horizon) {
    DroneParams full_params = params;
    full_params.physics_rate_hz = std::max(params.physics_rate_hz, 1.0 / dt);
    const HybridSystem full = build_full_system(full_params, variant);
    const ReducedSystem surrogate = build_surrogate_system(params, variant);
    const stl::Formula phi = property(params);

    ConformanceReport report;
    for (const auto& c : configs) {
        ConformanceEntry e;
        e.config = c;
        try {
            e.full = run_full_trial(full, full_params, c, horizon).verdict;
            e.surrogate = run_trial(surrogate, c, phi, dt, horizon).verdict;
        } catch (const TrialFault& f) {
            e.fault = f.what();
        }
        if (e.fault.empty()) {
            ++report.compared;
            if (e.agrees()) {
                ++report.agreed;
            }
        } else {
            ++report.faults;
        }
        report.entries.push_back(std::move(e));
    }
    return report;
}

TimingReport timing_comparison(const TrialRunner& reference, const TrialRunner& candidate,
                               const std::vector<Configuration>& configs) {
    using clock = std::chrono::steady_clock;
    TimingReport r;
    if (configs.empty()) {
        return r;
    }
    reference(configs.front()); // warm caches and allocators
    candidate(configs.front());
    double full_total = 0.0;
    double surrogate_total = 0.0;
    for (const auto& c : configs) {
        auto t0 = clock::now();
        reference(c);
        auto t1 = clock::now();
        candidate(c);
        auto t2 = clock::now();
        const double s = std::chrono::duration<double>(t2 - t1).count();
        full_total += std::chrono::duration<double>(t1 - t0).count();
        surrogate_total += s;
        r.max_surrogate_seconds = std::max(r.max_surrogate_seconds, s);
    }
    const auto n = static_cast<double>(configs.size());
    r.mean_full_seconds = full_total / n;
    r.mean_surrogate_seconds = surrogate_total / n;
    r.speedup = r.mean_surrogate_seconds > 0.0 ? r.mean_full_seconds / r.mean_surrogate_seconds : 0.0;
    return r;
}

TimingReport timing_comparison(const DroneParams& params, ControllerVariant variant,
                               const std::vector<Configuration>& configs, double dt, double horizon) {
    if (configs.size() < 10) {
        throw ConfigurationError("timing comparison needs at least 10 configurations");
    }
    DroneParams full_params = params;
    full_params.physics_rate_hz = std::max(params.physics_rate_hz, 1.0 / dt);
    const HybridSystem full = build_full_system(full_params, variant);
    const ReducedSystem surrogate = build_surrogate_system(params, variant);
    const stl::Formula phi = property(params);
    return timing_comparison([&](const Configuration& c) { run_full_trial(full, full_params, c, horizon); },
                             [&](const Configuration& c) { run_trial(surrogate, c, phi, dt, horizon); }, configs);
}

} // namespace hdsf::drone

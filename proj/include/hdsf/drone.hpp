#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hdsf/condensation.hpp"
#include "hdsf/config.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/hybrid.hpp"
#include "hdsf/reduction.hpp"
#include "hdsf/stl.hpp"

// Parachute-deployment scenario: a five-mode quadrotor mission with an emergency
// controller, and the two-mode surrogate used for fuzzing it.
namespace hdsf::drone {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

struct DroneParams {
    double min_deploy_alt = 60.0;     // m
    double max_deploy_alt = 80.0;     // m
    double low_batt_threshold = 10.0; // %
    double delta = 2.0;               // s, deployment deadline
    double cruise_drain = 0.8;        // %/s in TAKE_OFF and GOTO
    double hover_drain = 0.4;         // %/s in LAND
    double descent_rate = 3.0;        // m/s under canopy
    std::array<double, 3> waypoint{1500.0, 0.0, 70.0};
    std::array<PidGains, 3> pid{PidGains{0.8, 0.01, 1.2}, PidGains{0.8, 0.01, 1.2}, PidGains{1.5, 0.05, 1.8}};
    double max_accel = 4.0;  // m/s^2 actuator saturation per axis
    double drag = 0.04;      // 1/m, quadratic
    double land_speed = 1.5; // m/s commanded descent in LAND
    double airborne_min_altitude = 0.5;
    double dt = 0.05;
    double horizon = 120.0;
    /// Integration rate of the full model (the physics engine runs at this rate).
    double physics_rate_hz = 240.0;

    /// Throws ConfigurationError on min >= max, negative drains or non-positive rates.
    void validate() const;
};

/// Scenario file: JSON object with any DroneParams field; omitted fields keep their defaults.
DroneParams params_from_json_text(const std::string& text);
DroneParams load_params(const std::string& path);
std::string to_json_text(const DroneParams& params);

enum class ControllerVariant { Buggy, Patched };

ControllerVariant variant_from_string(const std::string& name);
std::string to_string(ControllerVariant v);

/// Buggy: deploy iff battery <= threshold and min <= altitude <= max.
/// Patched: deploy iff battery <= threshold.
bool emergency_deploy_decision(ControllerVariant variant, double battery, double altitude, double threshold,
                               double min_alt, double max_alt);
bool emergency_deploy_decision(ControllerVariant variant, double battery, double altitude, const DroneParams& params);

/// Parameter names shared by the full model, the surrogate and the property.
inline const std::string kBatteryInit = "battery_init";
inline const std::string kAltitudeInit = "altitude_init";
inline const std::string kMinDeployAlt = "min_deploy_alt";
inline const std::string kMaxDeployAlt = "max_deploy_alt";
inline const std::string kLowBattThreshold = "low_batt_threshold";
inline const std::string kDelta = "delta";
inline const std::string kMissionStart = "mission_start";

/// Configuration carrying the thresholds of `params` and the given initial battery/altitude.
Configuration make_configuration(const DroneParams& params, double battery, double altitude);

/// Searched space Theta_phi: battery [0, 100], altitude [0, 150], band limits on either
/// side of 70 m, threshold [5, 30] %, delta [1, 5] s, with min_deploy_alt < max_deploy_alt.
ConfigSpace default_space(std::uint64_t seed = 0);

/// The property with symbolic threshold and deadline.
stl::Formula property(const DroneParams& params);

/// IDLE, TAKE_OFF, GOTO, LAND, PARACHUTE over
/// (x, y, altitude, vx, vy, vz, ix, iy, iz, battery, deployed_flag); ix/iy/iz are PID integrator states.
HybridSystem build_full_system(const DroneParams& params, ControllerVariant variant);

/// Steady-state power/thermal balance over U = [battery_rate, altitude_rate, motor_thermal,
/// esc_load] for the given mode (GOTO or PARACHUTE), weakly coupled and SPD.
LinearSystem block_physical_model(const DroneParams& params, const std::string& mode);

/// Condenses the block model onto its two interface unknowns and returns the resulting
/// battery/altitude rates as flow over (battery, altitude, deployed_flag).
ContinuousDynamics condensed_drone_descent(const DroneParams& params, const std::string& mode);

/// Hand-assembled GOTO/PARACHUTE surrogate.
ReducedSystem build_surrogate_system(const DroneParams& params, ControllerVariant variant);

/// Full-model trial from GOTO at the physics rate, projected onto the property signals.
TrialOutcome run_full_trial(const HybridSystem& full, const DroneParams& params, const Configuration& config,
                            double horizon);

struct ConformanceEntry {
    Configuration config;
    std::optional<stl::Verdict> full;
    std::optional<stl::Verdict> surrogate;
    std::string fault;

    bool agrees() const { return full && surrogate && full->outcome == surrogate->outcome; }
};

struct ConformanceReport {
    std::vector<ConformanceEntry> entries;
    std::size_t compared = 0; // entries without faults
    std::size_t agreed = 0;
    std::size_t faults = 0;

    double agreement() const { return compared == 0 ? 1.0 : static_cast<double>(agreed) / static_cast<double>(compared); }
};

ConformanceReport conformance_check(const DroneParams& params, ControllerVariant variant,
                                    const std::vector<Configuration>& configs, double dt, double horizon);

struct TimingReport {
    double mean_full_seconds = 0.0;
    double mean_surrogate_seconds = 0.0;
    double max_surrogate_seconds = 0.0;
    double speedup = 0.0;
};

using TrialRunner = std::function<void(const Configuration&)>;

/// Interleaves the two runners over `configs` and compares mean wall-clock times.
TimingReport timing_comparison(const TrialRunner& reference, const TrialRunner& candidate,
                               const std::vector<Configuration>& configs);

/// Full model vs. surrogate over the same configurations. Needs at least 10 configs.
TimingReport timing_comparison(const DroneParams& params, ControllerVariant variant,
                               const std::vector<Configuration>& configs, double dt, double horizon);

} // namespace hdsf::drone

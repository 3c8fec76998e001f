#pragma once

#include <string>

#include "hdsf/config.hpp"
#include "hdsf/hybrid.hpp"
#include "hdsf/stl.hpp"

namespace hdsf {

/// Q1: high battery / above band, Q2: low battery / above band,
/// Q3: low battery / below band, Q4: high battery / below band.
/// Boundary: altitude margin exactly 0 (inside the band or touching a limit).
enum class Quadrant { Q1, Q2, Q3, Q4, Boundary };

/// One run projected into battery-margin / altitude-margin space.
struct MarginPoint {
    double battery_margin = 0.0;  // battery - threshold at the decision point
    double altitude_margin = 0.0; // > 0 above max, < 0 below min, 0 inside the band
    bool in_band = false;
    stl::Outcome verdict = stl::Outcome::Satisfied;
    Quadrant quadrant = Quadrant::Boundary;
    double decision_time = 0.0;
    bool crossed = false; // battery reached the threshold while airborne

    bool operator==(const MarginPoint&) const = default;
};

/// Battery margin 0 counts as low, matching the controller's `<=` trigger.
Quadrant quadrant_of(double battery_margin, double altitude_margin);
std::string to_string(Quadrant q);

/// Signed distance to the nearest deployment altitude limit (0 inside [lo, hi]).
double altitude_margin(double altitude, double lo, double hi);

/// Margins at the first sample where battery <= threshold while altitude > airborne_min,
/// or at the last sample if that never happens. Reads `low_batt_threshold`,
/// `min_deploy_alt` and `max_deploy_alt` from the configuration.
MarginPoint compute_margins(const Trace& trace, const Configuration& config, stl::Outcome verdict,
                            double airborne_min_altitude = 0.5);

} // namespace hdsf

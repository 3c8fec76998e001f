#include "hdsf/margins.hpp"

#include "hdsf/error.hpp"

namespace hdsf {

Quadrant quadrant_of(double battery_margin, double altitude_margin) {
    if (altitude_margin == 0.0) {
        return Quadrant::Boundary;
    }
    const bool high_battery = battery_margin > 0.0;
    if (altitude_margin > 0.0) {
        return high_battery ? Quadrant::Q1 : Quadrant::Q2;
    }
    return high_battery ? Quadrant::Q4 : Quadrant::Q3;
}

std::string to_string(Quadrant q) {
    switch (q) {
    case Quadrant::Q1:
        return "Q1";
    case Quadrant::Q2:
        return "Q2";
    case Quadrant::Q3:
        return "Q3";
    case Quadrant::Q4:
        return "Q4";
    case Quadrant::Boundary:
        return "B";
    }
    return "?";
}

double altitude_margin(double altitude, double lo, double hi) {
    if (altitude > hi) {
        return altitude - hi;
    }
    if (altitude < lo) {
        return altitude - lo;
    }
    return 0.0;
}

MarginPoint compute_margins(const Trace& trace, const Configuration& config, stl::Outcome verdict,
                            double airborne_min_altitude) {
    if (trace.empty()) {
        throw ProjectionError("cannot compute margins on an empty trace");
    }
    const auto battery = trace.signal_index("battery");
    const auto altitude = trace.signal_index("altitude");
    if (!battery || !altitude) {
        throw ProjectionError("margin computation needs battery and altitude signals");
    }
    const double threshold = config.at("low_batt_threshold");
    const double lo = config.at("min_deploy_alt");
    const double hi = config.at("max_deploy_alt");

    std::size_t at = trace.size() - 1;
    bool crossed = false;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (trace.value(k, *battery) <= threshold && trace.value(k, *altitude) > airborne_min_altitude) {
            at = k;
            crossed = true;
            break;
        }
    }
    MarginPoint p;
    p.battery_margin = trace.value(at, *battery) - threshold;
    const double alt = trace.value(at, *altitude);
    p.altitude_margin = altitude_margin(alt, lo, hi);
    p.in_band = alt >= lo && alt <= hi;
    p.verdict = verdict;
    p.quadrant = quadrant_of(p.battery_margin, p.altitude_margin);
    p.decision_time = trace.time(at);
    p.crossed = crossed;
    return p;
}

} // namespace hdsf

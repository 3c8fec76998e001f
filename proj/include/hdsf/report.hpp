#pragma once

#include <string>
#include <vector>

#include "hdsf/config.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/hybrid.hpp"
#include "hdsf/stl.hpp"

namespace hdsf {

/// What the controller saw at its decision point, for the single-run report.
struct RunSummary {
    double battery = 0.0;
    double altitude = 0.0;
    bool crossed = false;  // battery reached the threshold while airborne
    bool deployed = false; // deployed_flag set by the end of the trace
    stl::Verdict verdict;
};

RunSummary summarize_run(const Trace& trace, const Configuration& config, const stl::Verdict& verdict,
                         double airborne_min_altitude = 0.5);

/// Configuration / Result blocks followed by the property verdict.
std::string format_run_report(const Configuration& config, const RunSummary& run);

/// Shortest decimal that round-trips.
std::string format_number(double v);
/// Fixed notation with `decimals` digits.
std::string format_fixed(double v, int decimals);

/// Summary object without wall time, so identical campaigns produce identical bytes.
std::string summary_json(const CampaignSummary& summary);
std::string violation_jsonl(const std::vector<ViolationRecord>& violations);
/// trial, battery_margin, altitude_margin, in_band, verdict, quadrant, then the configuration
/// fields in name order. Faulted trials have empty margin fields and verdict FAULT.
std::string margins_csv(const std::vector<TrialRecord>& trials);

/// Writes summary.json, violations.jsonl, margins.csv and traces/ under `dir`.
void write_campaign_outputs(const std::string& dir, const CampaignResult& result);

} // namespace hdsf

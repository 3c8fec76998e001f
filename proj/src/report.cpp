#include "hdsf/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hdsf/error.hpp"
#include "hdsf/margins.hpp"
#include "hdsf/trace_io.hpp"

namespace hdsf {

namespace {

using nlohmann::ordered_json;

ordered_json config_object(const Configuration& c) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, value] : c.values()) {
        j[name] = value;
    }
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

} // namespace

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[128];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    if (ec != std::errc()) {
        return format_number(v);
    }
    std::string s(buf, ptr);
    const bool zero = s.find_first_not_of("-0.") == std::string::npos;
    return zero && s.front() == '-' ? s.substr(1) : s;
}

RunSummary summarize_run(const Trace& trace, const Configuration& config, const stl::Verdict& verdict,
                         double airborne_min_altitude) {
    const MarginPoint m = compute_margins(trace, config, verdict.outcome, airborne_min_altitude);
    RunSummary r;
    const std::size_t at = static_cast<std::size_t>(std::llround(m.decision_time / trace.dt()));
    r.battery = trace.value(at, "battery");
    r.altitude = trace.value(at, "altitude");
    r.crossed = m.crossed;
    r.deployed = trace.value(trace.size() - 1, "deployed_flag") >= 0.5;
    r.verdict = verdict;
    return r;
}

std::string format_run_report(const Configuration& config, const RunSummary& run) {
    std::ostringstream out;
    out << "Configuration:\n";
    out << "- Min deploy altitude: " << format_fixed(config.at("min_deploy_alt"), 1) << "m\n";
    out << "- Max deploy altitude: " << format_fixed(config.at("max_deploy_alt"), 1) << "m\n";
    out << "- Low battery threshold: " << format_fixed(config.at("low_batt_threshold"), 1) << "%\n";
    out << "Result:\n";
    out << "Battery: " << format_fixed(run.battery, 1) << "\n";
    out << "Altitude: " << format_fixed(run.altitude, 1) << "m\n";
    out << "Parachute: " << (run.deployed ? "DEPLOYED" : "NOT DEPLOYED") << "\n";
    out << "Status: ";
    if (run.deployed) {
        out << "DEPLOYED - Critical battery, parachute released";
    } else if (run.crossed) {
        out << "BLOCKED - Critical battery but altitude out of deployment range";
    } else if (run.battery <= config.at("low_batt_threshold")) {
        out << "GROUNDED - Critical battery on the ground";
    } else {
        out << "NOMINAL - Battery above threshold";
    }
    out << "\n";
    out << "Property: " << (run.verdict.satisfied() ? "SATISFIED" : "VIOLATED");
    if (!run.verdict.satisfied() && run.verdict.witness_time) {
        out << " at t=" << format_fixed(*run.verdict.witness_time, 2) << "s";
    }
    out << "\n";
    return out.str();
}

std::string summary_json(const CampaignSummary& s) {
    ordered_json j;
    j["total_runs"] = s.total_runs;
    j["unique_violations"] = s.unique_violations;
    j["violation_rate"] = s.violation_rate;
    j["violating_runs"] = s.violating_runs;
    j["faults"] = s.faults;
    j["seed"] = s.seed;
    return j.dump(2) + "\n";
}

std::string violation_jsonl(const std::vector<ViolationRecord>& violations) {
    std::string out;
    for (const auto& v : violations) {
        ordered_json j;
        j["trial"] = v.trial;
        j["config"] = config_object(v.config);
        j["witness_t"] = v.witness_time;
        j["signature"] = v.signature;
        j["trace_file"] = v.trace_file;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string margins_csv(const std::vector<TrialRecord>& trials) {
    std::set<std::string> fields;
    for (const auto& t : trials) {
        for (const auto& [name, value] : t.config.values()) {
            fields.insert(name);
        }
    }
    std::string out = "trial,battery_margin,altitude_margin,in_band,verdict,quadrant";
    for (const auto& f : fields) {
        out += ',' + f;
    }
    out += '\n';
    for (const auto& t : trials) {
        out += std::to_string(t.trial);
        if (t.fault) {
            out += ",,,,FAULT,";
        } else {
            out += ',' + format_number(t.margins.battery_margin);
            out += ',' + format_number(t.margins.altitude_margin);
            out += t.margins.in_band ? ",true" : ",false";
            out += ',' + stl::to_string(t.verdict);
            out += ',' + to_string(t.margins.quadrant);
        }
        for (const auto& f : fields) {
            out += ',';
            if (t.config.contains(f)) {
                out += format_number(t.config.at(f));
            }
        }
        out += '\n';
    }
    return out;
}

void write_campaign_outputs(const std::string& dir, const CampaignResult& result) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "traces");
    write_file(root / "summary.json", summary_json(result.summary));
    write_file(root / "violations.jsonl", violation_jsonl(result.violations));
    write_file(root / "margins.csv", margins_csv(result.trials));
    for (const auto& v : result.violations) {
        save_trace((root / v.trace_file).string(), v.trace);
    }
}

} // namespace hdsf

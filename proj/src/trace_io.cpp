#include "hdsf/trace_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "hdsf/error.hpp"

namespace hdsf {

using nlohmann::json;

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
    json header;
    header["dt"] = trace.dt();
    header["signals"] = trace.signals();
    header["modes"] = trace.modes();
    header["end"] = trace.end() == TraceEnd::Settled ? "settled" : "horizon";
    out << header.dump() << '\n';
    for (std::size_t k = 0; k < trace.size(); ++k) {
        json sample;
        sample["t"] = trace.time(k);
        sample["mode"] = trace.mode(k);
        json values = json::object();
        const auto row = trace.row(k);
        for (std::size_t j = 0; j < row.size(); ++j) {
            values[trace.signals()[j]] = row[j];
        }
        sample["signals"] = std::move(values);
        out << sample.dump() << '\n';
    }
    for (const auto& e : trace.events()) {
        json record;
        record["event"] = {{"t", e.time}, {"guard", e.guard}, {"from", e.from}, {"to", e.to}};
        out << record.dump() << '\n';
    }
}

Trace read_trace_jsonl(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigurationError("trace stream is empty");
    }
    try {
        const json header = json::parse(line);
        Trace trace(header.at("dt").get<double>(), header.at("signals").get<std::vector<std::string>>(),
                    header.at("modes").get<std::vector<std::string>>());
        if (header.value("end", "horizon") == "settled") {
            trace.set_end(TraceEnd::Settled);
        }
        std::vector<double> row(trace.signals().size());
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const json record = json::parse(line);
            if (record.contains("event")) {
                const json& e = record.at("event");
                trace.add_event({e.at("t").get<double>(), e.at("guard").get<std::string>(),
                                 e.at("from").get<std::string>(), e.at("to").get<std::string>()});
                continue;
            }
            const auto mode = record.at("mode").get<std::string>();
            const auto it = std::find(trace.modes().begin(), trace.modes().end(), mode);
            if (it == trace.modes().end()) {
                throw ConfigurationError("trace sample names undeclared mode '" + mode + "'");
            }
            const json& values = record.at("signals");
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] = values.at(trace.signals()[j]).get<double>();
            }
            trace.add_sample(record.at("t").get<double>(), static_cast<std::size_t>(it - trace.modes().begin()),
                             row);
        }
        return trace;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed trace: ") + e.what());
    }
}

void save_trace(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigurationError("cannot write trace file '" + path + "'");
    }
    write_trace_jsonl(out, trace);
}

Trace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigurationError("cannot open trace file '" + path + "'");
    }
    return read_trace_jsonl(in);
}

} // namespace hdsf

#include "hdsf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hdsf/error.hpp"

namespace hdsf {

using nlohmann::json;

double Configuration::at(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) {
        throw ConfigurationError("configuration has no parameter '" + name + "'");
    }
    return it->second;
}

double Configuration::get_or(const std::string& name, double fallback) const {
    const auto it = values_.find(name);
    return it == values_.end() ? fallback : it->second;
}

bool Configuration::finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const auto& kv) { return std::isfinite(kv.second); });
}

const ParameterBounds* ConfigSpace::find(const std::string& name) const {
    const auto it = std::find_if(bounds.begin(), bounds.end(), [&](const auto& b) { return b.name == name; });
    return it == bounds.end() ? nullptr : &*it;
}

std::set<std::string> ConfigSpace::names() const {
    std::set<std::string> out;
    for (const auto& b : bounds) {
        out.insert(b.name);
    }
    return out;
}

std::vector<OrderingConstraint> ConfigSpace::topological_ordering() const {
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::size_t>> outgoing;
    for (std::size_t k = 0; k < ordering.size(); ++k) {
        indegree.try_emplace(ordering[k].lower, 0);
        indegree[ordering[k].upper] += 1;
        outgoing[ordering[k].lower].push_back(k);
    }
    std::vector<std::string> ready;
    for (const auto& [name, deg] : indegree) {
        if (deg == 0) {
            ready.push_back(name);
        }
    }
    std::vector<OrderingConstraint> sorted;
    while (!ready.empty()) {
        const std::string node = ready.front();
        ready.erase(ready.begin());
        for (const std::size_t k : outgoing[node]) {
            sorted.push_back(ordering[k]);
            if (--indegree[ordering[k].upper] == 0) {
                ready.push_back(ordering[k].upper);
            }
        }
    }
    if (sorted.size() != ordering.size()) {
        throw SpaceError("ordering constraints contain a cycle");
    }
    return sorted;
}

void ConfigSpace::validate() const {
    std::set<std::string> seen;
    for (const auto& b : bounds) {
        if (!seen.insert(b.name).second) {
            throw SpaceError("parameter '" + b.name + "' declared twice");
        }
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
            throw SpaceError("parameter '" + b.name + "' has an empty or non-finite interval");
        }
    }
    for (const auto& c : ordering) {
        if (!find(c.lower) || !find(c.upper)) {
            throw SpaceError("ordering constraint " + c.lower + " < " + c.upper + " names an unknown parameter");
        }
        if (c.lower == c.upper) {
            throw SpaceError("ordering constraint " + c.lower + " < " + c.upper + " is unsatisfiable");
        }
    }
    const auto sorted = topological_ordering();

    // Effective bounds: lower bounds flow up the constraint DAG, upper bounds flow down.
    std::map<std::string, double> lo;
    std::map<std::string, double> hi;
    for (const auto& b : bounds) {
        lo[b.name] = b.lo;
        hi[b.name] = b.hi;
    }
    for (const auto& c : sorted) {
        lo[c.upper] = std::max(lo[c.upper], lo[c.lower]);
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        hi[it->lower] = std::min(hi[it->lower], hi[it->upper]);
    }
    for (const auto& b : bounds) {
        if (lo[b.name] > hi[b.name]) {
            throw SpaceError("feasible region of '" + b.name + "' is empty");
        }
    }
    for (const auto& c : ordering) {
        if (lo[c.lower] >= hi[c.upper]) {
            throw SpaceError("constraint " + c.lower + " < " + c.upper + " cannot be satisfied within bounds");
        }
    }
}

ConfigSpace ConfigSpace::restricted_to(const std::set<std::string>& keep) const {
    ConfigSpace out;
    out.rng_seed = rng_seed;
    for (const auto& b : bounds) {
        if (keep.count(b.name)) {
            out.bounds.push_back(b);
        }
    }
    for (const auto& c : ordering) {
        if (keep.count(c.lower) && keep.count(c.upper)) {
            out.ordering.push_back(c);
        }
    }
    return out;
}

bool ConfigSpace::admits(const Configuration& config) const {
    for (const auto& b : bounds) {
        if (!config.contains(b.name)) {
            return false;
        }
        const double v = config.at(b.name);
        if (!std::isfinite(v) || v < b.lo || v > b.hi) {
            return false;
        }
    }
    return std::all_of(ordering.begin(), ordering.end(),
                       [&](const auto& c) { return config.at(c.lower) < config.at(c.upper); });
}

namespace {

json config_json(const Configuration& c) {
    json j = json::object();
    for (const auto& [k, v] : c.values()) {
        j[k] = v;
    }
    return j;
}

ConfigSpace space_from_json(const json& j) {
    ConfigSpace s;
    for (const auto& [name, pair] : j.at("bounds").items()) {
        if (!pair.is_array() || pair.size() != 2) {
            throw SpaceError("bounds of '" + name + "' must be [lo, hi]");
        }
        s.bounds.push_back({name, pair[0].get<double>(), pair[1].get<double>()});
    }
    if (j.contains("ordering")) {
        for (const auto& pair : j.at("ordering")) {
            s.ordering.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::string>()});
        }
    }
    if (j.contains("seed")) {
        s.rng_seed = j.at("seed").get<std::uint64_t>();
    }
    return s;
}

} // namespace

std::string to_json_text(const Configuration& config) { return config_json(config).dump(); }

Configuration configuration_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed configuration: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigurationError("configuration must be a JSON object");
    }
    Configuration c;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) {
            throw ConfigurationError("parameter '" + k + "' must be a number");
        }
        c.set(k, v.get<double>());
    }
    return c;
}

std::string to_json_text(const ConfigSpace& space) {
    json j;
    j["bounds"] = json::object();
    for (const auto& b : space.bounds) {
        j["bounds"][b.name] = {b.lo, b.hi};
    }
    j["ordering"] = json::array();
    for (const auto& c : space.ordering) {
        j["ordering"].push_back({c.lower, c.upper});
    }
    j["seed"] = space.rng_seed;
    return j.dump();
}

ConfigSpace config_space_from_json_text(const std::string& text) {
    try {
        return space_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw SpaceError(std::string("malformed space description: ") + e.what());
    }
}

ConfigSpace load_config_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SpaceError("cannot open space file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_space_from_json_text(buffer.str());
}

} // namespace hdsf

#include "hdsf/reduction.hpp"

#include <algorithm>
#include <deque>

#include <json.hpp>

#include "hdsf/error.hpp"

namespace hdsf {

namespace {

bool subset(const SignalSet& a, const SignalSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool intersects(const SignalSet& a, const SignalSet& b) {
    return std::any_of(a.begin(), a.end(), [&](const auto& s) { return b.count(s) != 0; });
}

std::string first_outside(const SignalSet& a, const SignalSet& b) {
    for (const auto& s : a) {
        if (!b.count(s)) {
            return s;
        }
    }
    return {};
}

std::string join(const SignalSet& s) {
    std::string out;
    for (const auto& x : s) {
        out += (out.empty() ? "" : ", ") + x;
    }
    return out;
}

std::string entry_of(const HybridSystem& system, const ReductionOptions& options) {
    const std::string entry = options.entry_mode.value_or(system.initial_mode());
    if (!system.has_mode(entry)) {
        throw ReductionError("entry mode '" + entry + "' is not a mode of the system");
    }
    return entry;
}

/// Modes reachable from `entry` following only guards accepted by `follow`, restricted to `allowed`.
template <typename Follow>
std::set<std::string> reachable(const HybridSystem& system, const std::string& entry, Follow follow,
                                const std::set<std::string>* allowed = nullptr) {
    std::set<std::string> seen{entry};
    std::deque<std::string> queue{entry};
    while (!queue.empty()) {
        const Mode& m = system.mode(queue.front());
        queue.pop_front();
        for (const auto& g : m.guards) {
            const std::string& target = m.transition_for(g.label).target;
            if (!follow(m, g) || (allowed && !allowed->count(target))) {
                continue;
            }
            if (seen.insert(target).second) {
                queue.push_back(target);
            }
        }
    }
    return seen;
}

} // namespace

bool RelevanceReport::keeps_mode(const std::string& name) const {
    return std::find(modes_kept.begin(), modes_kept.end(), name) != modes_kept.end();
}

SignalSet relevant_signals(const stl::Formula& formula, const HybridSystem& system, const ReductionOptions& options) {
    SignalSet closure = stl::signals_of(formula);
    for (const auto& s : closure) {
        if (!system.has_signal(s)) {
            throw SpecificationError("property refers to unknown signal '" + s + "'");
        }
    }
    for (const auto& p : stl::parameters_of(formula)) {
        if (!system.parameters().contains_parameter(p)) {
            throw SpecificationError("property refers to undeclared parameter '$" + p + "'");
        }
    }
    const std::string entry = entry_of(system, options);

    for (bool grew = true; grew;) {
        grew = false;
        const auto modes =
            reachable(system, entry, [&](const Mode&, const Guard& g) { return subset(g.reads, closure); });
        const std::size_t before = closure.size();
        for (const auto& name : modes) {
            const Mode& m = system.mode(name);
            for (const auto& [written, deps] : m.dynamics.dependencies) {
                if (closure.count(written)) {
                    closure.insert(deps.begin(), deps.end());
                }
            }
            for (const auto& g : m.guards) {
                const Transition& t = m.transition_for(g.label);
                if (intersects(t.writes, closure)) {
                    closure.insert(t.reads.begin(), t.reads.end());
                    closure.insert(g.reads.begin(), g.reads.end());
                }
            }
        }
        grew = closure.size() != before;
    }
    return closure;
}

RelevanceReport relevant_modes(const HybridSystem& system, const SignalSet& signals, const ReductionOptions& options) {
    if (signals.empty()) {
        throw ReductionError("cannot reduce against an empty signal set");
    }
    const std::string entry = entry_of(system, options);
    RelevanceReport report;
    report.entry_mode = entry;
    report.signals_kept = signals;

    auto traversable = [&](const Mode&, const Guard& g) { return subset(g.reads, signals); };
    const auto reach = reachable(system, entry, traversable);

    // Modes that touch the kept signals directly.
    std::set<std::string> core;
    for (const auto& name : reach) {
        const Mode& m = system.mode(name);
        bool touches = intersects(m.dynamics.writes(), signals);
        for (const auto& g : m.guards) {
            touches = touches || intersects(g.reads, signals) || intersects(m.transition_for(g.label).writes, signals);
        }
        if (touches) {
            core.insert(name);
        }
    }

    std::set<std::string> kept = reach;
    for (bool changed = true; changed;) {
        changed = false;
        // Forward from the core and backward to the core, inside the current candidate set.
        // The entry seeds the forward pass too: modes leading from it to the core stay.
        std::set<std::string> forward;
        std::set<std::string> seeds = core;
        seeds.insert(entry);
        for (const auto& c : seeds) {
            if (kept.count(c)) {
                const auto r = reachable(system, c, traversable, &kept);
                forward.insert(r.begin(), r.end());
            }
        }
        std::set<std::string> on_path;
        for (const auto& name : forward) {
            const auto r = reachable(system, name, traversable, &kept);
            if (std::any_of(r.begin(), r.end(), [&](const auto& x) { return core.count(x) != 0; })) {
                on_path.insert(name);
            }
        }
        const auto from_entry = kept.count(entry) && on_path.count(entry)
                                    ? reachable(system, entry, traversable, &on_path)
                                    : std::set<std::string>{};
        if (from_entry != kept) {
            kept = from_entry;
            changed = true;
        }
    }
    if (!kept.count(entry)) {
        throw ReductionError("reduction would drop the entry mode '" + entry +
                             "'; the property cannot be scoped to this entry");
    }

    for (const auto& m : system.modes()) {
        const std::string key = "mode:" + m.name;
        if (kept.count(m.name)) {
            report.modes_kept.push_back(m.name);
            const SignalSet w = m.dynamics.writes();
            SignalSet touched;
            std::set_intersection(w.begin(), w.end(), signals.begin(), signals.end(),
                                  std::inserter(touched, touched.end()));
            if (!touched.empty()) {
                report.reasons[key] = "flow writes " + join(touched);
            } else if (core.count(m.name)) {
                report.reasons[key] = "guards or resets touch kept signals";
            } else {
                report.reasons[key] = "lies on a path between relevant modes";
            }
        } else {
            report.modes_dropped.push_back(m.name);
            report.reasons[key] = reach.count(m.name)
                                      ? "reachable but not on a path between modes touching " + join(signals)
                                      : "unreachable from " + entry + " over guards decidable on " + join(signals);
        }
        for (const auto& g : m.guards) {
            const std::string gkey = "guard:" + m.name + "/" + g.label;
            const std::string& target = m.transition_for(g.label).target;
            if (!kept.count(m.name)) {
                report.guards_dropped[m.name].push_back(g.label);
                report.reasons[gkey] = "source mode dropped";
            } else if (!subset(g.reads, signals)) {
                report.guards_dropped[m.name].push_back(g.label);
                report.reasons[gkey] = "reads dropped signal " + first_outside(g.reads, signals);
            } else if (!kept.count(target)) {
                report.guards_dropped[m.name].push_back(g.label);
                report.reasons[gkey] = "target mode " + target + " dropped";
            } else {
                report.guards_kept[m.name].push_back(g.label);
                report.reasons[gkey] = "decides a transition between kept modes";
            }
        }
    }
    for (const auto& s : system.signals()) {
        report.reasons["signal:" + s] = signals.count(s) ? "in the property's dataflow closure" : "not read by the property";
    }
    return report;
}

namespace {

/// Maps between the full state layout and the reduced one.
struct Embedding {
    std::size_t full_dim = 0;
    std::vector<std::size_t> kept; // reduced index -> full index

    void scatter(std::span<const double> reduced, std::span<double> full) const {
        std::fill(full.begin(), full.end(), 0.0);
        for (std::size_t j = 0; j < kept.size(); ++j) {
            full[kept[j]] = reduced[j];
        }
    }
    void gather(std::span<const double> full, std::span<double> reduced) const {
        for (std::size_t j = 0; j < kept.size(); ++j) {
            reduced[j] = full[kept[j]];
        }
    }
};

ContinuousDynamics projected_dynamics(const Mode& m, const std::vector<std::string>& kept_signals,
                                      const SignalSet& kept, const Embedding& emb) {
    ContinuousDynamics d;
    d.signal_names = kept_signals;
    for (const auto& [written, deps] : m.dynamics.dependencies) {
        if (!kept.count(written)) {
            continue;
        }
        if (!subset(deps, kept)) {
            throw ProjectionError("mode " + m.name + ": flow of " + written + " reads dropped signal " +
                                  first_outside(deps, kept));
        }
        d.dependencies[written] = deps;
    }
    d.parameters = m.dynamics.parameters;
    d.field = [field = m.dynamics.field, emb](std::span<const double> x, const Configuration& mu, std::span<double> dx) {
        std::vector<double> full(emb.full_dim);
        std::vector<double> dfull(emb.full_dim);
        emb.scatter(x, full);
        field(full, mu, dfull);
        emb.gather(dfull, dx);
    };
    return d;
}

ContinuousDynamics adopt_condensed(const std::string& mode, const ContinuousDynamics& given,
                                   const std::vector<std::string>& kept_signals, const SignalSet& kept) {
    if (SignalSet(given.signal_names.begin(), given.signal_names.end()) != kept ||
        given.signal_names.size() != kept_signals.size()) {
        throw ProjectionError("mode " + mode + ": condensed dynamics must be defined over exactly the kept signals (" +
                              join(kept) + ")");
    }
    if (!subset(given.reads(), kept) || !subset(given.writes(), kept)) {
        throw ProjectionError("mode " + mode + ": condensed dynamics read dropped signal " +
                              first_outside(given.reads(), kept));
    }
    if (given.signal_names == kept_signals) {
        return given;
    }
    // Reorder: reduced index j lives at position perm[j] of the supplied layout.
    std::vector<std::size_t> perm(kept_signals.size());
    for (std::size_t j = 0; j < kept_signals.size(); ++j) {
        perm[j] = static_cast<std::size_t>(
            std::find(given.signal_names.begin(), given.signal_names.end(), kept_signals[j]) -
            given.signal_names.begin());
    }
    ContinuousDynamics d = given;
    d.signal_names = kept_signals;
    d.field = [field = given.field, perm](std::span<const double> x, const Configuration& mu, std::span<double> dx) {
        std::vector<double> local(perm.size());
        std::vector<double> dlocal(perm.size());
        for (std::size_t j = 0; j < perm.size(); ++j) {
            local[perm[j]] = x[j];
        }
        field(local, mu, dlocal);
        for (std::size_t j = 0; j < perm.size(); ++j) {
            dx[j] = dlocal[perm[j]];
        }
    };
    return d;
}

} // namespace

ReducedSystem build_surrogate(const HybridSystem& system, const stl::Formula& formula,
                              const std::map<std::string, ContinuousDynamics>& condensed_dynamics,
                              const ReductionOptions& options) {
    const SignalSet kept = relevant_signals(formula, system, options);
    RelevanceReport report = relevant_modes(system, kept, options);

    std::vector<std::string> kept_signals;
    Embedding emb;
    emb.full_dim = system.dimension();
    for (std::size_t k = 0; k < system.signals().size(); ++k) {
        if (kept.count(system.signals()[k])) {
            kept_signals.push_back(system.signals()[k]);
            emb.kept.push_back(k);
        }
    }

    std::set<std::string> params = stl::parameters_of(formula);
    std::vector<Mode> modes;
    for (const auto& name : report.modes_kept) {
        const Mode& original = system.mode(name);
        Mode m;
        m.name = name;
        m.terminal = original.terminal;
        if (const auto it = condensed_dynamics.find(name); it != condensed_dynamics.end()) {
            m.dynamics = adopt_condensed(name, it->second, kept_signals, kept);
        } else {
            m.dynamics = projected_dynamics(original, kept_signals, kept, emb);
        }
        params.insert(m.dynamics.parameters.begin(), m.dynamics.parameters.end());

        const auto guards_it = report.guards_kept.find(name);
        for (const auto& g : original.guards) {
            if (guards_it == report.guards_kept.end() ||
                std::find(guards_it->second.begin(), guards_it->second.end(), g.label) == guards_it->second.end()) {
                continue;
            }
            Guard ng = g;
            ng.predicate = [pred = g.predicate, emb](std::span<const double> x, const Configuration& mu) {
                std::vector<double> full(emb.full_dim);
                emb.scatter(x, full);
                return pred(full, mu);
            };
            const Transition& t = original.transition_for(g.label);
            Transition nt;
            nt.target = t.target;
            nt.parameters = t.parameters;
            for (const auto& w : t.writes) {
                if (kept.count(w)) {
                    nt.writes.insert(w);
                }
            }
            if (!nt.writes.empty()) {
                if (!subset(t.reads, kept)) {
                    throw ProjectionError("mode " + name + ": reset of guard " + g.label + " reads dropped signal " +
                                          first_outside(t.reads, kept));
                }
                nt.reads = t.reads;
            }
            if (t.reset && !nt.writes.empty()) {
                nt.reset = [reset = t.reset, emb](std::span<double> x, const Configuration& mu) {
                    std::vector<double> full(emb.full_dim);
                    emb.scatter(x, full);
                    reset(full, mu);
                    emb.gather(full, x);
                };
            }
            params.insert(g.parameters.begin(), g.parameters.end());
            params.insert(nt.parameters.begin(), nt.parameters.end());
            m.transitions.emplace(g.label, std::move(nt));
            m.guards.push_back(std::move(ng));
        }
        modes.push_back(std::move(m));
    }

    std::map<std::string, std::string> initial_values;
    for (const auto& [signal, param] : system.initial_values()) {
        if (kept.count(signal)) {
            initial_values[signal] = param;
            params.insert(param);
        }
    }
    ConfigSpace space = system.parameters().restricted_to(params);
    HybridSystem reduced(kept_signals, std::move(modes), report.entry_mode, space, std::move(initial_values));
    return ReducedSystem{std::move(reduced), std::move(report), std::move(space)};
}

bool verify_projection_closure(const ReducedSystem& rs) {
    SignalSet allowed;
    for (const auto& s : rs.system.signals()) {
        if (rs.report.signals_kept.count(s)) {
            allowed.insert(s);
        }
    }
    for (const auto& m : rs.system.modes()) {
        if (!rs.report.keeps_mode(m.name)) {
            return false;
        }
        if (!subset(m.dynamics.reads(), allowed) || !subset(m.dynamics.writes(), allowed)) {
            return false;
        }
        for (const auto& g : m.guards) {
            const Transition& t = m.transition_for(g.label);
            if (!subset(g.reads, allowed) || !subset(t.reads, allowed) || !subset(t.writes, allowed)) {
                return false;
            }
            if (!rs.report.keeps_mode(t.target)) {
                return false;
            }
        }
    }
    return true;
}

std::string to_json_text(const RelevanceReport& report) {
    nlohmann::json j;
    j["entry_mode"] = report.entry_mode;
    j["modes_kept"] = report.modes_kept;
    j["modes_dropped"] = report.modes_dropped;
    j["guards_kept"] = report.guards_kept;
    j["guards_dropped"] = report.guards_dropped;
    j["signals_kept"] = report.signals_kept;
    j["reasons"] = report.reasons;
    return j.dump(2);
}

} // namespace hdsf

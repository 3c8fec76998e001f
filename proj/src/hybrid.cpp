#include "hdsf/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdsf/error.hpp"

namespace hdsf {

SignalSet ContinuousDynamics::writes() const {
    SignalSet out;
    for (const auto& [signal, deps] : dependencies) {
        out.insert(signal);
    }
    return out;
}

SignalSet ContinuousDynamics::reads() const {
    SignalSet out;
    for (const auto& [signal, deps] : dependencies) {
        out.insert(deps.begin(), deps.end());
    }
    return out;
}

ContinuousDynamics ContinuousDynamics::zero(std::vector<std::string> signal_names) {
    ContinuousDynamics d;
    d.signal_names = std::move(signal_names);
    d.field = [](std::span<const double>, const Configuration&, std::span<double> dx) {
        std::fill(dx.begin(), dx.end(), 0.0);
    };
    return d;
}

const Transition& Mode::transition_for(const std::string& guard_label) const {
    const auto it = transitions.find(guard_label);
    if (it == transitions.end()) {
        throw ConfigurationError("mode " + name + " has no transition for guard '" + guard_label + "'");
    }
    return it->second;
}

namespace {

void require_known(const std::vector<std::string>& signals, const SignalSet& names, const std::string& where) {
    for (const auto& n : names) {
        if (std::find(signals.begin(), signals.end(), n) == signals.end()) {
            throw ConfigurationError(where + " refers to unknown signal '" + n + "'");
        }
    }
}

} // namespace

HybridSystem::HybridSystem(std::vector<std::string> signals, std::vector<Mode> modes, std::string initial_mode,
                           ConfigSpace parameters, std::map<std::string, std::string> initial_values)
    : signals_(std::move(signals)), modes_(std::move(modes)), initial_mode_(std::move(initial_mode)),
      parameters_(std::move(parameters)), initial_values_(std::move(initial_values)) {
    if (signals_.empty()) {
        throw ConfigurationError("hybrid system needs at least one signal");
    }
    if (std::set<std::string>(signals_.begin(), signals_.end()).size() != signals_.size()) {
        throw ConfigurationError("duplicate signal name");
    }
    if (modes_.empty()) {
        throw ConfigurationError("hybrid system needs at least one mode");
    }
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (!mode_lookup_.emplace(modes_[i].name, i).second) {
            throw ConfigurationError("duplicate mode '" + modes_[i].name + "'");
        }
    }
    if (!mode_lookup_.count(initial_mode_)) {
        throw ConfigurationError("initial mode '" + initial_mode_ + "' is not a mode");
    }
    for (const auto& m : modes_) {
        const std::string where = "mode " + m.name;
        if (m.dynamics.signal_names != signals_) {
            throw ConfigurationError(where + ": dynamics layout does not match the system signals");
        }
        if (!m.dynamics.field) {
            throw ConfigurationError(where + ": dynamics has no vector field");
        }
        require_known(signals_, m.dynamics.writes(), where + " dynamics");
        require_known(signals_, m.dynamics.reads(), where + " dynamics");
        std::set<std::string> labels;
        for (const auto& g : m.guards) {
            if (!labels.insert(g.label).second) {
                throw ConfigurationError(where + ": duplicate guard '" + g.label + "'");
            }
            if (!g.predicate) {
                throw ConfigurationError(where + ": guard '" + g.label + "' has no predicate");
            }
            require_known(signals_, g.reads, where + " guard " + g.label);
            const Transition& t = m.transition_for(g.label);
            if (!mode_lookup_.count(t.target)) {
                throw ConfigurationError(where + ": guard '" + g.label + "' targets unknown mode '" + t.target + "'");
            }
            require_known(signals_, t.reads, where + " reset " + g.label);
            require_known(signals_, t.writes, where + " reset " + g.label);
        }
        for (const auto& [label, t] : m.transitions) {
            if (!labels.count(label)) {
                throw ConfigurationError(where + ": transition '" + label + "' has no guard");
            }
        }
    }
    for (const auto& [signal, param] : initial_values_) {
        require_known(signals_, {signal}, "initial value for parameter " + param);
    }
    if (!parameters_.bounds.empty()) {
        try {
            parameters_.validate();
        } catch (const SpaceError& e) {
            throw ConfigurationError(std::string("parameter space: ") + e.what());
        }
    }
}

ModeId HybridSystem::mode_id(const std::string& name) const {
    const auto it = mode_lookup_.find(name);
    if (it == mode_lookup_.end()) {
        throw ConfigurationError("unknown mode '" + name + "'");
    }
    return {name, it->second};
}

const Mode& HybridSystem::mode(const std::string& name) const { return modes_[mode_id(name).index]; }

bool HybridSystem::has_mode(const std::string& name) const { return mode_lookup_.count(name) != 0; }

std::optional<std::size_t> HybridSystem::signal_index(const std::string& name) const {
    const auto it = std::find(signals_.begin(), signals_.end(), name);
    if (it == signals_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - signals_.begin());
}

State HybridSystem::initial_state(const Configuration& mu) const {
    State x(signals_.size(), 0.0);
    for (const auto& [signal, param] : initial_values_) {
        x[*signal_index(signal)] = mu.at(param);
    }
    return x;
}

bool HybridSystem::settled(std::size_t mode_index, std::span<const double> dx) const {
    const Mode& m = modes_.at(mode_index);
    return m.terminal && m.guards.empty() && std::all_of(dx.begin(), dx.end(), [](double v) { return v == 0.0; });
}

Trace::Trace(double dt, std::vector<std::string> signals, std::vector<std::string> modes)
    : dt_(dt), signals_(std::move(signals)), modes_(std::move(modes)) {}

std::span<const double> Trace::row(std::size_t i) const {
    if (i >= size()) {
        throw std::out_of_range("trace sample index out of range");
    }
    return {values_.data() + i * signals_.size(), signals_.size()};
}

std::optional<std::size_t> Trace::signal_index(const std::string& name) const {
    const auto it = std::find(signals_.begin(), signals_.end(), name);
    if (it == signals_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - signals_.begin());
}

double Trace::value(std::size_t i, const std::string& signal) const {
    const auto idx = signal_index(signal);
    if (!idx) {
        throw ProjectionError("trace has no signal '" + signal + "'");
    }
    return row(i)[*idx];
}

std::vector<double> Trace::column(const std::string& signal) const {
    const auto idx = signal_index(signal);
    if (!idx) {
        throw ProjectionError("trace has no signal '" + signal + "'");
    }
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out[i] = values_[i * signals_.size() + *idx];
    }
    return out;
}

void Trace::add_sample(double t, std::size_t mode_index, std::span<const double> values) {
    times_.push_back(t);
    mode_index_.push_back(mode_index);
    values_.insert(values_.end(), values.begin(), values.end());
}

void Trace::reserve(std::size_t samples) {
    times_.reserve(samples);
    mode_index_.reserve(samples);
    values_.reserve(samples * signals_.size());
}

namespace {

void check_finite(const HybridSystem& system, std::span<const double> x, double t) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw SimulationFault(t, system.signals()[i]);
        }
    }
}

void integrate(const Mode& mode, std::span<double> x, std::span<double> dx, const Configuration& mu, double dt) {
    mode.dynamics.field(x, mu, dx);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += dt * dx[i];
    }
}

/// Applies the reset of guard `g` in place and returns the target mode index.
std::size_t apply_transition(const HybridSystem& system, const Mode& mode, const Guard& g, std::span<double> x,
                             const Configuration& mu) {
    const Transition& t = mode.transition_for(g.label);
    if (t.reset) {
        t.reset(x, mu);
    }
    return system.mode_id(t.target).index;
}

void check_step_inputs(const HybridSystem& system, std::size_t mode, std::span<const double> state, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigurationError("dt must be positive");
    }
    if (mode >= system.modes().size()) {
        throw ConfigurationError("mode index out of range");
    }
    if (state.size() != system.dimension()) {
        throw ConfigurationError("state has dimension " + std::to_string(state.size()) + ", system expects " +
                                 std::to_string(system.dimension()));
    }
}

} // namespace

std::optional<std::size_t> first_enabled_guard(const HybridSystem& system, std::size_t mode,
                                               std::span<const double> x, const Configuration& mu) {
    const auto& guards = system.mode(mode).guards;
    for (std::size_t g = 0; g < guards.size(); ++g) {
        if (guards[g].predicate(x, mu)) {
            return g;
        }
    }
    return std::nullopt;
}

StepResult step(const HybridSystem& system, std::size_t mode, std::span<const double> state,
                const Configuration& mu, double dt) {
    check_step_inputs(system, mode, state, dt);
    StepResult out{mode, State(state.begin(), state.end()), std::nullopt};
    State dx(state.size());
    integrate(system.mode(mode), out.state, dx, mu, dt);
    check_finite(system, out.state, dt);
    if (const auto g = first_enabled_guard(system, mode, out.state, mu)) {
        const Mode& m = system.mode(mode);
        out.fired_guard = m.guards[*g].label;
        out.mode = apply_transition(system, m, m.guards[*g], out.state, mu);
        check_finite(system, out.state, dt);
    }
    return out;
}

Trace simulate(const HybridSystem& system, std::span<const double> initial_state, const Configuration& mu,
               double dt, double horizon) {
    return simulate(system, HybridState{system.initial_mode(), State(initial_state.begin(), initial_state.end())},
                    mu, dt, horizon);
}

Trace simulate(const HybridSystem& system, const HybridState& start, const Configuration& mu, double dt,
               double horizon) {
    std::size_t mode = system.mode_id(start.mode).index;
    check_step_inputs(system, mode, start.state, dt);
    if (!(horizon >= dt) || !std::isfinite(horizon)) {
        throw ConfigurationError("horizon must be at least dt");
    }
    // Times are k * dt, never accumulated, so sampling stays exactly uniform.
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));

    std::vector<std::string> mode_names;
    mode_names.reserve(system.modes().size());
    for (const auto& m : system.modes()) {
        mode_names.push_back(m.name);
    }
    Trace trace(dt, system.signals(), std::move(mode_names));
    trace.reserve(steps + 1);

    State x = start.state;
    State dx(x.size());
    check_finite(system, x, 0.0);
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        trace.add_sample(t, mode, x);

        const Mode& current = system.mode(mode);
        bool jumped = false;
        if (const auto g = first_enabled_guard(system, mode, x, mu)) {
            const Guard& guard = current.guards[*g];
            const std::size_t target = apply_transition(system, current, guard, x, mu);
            trace.add_event({t, guard.label, current.name, system.mode(target).name});
            check_finite(system, x, t);
            mode = target;
            jumped = true;
        }
        if (k == steps) {
            break;
        }
        const Mode& active = system.mode(mode);
        active.dynamics.field(x, mu, dx);
        if (!jumped && system.settled(mode, dx)) {
            trace.set_end(TraceEnd::Settled);
            break;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += dt * dx[i];
        }
        check_finite(system, x, static_cast<double>(k + 1) * dt);
    }
    return trace;
}

Trace project_trace(const Trace& trace, const std::vector<std::string>& signals) {
    std::vector<std::size_t> idx;
    idx.reserve(signals.size());
    for (const auto& name : signals) {
        const auto i = trace.signal_index(name);
        if (!i) {
            std::string available;
            for (const auto& s : trace.signals()) {
                available += (available.empty() ? "" : ", ") + s;
            }
            throw ProjectionError("cannot project onto unknown signal '" + name + "' (available: " + available + ")");
        }
        idx.push_back(*i);
    }
    Trace out(trace.dt(), signals, trace.modes());
    out.reserve(trace.size());
    std::vector<double> row(idx.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto full = trace.row(k);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            row[j] = full[idx[j]];
        }
        out.add_sample(trace.time(k), trace.mode_index(k), row);
    }
    for (const auto& e : trace.events()) {
        out.add_event(e);
    }
    out.set_end(trace.end());
    return out;
}

} // namespace hdsf

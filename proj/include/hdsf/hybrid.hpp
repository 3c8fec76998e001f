#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hdsf/config.hpp"

namespace hdsf {

using State = std::vector<double>;
using SignalSet = std::set<std::string>;

struct ModeId {
    std::string name;
    std::size_t index = 0;

    bool operator==(const ModeId&) const = default;
};

using VectorField =
    std::function<void(std::span<const double> x, const Configuration& mu, std::span<double> dx)>;
using GuardPredicate = std::function<bool(std::span<const double> x, const Configuration& mu)>;
using ResetMap = std::function<void(std::span<double> x, const Configuration& mu)>;

/// Per-mode flow x' = f(x, mu) with declared dataflow.
///
/// `dependencies` maps every signal the field writes (nonzero derivative possible)
/// to the signals its derivative reads. Signals absent from the map have a zero
/// derivative in this mode. The declaration is what relevance analysis consumes,
/// so it has to cover everything the callable actually reads.
struct ContinuousDynamics {
    std::vector<std::string> signal_names;
    std::map<std::string, SignalSet> dependencies;
    std::set<std::string> parameters;
    VectorField field;

    std::size_t dimension() const noexcept { return signal_names.size(); }
    SignalSet writes() const;
    SignalSet reads() const;

    /// Zero flow over the given layout (no writes, no reads).
    static ContinuousDynamics zero(std::vector<std::string> signal_names);
};

struct Guard {
    std::string label;
    SignalSet reads;
    std::set<std::string> parameters;
    GuardPredicate predicate;
};

struct Transition {
    std::string target;
    SignalSet reads;
    SignalSet writes;
    std::set<std::string> parameters;
    /// Applied in place to the pre-transition state. Empty means identity.
    ResetMap reset;
};

/// One element of Q together with its flow, its jump set and its transition map.
struct Mode {
    std::string name;
    ContinuousDynamics dynamics;
    std::vector<Guard> guards;                     // declaration order is the tie-break
    std::map<std::string, Transition> transitions; // keyed by guard label
    /// Simulation may end early here once no guard exists and the flow is zero.
    bool terminal = false;

    const Transition& transition_for(const std::string& guard_label) const;
};

/// H = (Q, Sigma, A, G) over a single named state layout shared by every mode.
class HybridSystem {
  public:
    HybridSystem() = default;

    /// Validates the structure; throws ConfigurationError on any broken invariant.
    HybridSystem(std::vector<std::string> signals, std::vector<Mode> modes, std::string initial_mode,
                 ConfigSpace parameters = {}, std::map<std::string, std::string> initial_values = {});

    const std::vector<std::string>& signals() const noexcept { return signals_; }
    const std::vector<Mode>& modes() const noexcept { return modes_; }
    const std::string& initial_mode() const noexcept { return initial_mode_; }
    const ConfigSpace& parameters() const noexcept { return parameters_; }

    /// Signal name -> parameter carrying its initial value.
    const std::map<std::string, std::string>& initial_values() const noexcept { return initial_values_; }

    std::size_t dimension() const noexcept { return signals_.size(); }
    ModeId mode_id(const std::string& name) const;
    const Mode& mode(const std::string& name) const;
    const Mode& mode(std::size_t index) const { return modes_.at(index); }
    bool has_mode(const std::string& name) const;
    std::optional<std::size_t> signal_index(const std::string& name) const;
    bool has_signal(const std::string& name) const { return signal_index(name).has_value(); }

    /// Initial state taken from `initial_values`; unmapped signals start at 0.
    State initial_state(const Configuration& mu) const;

    /// Terminal mode without guards whose flow `dx` (evaluated at the current state) is zero.
    bool settled(std::size_t mode_index, std::span<const double> dx) const;

  private:
    std::vector<std::string> signals_;
    std::vector<Mode> modes_;
    std::string initial_mode_;
    ConfigSpace parameters_;
    std::map<std::string, std::string> initial_values_;
    std::map<std::string, std::size_t> mode_lookup_;
};

struct TraceEvent {
    double time = 0.0;
    std::string guard;
    std::string from;
    std::string to;

    bool operator==(const TraceEvent&) const = default;
};

enum class TraceEnd { Horizon, Settled };

/// Uniformly sampled execution: one row of signal values per integration step.
///
/// Stored column-per-sample in a flat row-major buffer; `row(i)` views sample i.
class Trace {
  public:
    Trace() = default;
    Trace(double dt, std::vector<std::string> signals, std::vector<std::string> modes);

    double dt() const noexcept { return dt_; }
    const std::vector<std::string>& signals() const noexcept { return signals_; }
    const std::vector<std::string>& modes() const noexcept { return modes_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<TraceEvent>& events() const noexcept { return events_; }
    TraceEnd end() const noexcept { return end_; }

    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    double time(std::size_t i) const { return times_.at(i); }
    double end_time() const { return times_.empty() ? 0.0 : times_.back(); }
    const std::string& mode(std::size_t i) const { return modes_.at(mode_index_.at(i)); }
    std::size_t mode_index(std::size_t i) const { return mode_index_.at(i); }
    std::span<const double> row(std::size_t i) const;
    double value(std::size_t i, std::size_t signal) const { return values_[i * signals_.size() + signal]; }
    double value(std::size_t i, const std::string& signal) const;

    std::optional<std::size_t> signal_index(const std::string& name) const;
    std::vector<double> column(const std::string& signal) const;

    void add_sample(double t, std::size_t mode_index, std::span<const double> values);
    void add_event(TraceEvent event) { events_.push_back(std::move(event)); }
    void set_end(TraceEnd end) noexcept { end_ = end; }
    void reserve(std::size_t samples);

    bool operator==(const Trace&) const = default;

  private:
    double dt_ = 0.0;
    std::vector<std::string> signals_;
    std::vector<std::string> modes_;
    std::vector<double> times_;
    std::vector<std::size_t> mode_index_;
    std::vector<double> values_;
    std::vector<TraceEvent> events_;
    TraceEnd end_ = TraceEnd::Horizon;
};

struct StepResult {
    std::size_t mode = 0;
    State state;
    std::optional<std::string> fired_guard;
};

/// Hybrid state used as a simulation starting point.
struct HybridState {
    std::string mode;
    State state;
};

/// One forward-Euler step in the current mode followed by a guard check in
/// declaration order. On a firing guard the reset is applied and the target mode returned.
StepResult step(const HybridSystem& system, std::size_t mode, std::span<const double> state,
                const Configuration& mu, double dt);

/// Index of the first guard of `mode` whose predicate holds at `x`, if any.
std::optional<std::size_t> first_enabled_guard(const HybridSystem& system, std::size_t mode,
                                               std::span<const double> x, const Configuration& mu);

/// Fixed-step simulation over [0, horizon] starting in the system's initial mode.
///
/// Sample k holds the pre-transition state at t = k*dt. Guards are checked on every
/// sample (including t = 0); a firing guard records an event at that sample time and
/// the reset state is what the next integration step starts from. The run stops early
/// once a terminal mode has settled.
Trace simulate(const HybridSystem& system, std::span<const double> initial_state, const Configuration& mu,
               double dt, double horizon);

/// Same as above, starting from an explicit hybrid state.
Trace simulate(const HybridSystem& system, const HybridState& start, const Configuration& mu, double dt,
               double horizon);

/// Restricts a trace to `signals` (in the requested order); times, modes and events are kept.
Trace project_trace(const Trace& trace, const std::vector<std::string>& signals);

} // namespace hdsf

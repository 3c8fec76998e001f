#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hdsf/config.hpp"
#include "hdsf/hybrid.hpp"
#include "hdsf/stl.hpp"

namespace hdsf {

/// Where relevance analysis starts. Defaults to the system's initial mode.
struct ReductionOptions {
    std::optional<std::string> entry_mode;
};

/// Audit record of a reduction: which modes, guards and signals survive and why.
struct RelevanceReport {
    std::string entry_mode;
    std::vector<std::string> modes_kept;
    std::vector<std::string> modes_dropped;
    /// mode -> guard labels kept (the surviving jump sets and transition maps).
    std::map<std::string, std::vector<std::string>> guards_kept;
    std::map<std::string, std::vector<std::string>> guards_dropped;
    SignalSet signals_kept;
    /// "mode:NAME", "guard:MODE/LABEL" or "signal:NAME" -> explanation.
    std::map<std::string, std::string> reasons;

    bool keeps_mode(const std::string& name) const;
};

/// The executable surrogate: H_phi over the kept modes and projected state.
struct ReducedSystem {
    HybridSystem system;
    RelevanceReport report;
    ConfigSpace parameter_space;
};

/// Signals the property reads plus their dataflow closure over the behaviour reachable
/// from the entry mode. A guard is followed only when every signal it reads is already
/// in the closure; flows and resets of reachable modes that write a closure signal
/// contribute the signals they read. Throws SpecificationError when the property names
/// a signal or `$parameter` the system does not declare.
SignalSet relevant_signals(const stl::Formula& formula, const HybridSystem& system,
                           const ReductionOptions& options = {});

/// Mode and guard selection for a fixed signal set. A mode is kept when it is reachable
/// from the entry over guards that read only kept signals and it writes or guards on a
/// kept signal, or lies on a path between two such modes. Guards survive when they read
/// only kept signals and both ends are kept. Throws ReductionError if the entry would be dropped.
RelevanceReport relevant_modes(const HybridSystem& system, const SignalSet& signals,
                               const ReductionOptions& options = {});

/// Assembles H_phi. Kept modes use `condensed_dynamics[mode]` when supplied (over any
/// ordering of the kept signals), otherwise the original flow restricted to the kept
/// signals. Throws ProjectionError when a kept flow, guard or reset reads a dropped signal.
ReducedSystem build_surrogate(const HybridSystem& system, const stl::Formula& formula,
                              const std::map<std::string, ContinuousDynamics>& condensed_dynamics = {},
                              const ReductionOptions& options = {});

/// True iff no kept flow, guard or reset reads a signal outside the reduced state.
bool verify_projection_closure(const ReducedSystem& rs);

/// Deterministic JSON rendering of a report for audit logs.
std::string to_json_text(const RelevanceReport& report);

} // namespace hdsf

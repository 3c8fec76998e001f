#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hdsf/config.hpp"
#include "hdsf/error.hpp"
#include "hdsf/hybrid.hpp"
#include "hdsf/margins.hpp"
#include "hdsf/reduction.hpp"
#include "hdsf/stl.hpp"

namespace hdsf {

/// Seeded random stream. Draws are computed from raw 64-bit engine output so that
/// logs are reproducible across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for one trial of a campaign.
    static Rng for_trial(std::uint64_t campaign_seed, std::uint64_t trial);

    double uniform();                     // [0, 1)
    double uniform(double lo, double hi); // [lo, hi); lo when lo == hi
    double normal();
    std::uint64_t below(std::uint64_t n);
    bool coin(double p) { return uniform() < p; }

  private:
    std::mt19937_64 engine_;
};

/// Uniform draw inside the bounds; ordering violations are repaired by resampling
/// the offending member within its feasible sub-interval. Throws SpaceError when the
/// space is infeasible.
Configuration generate(const ConfigSpace& space, Rng& rng);

/// Clamps to the bounds and repairs ordering constraints (used after mutation).
Configuration repair(Configuration config, const ConfigSpace& space, Rng& rng);

struct MutationOptions {
    /// Global multiplier on every perturbation; 0 turns mutation into the identity.
    double step = 1.0;
    /// Exploration standard deviation as a fraction of each parameter's range.
    double exploration = 0.1;
    /// Margins at or below these magnitudes count as near the decision boundary.
    double near_battery = 5.0;
    double near_altitude = 10.0;
    /// Floor on the boundary-seeking noise.
    double min_sigma_battery = 0.1;
    double min_sigma_altitude = 0.5;
    /// Parameters steered by the margins; the band edges are read from the configuration.
    std::string battery_parameter = "battery_init";
    std::string altitude_parameter = "altitude_init";
    std::string band_lower = "min_deploy_alt";
    std::string band_upper = "max_deploy_alt";
};

/// Perturbs a random non-empty subset of parameters. Battery and altitude move toward
/// the controller's decision boundaries when the feedback margins are small; everything
/// else takes a Gaussian exploration step. The result always lies in `space`.
Configuration mutate(const Configuration& config, const ConfigSpace& space, const MarginPoint& feedback, Rng& rng,
                     const MutationOptions& options = {});

/// Simulation fault raised inside a trial, with the configuration that caused it.
class TrialFault : public Error {
  public:
    TrialFault(const SimulationFault& fault, Configuration config);
    const Configuration& config() const noexcept { return config_; }

  private:
    Configuration config_;
};

struct TrialOutcome {
    stl::Verdict verdict;
    Trace trace;
    /// The horizon was extended once because the violating obligation ran past the trace end.
    bool extended = false;
};

/// Simulates `system` from `start_mode` (its initial mode when empty) with the initial
/// state taken from `config`, optionally projects the trace, and judges it. When the
/// verdict is Violated only because the obligation window runs past a horizon-truncated
/// trace, the run is repeated once with the horizon extended by the formula's largest
/// time bound and judged on that trace.
TrialOutcome run_trial(const HybridSystem& system, const Configuration& config, const stl::Formula& formula,
                       double dt, double horizon, const std::string& start_mode = {},
                       const std::vector<std::string>& projection = {});

TrialOutcome run_trial(const ReducedSystem& surrogate, const Configuration& config, const stl::Formula& formula,
                       double dt, double horizon);

struct ViolationRecord {
    std::size_t trial = 0;
    Configuration config;
    Trace trace;
    std::string trace_file;
    double witness_time = 0.0;
    std::string signature;
};

/// Altitude side of the band at the decision point plus the configuration quantized to
/// a grid of one unit per parameter (metres, percentage points, seconds).
std::string violation_signature(const Configuration& config, const MarginPoint& margins);

/// Inserts the record's signature; true iff it was not seen before.
bool dedup(const ViolationRecord& record, std::set<std::string>& seen);

struct CampaignSummary {
    std::size_t total_runs = 0;
    std::size_t violating_runs = 0;
    std::size_t unique_violations = 0;
    double violation_rate = 0.0; // unique_violations / total_runs
    std::uint64_t seed = 0;
    double wall_time = 0.0;
    std::size_t faults = 0;
};

struct TrialRecord {
    std::size_t trial = 0;
    Configuration config;
    stl::Outcome verdict = stl::Outcome::Satisfied;
    MarginPoint margins;
    bool mutated = false;
    bool fault = false;
};

struct CampaignOptions {
    std::size_t runs = 200;
    /// Exploratory budget; results then depend on machine speed.
    std::optional<double> wall_time_seconds;
    double dt = 0.05;
    double horizon = 120.0;
    /// Trials of one batch are planned from the state at the end of the previous batch,
    /// so logs do not depend on the thread count.
    std::size_t batch_size = 32;
    unsigned threads = 1;
    double mutation_probability = 0.5;
    MutationOptions mutation;
    double airborne_min_altitude = 0.5;
    /// Abort when more than this fraction of trials fault.
    double max_fault_fraction = 0.1;
    /// Prior configurations kept as mutation parents.
    std::size_t pool_capacity = 1024;
    /// Values for parameters the system needs but the space does not search.
    Configuration base;
};

struct CampaignResult {
    CampaignSummary summary;
    std::vector<ViolationRecord> violations;
    std::vector<TrialRecord> trials;
};

/// Generate / mutate / run / dedup loop over `space` seeded by `space.rng_seed`.
CampaignResult campaign(const ReducedSystem& surrogate, const stl::Formula& formula, const ConfigSpace& space,
                        const CampaignOptions& options);

} // namespace hdsf

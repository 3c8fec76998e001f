#include "hdsf/falsification.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace hdsf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform in [lo, hi]; used where the closed upper end must be reachable.
double draw_closed(Rng& rng, double lo, double hi) {
    if (!(hi > lo)) {
        return lo;
    }
    return std::min(hi, rng.uniform(lo, std::nextafter(hi, std::numeric_limits<double>::infinity())));
}

void repair_ordering(Configuration& c, const ConfigSpace& space, Rng& rng) {
    const auto order = space.topological_ordering();
    // Raising an upper member can only break constraints processed later, lowering a
    // lower member can break earlier ones; a few sweeps settle any acyclic graph.
    for (std::size_t sweep = 0; sweep <= order.size() + 1; ++sweep) {
        bool clean = true;
        for (const auto& oc : order) {
            const double lo_v = c.at(oc.lower);
            const double hi_v = c.at(oc.upper);
            if (lo_v < hi_v) {
                continue;
            }
            clean = false;
            const ParameterBounds* ub = space.find(oc.upper);
            const ParameterBounds* lb = space.find(oc.lower);
            if (lo_v < ub->hi) {
                const double from = std::max(ub->lo, std::nextafter(lo_v, ub->hi));
                c.set(oc.upper, draw_closed(rng, from, ub->hi));
            } else if (hi_v > lb->lo) {
                const double to = std::min(lb->hi, std::nextafter(hi_v, lb->lo));
                c.set(oc.lower, draw_closed(rng, lb->lo, to));
            } else {
                throw SpaceError("cannot satisfy " + oc.lower + " < " + oc.upper + " within bounds");
            }
        }
        if (clean) {
            return;
        }
    }
    throw SpaceError("ordering repair did not converge");
}

bool near_boundary(const MarginPoint& m, const Configuration& c, const MutationOptions& o) {
    if (m.verdict == stl::Outcome::Violated) {
        return true;
    }
    if (m.altitude_margin != 0.0 && std::abs(m.altitude_margin) <= o.near_altitude) {
        return true;
    }
    if (m.in_band && c.contains(o.altitude_parameter) && c.contains(o.band_lower) && c.contains(o.band_upper)) {
        const double a = c.at(o.altitude_parameter);
        if (std::min(a - c.at(o.band_lower), c.at(o.band_upper) - a) <= o.near_altitude) {
            return true;
        }
    }
    return (!m.crossed || m.decision_time == 0.0) && std::abs(m.battery_margin) <= o.near_battery;
}

std::string trace_file_name(std::size_t trial) {
    std::string digits = std::to_string(trial);
    if (digits.size() < 6) {
        digits.insert(0, 6 - digits.size(), '0');
    }
    return "traces/trial_" + digits + ".jsonl";
}

} // namespace

Rng Rng::for_trial(std::uint64_t campaign_seed, std::uint64_t trial) {
    return Rng(splitmix64(splitmix64(campaign_seed) ^ splitmix64(trial + 0x632BE59BD9B4E019ULL)));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

double Rng::uniform(double lo, double hi) {
    if (!(hi > lo)) {
        return lo;
    }
    const double v = lo + (hi - lo) * uniform();
    return v < hi ? v : lo; // guards against rounding up to hi
}

double Rng::normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        return 0;
    }
    const std::uint64_t limit = (0 - n) % n; // 2^64 mod n, rejected to stay unbiased
    std::uint64_t x = engine_();
    while (x < limit) {
        x = engine_();
    }
    return x % n;
}

Configuration generate(const ConfigSpace& space, Rng& rng) {
    space.validate();
    Configuration c;
    for (const auto& b : space.bounds) {
        c.set(b.name, draw_closed(rng, b.lo, b.hi));
    }
    repair_ordering(c, space, rng);
    return c;
}

Configuration repair(Configuration config, const ConfigSpace& space, Rng& rng) {
    for (const auto& b : space.bounds) {
        const double v = config.at(b.name);
        if (!std::isfinite(v)) {
            config.set(b.name, std::isnan(v) ? b.lo : (v > 0 ? b.hi : b.lo));
        } else {
            config.set(b.name, std::clamp(v, b.lo, b.hi));
        }
    }
    repair_ordering(config, space, rng);
    return config;
}

Configuration mutate(const Configuration& config, const ConfigSpace& space, const MarginPoint& feedback, Rng& rng,
                     const MutationOptions& options) {
    if (options.step == 0.0 || space.bounds.empty()) {
        return config;
    }
    std::vector<const ParameterBounds*> chosen;
    for (const auto& b : space.bounds) {
        if (rng.coin(0.5)) {
            chosen.push_back(&b);
        }
    }
    if (chosen.empty()) {
        chosen.push_back(&space.bounds[rng.below(space.bounds.size())]);
    }

    Configuration out = config;
    for (const ParameterBounds* b : chosen) {
        const double old = config.at(b->name);
        double move = 0.0;
        bool seeking = false;
        if (b->name == options.battery_parameter) {
            const double m = feedback.battery_margin;
            if ((!feedback.crossed || feedback.decision_time == 0.0) && std::abs(m) <= options.near_battery) {
                move = -rng.uniform() * m + rng.normal() * std::max(std::abs(m), options.min_sigma_battery);
                seeking = true;
            }
        } else if (b->name == options.altitude_parameter) {
            // d points from the decision altitude to the nearest band edge
            double d = -feedback.altitude_margin;
            if (feedback.in_band && config.contains(options.band_lower) && config.contains(options.band_upper)) {
                const double lo = config.at(options.band_lower);
                const double hi = config.at(options.band_upper);
                d = (old - lo <= hi - old) ? lo - old : hi - old;
            }
            if ((feedback.altitude_margin != 0.0 || feedback.in_band) && std::abs(d) <= options.near_altitude) {
                move = rng.uniform() * d + rng.normal() * std::max(std::abs(d), options.min_sigma_altitude);
                seeking = true;
            }
        }
        if (!seeking) {
            move = rng.normal() * options.exploration * b->width();
        }
        out.set(b->name, old + options.step * move);
    }
    return repair(std::move(out), space, rng);
}

TrialFault::TrialFault(const SimulationFault& fault, Configuration config)
    : Error(std::string(fault.what()) + " for configuration " + to_json_text(config)), config_(std::move(config)) {}

TrialOutcome run_trial(const HybridSystem& system, const Configuration& config, const stl::Formula& formula,
                       double dt, double horizon, const std::string& start_mode,
                       const std::vector<std::string>& projection) {
    const HybridState start{start_mode.empty() ? system.initial_mode() : start_mode, system.initial_state(config)};
    const stl::Formula bound = stl::bind(formula, config);

    auto execute = [&](double h) {
        Trace t;
        try {
            t = simulate(system, start, config, dt, h);
        } catch (const SimulationFault& f) {
            throw TrialFault(f, config);
        }
        return projection.empty() ? t : project_trace(t, projection);
    };

    TrialOutcome out;
    out.trace = execute(horizon);
    out.verdict = stl::evaluate(bound, out.trace);
    if (out.verdict.outcome == stl::Outcome::Violated && out.trace.end() == TraceEnd::Horizon) {
        const double reach = stl::max_time_bound(bound);
        const bool truncated =
            !out.verdict.witness_time || *out.verdict.witness_time + reach > out.trace.end_time() + 1e-9;
        if (reach > 0.0 && truncated) {
            out.trace = execute(horizon + reach + dt);
            out.verdict = stl::evaluate(bound, out.trace);
            out.extended = true;
        }
    }
    return out;
}

TrialOutcome run_trial(const ReducedSystem& surrogate, const Configuration& config, const stl::Formula& formula,
                       double dt, double horizon) {
    return run_trial(surrogate.system, config, formula, dt, horizon);
}

std::string violation_signature(const Configuration& config, const MarginPoint& margins) {
    std::string sig;
    if (margins.altitude_margin < 0.0) {
        sig = "below";
    } else if (margins.altitude_margin > 0.0) {
        sig = "above";
    } else {
        sig = "inside";
    }
    for (const auto& [name, value] : config.values()) {
        sig += '|';
        sig += name;
        sig += '=';
        sig += std::to_string(static_cast<long long>(std::floor(value)));
    }
    return sig;
}

bool dedup(const ViolationRecord& record, std::set<std::string>& seen) {
    return seen.insert(record.signature).second;
}

CampaignResult campaign(const ReducedSystem& surrogate, const stl::Formula& formula, const ConfigSpace& space,
                        const CampaignOptions& options) {
    space.validate();
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };

    CampaignResult result;
    result.summary.seed = space.rng_seed;
    std::set<std::string> seen;
    std::vector<std::pair<Configuration, MarginPoint>> pool;
    const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
    const unsigned threads = std::max(1u, options.threads);

    struct Slot {
        Configuration config;
        bool mutated = false;
        std::optional<TrialOutcome> outcome;
        std::string fault;
    };

    std::string first_fault;
    std::size_t done = 0;
    while (done < options.runs) {
        if (options.wall_time_seconds && elapsed() >= *options.wall_time_seconds) {
            break;
        }
        const std::size_t n = std::min(batch_size, options.runs - done);
        std::vector<Slot> slots(n);
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = Rng::for_trial(space.rng_seed, done + i);
            Configuration c;
            if (!pool.empty() && rng.coin(options.mutation_probability)) {
                const auto& parent = pool[rng.below(pool.size())];
                c = mutate(parent.first, space, parent.second, rng, options.mutation);
                slots[i].mutated = true;
            } else {
                c = generate(space, rng);
            }
            for (const auto& [name, value] : options.base.values()) {
                if (!c.contains(name)) {
                    c.set(name, value);
                }
            }
            slots[i].config = std::move(c);
        }

        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::atomic<bool> failed{false};
        auto worker = [&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    slots[i].outcome = run_trial(surrogate, slots[i].config, formula, options.dt, options.horizon);
                } catch (const TrialFault& f) {
                    slots[i].fault = f.what();
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        };
        if (threads == 1 || n == 1) {
            worker();
        } else {
            std::vector<std::thread> pool_threads;
            for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t) {
                pool_threads.emplace_back(worker);
            }
            for (auto& t : pool_threads) {
                t.join();
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }

        // Merge in trial order so the logs do not depend on scheduling.
        for (std::size_t i = 0; i < n; ++i) {
            Slot& s = slots[i];
            TrialRecord rec;
            rec.trial = done + i;
            rec.config = s.config;
            rec.mutated = s.mutated;
            if (!s.outcome) {
                rec.fault = true;
                ++result.summary.faults;
                if (first_fault.empty()) {
                    first_fault = s.fault;
                }
                result.trials.push_back(std::move(rec));
                continue;
            }
            const TrialOutcome& o = *s.outcome;
            rec.verdict = o.verdict.outcome;
            rec.margins = compute_margins(o.trace, s.config, o.verdict.outcome, options.airborne_min_altitude);
            if (rec.verdict == stl::Outcome::Violated) {
                ++result.summary.violating_runs;
                ViolationRecord v;
                v.trial = rec.trial;
                v.config = s.config;
                v.witness_time = o.verdict.witness_time.value_or(0.0);
                v.signature = violation_signature(s.config, rec.margins);
                if (dedup(v, seen)) {
                    v.trace = o.trace;
                    v.trace_file = trace_file_name(rec.trial);
                    result.violations.push_back(std::move(v));
                }
            }
            if (near_boundary(rec.margins, s.config, options.mutation)) {
                pool.emplace_back(s.config, rec.margins);
                if (pool.size() > options.pool_capacity) {
                    pool.erase(pool.begin());
                }
            }
            result.trials.push_back(std::move(rec));
        }
        done += n;

        const bool last = done >= options.runs;
        if ((done >= 20 || last) &&
            static_cast<double>(result.summary.faults) > options.max_fault_fraction * static_cast<double>(done)) {
            std::string msg = std::to_string(result.summary.faults) + " of " + std::to_string(done) +
                              " trials hit simulation faults; first: ";
            throw CampaignAborted(msg + first_fault);
        }
    }

    result.summary.total_runs = done;
    result.summary.unique_violations = result.violations.size();
    result.summary.violation_rate =
        done == 0 ? 0.0 : static_cast<double>(result.summary.unique_violations) / static_cast<double>(done);
    result.summary.wall_time = elapsed();
    return result;
}

} // namespace hdsf

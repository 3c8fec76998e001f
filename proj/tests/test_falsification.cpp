#include <doctest.h>

#include <cmath>
#include <limits>

#include "hdsf/drone.hpp"
#include "hdsf/error.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/report.hpp"
#include "oracles.hpp"

using namespace hdsf;
using drone::ControllerVariant;

namespace {

const drone::DroneParams kParams;

const ReducedSystem& surrogate(ControllerVariant v) {
    static const ReducedSystem buggy = drone::build_surrogate_system(kParams, ControllerVariant::Buggy);
    static const ReducedSystem patched = drone::build_surrogate_system(kParams, ControllerVariant::Patched);
    return v == ControllerVariant::Buggy ? buggy : patched;
}

bool predicted(const Configuration& c, double horizon) {
    return oracle::buggy_violation(c.at("battery_init"), c.at("altitude_init"), c.at("min_deploy_alt"),
                                   c.at("max_deploy_alt"), c.at("low_batt_threshold"), kParams.cruise_drain, horizon);
}

CampaignOptions options(std::size_t runs) {
    CampaignOptions o;
    o.runs = runs;
    o.dt = kParams.dt;
    o.horizon = kParams.horizon;
    return o;
}

} // namespace

TEST_SUITE("falsification") {

TEST_CASE("random streams") {
    Rng a = Rng::for_trial(7, 3);
    Rng b = Rng::for_trial(7, 3);
    Rng c = Rng::for_trial(7, 4);
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x != c.uniform());
    Rng r(1);
    for (int k = 0; k < 10000; ++k) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(r.below(7) < 7);
    }
}

TEST_CASE("generated configurations respect the ordering") {
    const ConfigSpace space = drone::default_space(5);
    Rng rng(5);
    for (int k = 0; k < 10000; ++k) {
        const Configuration c = generate(space, rng);
        REQUIRE(c.at("min_deploy_alt") < c.at("max_deploy_alt"));
        REQUIRE(space.admits(c));
    }
}

TEST_CASE("tight ordering is repaired inside the bounds") {
    ConfigSpace space;
    space.bounds = {{"lo", 0.0, 10.0}, {"hi", 0.0, 10.0}, {"top", 0.0, 10.0}};
    space.ordering = {{"lo", "hi"}, {"hi", "top"}};
    Rng rng(9);
    for (int k = 0; k < 5000; ++k) {
        const Configuration c = generate(space, rng);
        REQUIRE(space.admits(c));
    }
}

TEST_CASE("point bounds give that configuration") {
    ConfigSpace space;
    space.bounds = {{"a", 2.5, 2.5}, {"b", -1.0, -1.0}};
    Rng rng(0);
    CHECK(generate(space, rng) == Configuration{{"a", 2.5}, {"b", -1.0}});
}

TEST_CASE("infeasible space") {
    ConfigSpace space;
    space.bounds = {{"lo", 50.0, 60.0}, {"hi", 10.0, 40.0}};
    space.ordering = {{"lo", "hi"}};
    Rng rng(0);
    CHECK_THROWS_AS(generate(space, rng), SpaceError);
}

TEST_CASE("generated marginals are uniform") {
    const ConfigSpace space = drone::default_space(123);
    Rng rng(123);
    std::map<std::string, std::vector<double>> draws;
    const std::size_t n = 10000;
    for (std::size_t k = 0; k < n; ++k) {
        const Configuration c = generate(space, rng);
        for (const auto& [name, v] : c.values()) {
            draws[name].push_back(v);
        }
    }
    // critical value of the one-sample KS test at alpha = 0.05
    const double critical = 1.358 / std::sqrt(static_cast<double>(n));
    for (const auto& b : space.bounds) {
        CAPTURE(b.name);
        CHECK(oracle::ks_uniform(draws[b.name], b.lo, b.hi) < critical);
    }
}

TEST_CASE("battery mutation moves toward the threshold") {
    const ConfigSpace space = drone::default_space();
    Configuration c = drone::make_configuration(kParams, 10.1, 20.0);
    MarginPoint fb;
    fb.battery_margin = 0.1;
    fb.altitude_margin = -40.0;
    Rng rng(31);
    int changed = 0;
    int near = 0;
    for (int k = 0; k < 1000; ++k) {
        const Configuration m = mutate(c, space, fb, rng);
        if (m.at("battery_init") != c.at("battery_init")) {
            ++changed;
            near += std::abs(m.at("battery_init") - kParams.low_batt_threshold) <= 0.5;
        }
    }
    REQUIRE(changed > 300);
    CHECK(static_cast<double>(near) / changed >= 0.9);
}

TEST_CASE("altitude mutation moves toward the nearest band edge") {
    const ConfigSpace space = drone::default_space();
    Configuration c = drone::make_configuration(kParams, 30.0, 57.0);
    MarginPoint fb;
    fb.altitude_margin = -3.0;
    fb.crossed = true;
    fb.decision_time = 25.0;
    Rng rng(4);
    int changed = 0;
    int closer = 0;
    for (int k = 0; k < 1000; ++k) {
        const Configuration m = mutate(c, space, fb, rng);
        if (m.at("altitude_init") != 57.0) {
            ++changed;
            closer += std::abs(m.at("altitude_init") - 60.0) < 10.0;
        }
    }
    CHECK(static_cast<double>(closer) / changed >= 0.9);
}

TEST_CASE("zero step is the identity") {
    const ConfigSpace space = drone::default_space();
    const Configuration c = drone::make_configuration(kParams, 42.0, 33.0);
    MutationOptions o;
    o.step = 0.0;
    Rng rng(1);
    for (int k = 0; k < 100; ++k) {
        CHECK(mutate(c, space, MarginPoint{}, rng, o) == c);
    }
}

TEST_CASE("mutation never leaves the space") {
    const ConfigSpace space = drone::default_space();
    Rng rng(77);
    Configuration c = generate(space, rng);
    MutationOptions wild;
    wild.step = 25.0;
    for (int k = 0; k < 10000; ++k) {
        MarginPoint fb;
        fb.battery_margin = rng.uniform(-6.0, 6.0);
        fb.altitude_margin = rng.uniform(-12.0, 12.0);
        fb.in_band = rng.coin(0.3);
        c = mutate(c, space, fb, rng, k % 2 ? wild : MutationOptions{});
        REQUIRE(c.at("min_deploy_alt") < c.at("max_deploy_alt"));
        REQUIRE(space.admits(c));
    }
}

TEST_CASE("low battery below the band violates on the buggy surrogate") {
    const auto c = drone::make_configuration(kParams, 10.0, 20.0);
    const auto o = run_trial(surrogate(ControllerVariant::Buggy), c, drone::property(kParams), kParams.dt,
                             kParams.horizon);
    CHECK(o.verdict.outcome == stl::Outcome::Violated);
    CHECK_FALSE(o.extended);
    for (std::size_t k = 0; k < o.trace.size(); ++k) {
        REQUIRE(o.trace.value(k, "deployed_flag") == 0.0);
        REQUIRE(o.trace.mode(k) == "GOTO");
    }
    const auto p = run_trial(surrogate(ControllerVariant::Patched), c, drone::property(kParams), kParams.dt,
                             kParams.horizon);
    CHECK(p.verdict.satisfied());
}

TEST_CASE("full battery over a short mission") {
    const auto c = drone::make_configuration(kParams, 100.0, 20.0);
    CHECK(run_trial(surrogate(ControllerVariant::Buggy), c, drone::property(kParams), 0.05, 30.0).verdict.satisfied());
}

TEST_CASE("deployment decided on the last sample extends the horizon once") {
    const auto c = drone::make_configuration(kParams, 10.02, 20.0);
    const auto patched = run_trial(surrogate(ControllerVariant::Patched), c, drone::property(kParams), 0.05, 0.05);
    CHECK(patched.extended);
    CHECK(patched.verdict.satisfied());
    const auto buggy = run_trial(surrogate(ControllerVariant::Buggy), c, drone::property(kParams), 0.05, 0.05);
    CHECK(buggy.extended);
    CHECK_FALSE(buggy.verdict.satisfied());
}

TEST_CASE("verdicts match the closed-form predicate") {
    const ConfigSpace space = drone::default_space(99);
    const auto phi = drone::property(kParams);
    for (std::size_t k = 0; k < 1000; ++k) {
        Rng rng = Rng::for_trial(99, k);
        const Configuration c = generate(space, rng);
        const auto b = run_trial(surrogate(ControllerVariant::Buggy), c, phi, kParams.dt, kParams.horizon);
        CAPTURE(to_json_text(c));
        REQUIRE((b.verdict.outcome == stl::Outcome::Violated) == predicted(c, kParams.horizon));
        REQUIRE((b.verdict.outcome == stl::Outcome::Violated) ==
                oracle::scan_violation(b.trace, c.at("min_deploy_alt"), c.at("max_deploy_alt"),
                                       c.at("low_batt_threshold"), c.at("delta")));
        const auto p = run_trial(surrogate(ControllerVariant::Patched), c, phi, kParams.dt, kParams.horizon);
        REQUIRE(p.verdict.satisfied());
    }
}

TEST_CASE("simulation faults carry the configuration") {
    ContinuousDynamics d = ContinuousDynamics::zero({"battery", "altitude", "deployed_flag"});
    d.dependencies["battery"] = {};
    d.field = [](std::span<const double>, const Configuration&, std::span<double> dx) {
        dx[0] = std::numeric_limits<double>::quiet_NaN();
        dx[1] = dx[2] = 0.0;
    };
    ConfigSpace space;
    space.bounds = {{"battery_init", 0.0, 1.0}};
    const HybridSystem sys({"battery", "altitude", "deployed_flag"}, {Mode{"M", d, {}, {}, false}}, "M", space,
                           {{"battery", "battery_init"}});
    const Configuration c{{"battery_init", 0.5}};
    try {
        run_trial(sys, c, stl::parse("battery > 0"), 0.1, 1.0);
        FAIL("expected a fault");
    } catch (const TrialFault& f) {
        CHECK(f.config() == c);
        CHECK(std::string(f.what()).find("battery_init") != std::string::npos);
    }

    const ReducedSystem rs{sys, {}, space};
    CHECK_THROWS_AS(campaign(rs, stl::parse("battery > 0"), space, options(40)), CampaignAborted);
}

TEST_CASE("signatures") {
    const auto a = drone::make_configuration(kParams, 10.2, 20.4);
    const auto b = drone::make_configuration(kParams, 10.7, 20.9);
    MarginPoint below;
    below.altitude_margin = -40.0;
    MarginPoint above;
    above.altitude_margin = 5.0;
    std::set<std::string> seen;
    ViolationRecord r{0, a, {}, {}, 0.0, violation_signature(a, below)};
    CHECK(dedup(r, seen));
    CHECK_FALSE(dedup(r, seen));
    r.config = b;
    r.signature = violation_signature(b, below);
    CHECK_FALSE(dedup(r, seen));

    const auto high = drone::make_configuration(kParams, 10.2, 85.4);
    r.signature = violation_signature(high, above);
    CHECK(dedup(r, seen));
    CHECK(violation_signature(a, below) != violation_signature(a, above));
}

TEST_CASE("patched campaign finds nothing") {
    for (std::uint64_t seed : {1ULL, 7ULL, 2024ULL}) {
        const auto r = campaign(surrogate(ControllerVariant::Patched), drone::property(kParams),
                                drone::default_space(seed), options(200));
        CHECK(r.summary.total_runs == 200);
        CHECK(r.summary.unique_violations == 0);
        CHECK(r.summary.violating_runs == 0);
        CHECK(r.trials.size() == 200);
    }
}

TEST_CASE("buggy campaign: logged violations are exactly the predicted ones") {
    const auto r = campaign(surrogate(ControllerVariant::Buggy), drone::property(kParams),
                            drone::default_space(11), options(300));
    std::size_t positives = 0;
    for (const auto& t : r.trials) {
        const bool v = t.verdict == stl::Outcome::Violated;
        REQUIRE(v == predicted(t.config, kParams.horizon));
        positives += v;
        if (v) {
            CHECK(t.margins.battery_margin <= 0.0);
            CHECK_FALSE(t.margins.in_band);
        }
    }
    CHECK(positives == r.summary.violating_runs);
    CHECK(r.summary.unique_violations <= r.summary.violating_runs);
    CHECK(r.summary.violation_rate ==
          doctest::Approx(static_cast<double>(r.summary.unique_violations) / r.summary.total_runs));

    std::set<std::string> seen;
    for (const auto& v : r.violations) {
        // replay: the stored trace is still a counterexample
        CHECK_FALSE(stl::evaluate(drone::property(kParams), v.trace, v.config).satisfied());
        CHECK(dedup(v, seen));
    }
    for (const auto& v : r.violations) {
        CHECK_FALSE(dedup(v, seen));
    }
    CHECK(std::any_of(r.trials.begin(), r.trials.end(), [](const TrialRecord& t) { return t.mutated; }));
}

TEST_CASE("zero budget") {
    const auto r = campaign(surrogate(ControllerVariant::Buggy), drone::property(kParams), drone::default_space(),
                            options(0));
    CHECK(r.summary.total_runs == 0);
    CHECK(r.summary.violation_rate == 0.0);
    CHECK(r.trials.empty());
    CHECK(r.violations.empty());
}

TEST_CASE("campaigns are reproducible and independent of the thread count") {
    auto run = [](unsigned threads) {
        CampaignOptions o = options(150);
        o.threads = threads;
        o.batch_size = 16;
        return campaign(surrogate(ControllerVariant::Buggy), drone::property(kParams), drone::default_space(5), o);
    };
    const auto a = run(1);
    const auto b = run(1);
    const auto c = run(3);
    CHECK(summary_json(a.summary) == summary_json(b.summary));
    CHECK(violation_jsonl(a.violations) == violation_jsonl(b.violations));
    CHECK(margins_csv(a.trials) == margins_csv(b.trials));
    CHECK(violation_jsonl(a.violations) == violation_jsonl(c.violations));
    CHECK(margins_csv(a.trials) == margins_csv(c.trials));
}

}

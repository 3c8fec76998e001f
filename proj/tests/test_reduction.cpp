#include <doctest.h>

#include <algorithm>

#include "hdsf/drone.hpp"
#include "hdsf/error.hpp"
#include "hdsf/reduction.hpp"
#include "structure.hpp"

using namespace hdsf;

namespace {

const stl::Formula kPhi = stl::builtin_phi_parametric(0.5);
const ReductionOptions kFromGoto{"GOTO"};

ContinuousDynamics flow(const std::vector<std::string>& sig, std::map<std::string, SignalSet> deps) {
    ContinuousDynamics d = ContinuousDynamics::zero(sig);
    d.dependencies = std::move(deps);
    return d;
}

Guard reads(const std::string& label, SignalSet r) {
    return Guard{label, std::move(r), {}, [](std::span<const double>, const Configuration&) { return false; }};
}

Mode mode(const std::string& name, ContinuousDynamics d) { return Mode{name, std::move(d), {}, {}, false}; }

void link(Mode& from, const std::string& label, SignalSet guard_reads, const std::string& to,
          SignalSet writes = {}, SignalSet reset_reads = {}) {
    from.guards.push_back(reads(label, std::move(guard_reads)));
    from.transitions[label] = Transition{to, std::move(reset_reads), std::move(writes), {}, {}};
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// An entry that cannot be scoped counts as keeping nothing.
std::set<std::string> kept_or_empty(const HybridSystem& sys, const SignalSet& s, const ReductionOptions& opt) {
    try {
        return as_set(relevant_modes(sys, s, opt).modes_kept);
    } catch (const ReductionError&) {
        return {};
    }
}

} // namespace

TEST_SUITE("reduction") {

TEST_CASE("drone property closure") {
    const drone::DroneParams p;
    for (auto v : {drone::ControllerVariant::Buggy, drone::ControllerVariant::Patched}) {
        const auto full = drone::build_full_system(p, v);
        CHECK(relevant_signals(kPhi, full, kFromGoto) == SignalSet{"battery", "altitude", "deployed_flag"});
    }
}

TEST_CASE("atoms over every signal keep every signal") {
    const std::vector<std::string> sig{"a", "b", "c"};
    const HybridSystem sys(sig, {mode("M", flow(sig, {{"a", {"b"}}}))}, "M");
    CHECK(relevant_signals(stl::parse("a > 0 and b > 0 and c > 0"), sys) == SignalSet{"a", "b", "c"});
}

TEST_CASE("a signal that feeds nothing the property reads is excluded") {
    // a <- b, b <- b, c <- a: the property reads a.
    const std::vector<std::string> sig{"a", "b", "c"};
    const HybridSystem sys(sig, {mode("M", flow(sig, {{"a", {"b"}}, {"b", {"b"}}, {"c", {"a"}}}))}, "M");
    CHECK(relevant_signals(stl::parse("G(a <= 1)"), sys) == SignalSet{"a", "b"});
}

TEST_CASE("resets that write the closure pull in their reads") {
    const std::vector<std::string> sig{"a", "b", "c", "d"};
    Mode m = mode("M", flow(sig, {}));
    Mode n = mode("N", flow(sig, {}));
    link(m, "go", {"a"}, "N", {"a"}, {"c"});
    const HybridSystem sys(sig, {m, n}, "M");
    CHECK(relevant_signals(stl::parse("a > 0"), sys) == SignalSet{"a", "c"});
}

TEST_CASE("unknown signal or parameter in the property") {
    const drone::DroneParams p;
    const auto full = drone::build_full_system(p, drone::ControllerVariant::Buggy);
    CHECK_THROWS_AS(relevant_signals(stl::parse("G(speed < 3)"), full), SpecificationError);
    CHECK_THROWS_AS(relevant_signals(stl::parse("G(battery < $nope)"), full), SpecificationError);
}

TEST_CASE("drone restricted mode set") {
    const drone::DroneParams p;
    for (auto v : {drone::ControllerVariant::Buggy, drone::ControllerVariant::Patched}) {
        const auto full = drone::build_full_system(p, v);
        const auto report = relevant_modes(full, {"battery", "altitude", "deployed_flag"}, kFromGoto);
        CHECK(as_set(report.modes_kept) == std::set<std::string>{"GOTO", "PARACHUTE"});
        CHECK(as_set(report.modes_dropped) == std::set<std::string>{"IDLE", "TAKE_OFF", "LAND"});
        CHECK(report.guards_kept.at("GOTO") == std::vector<std::string>{"emergency_deploy"});
        CHECK(report.guards_dropped.at("GOTO") == std::vector<std::string>{"waypoint_reached"});

        const auto two = relevant_modes(full, {"battery", "altitude"}, kFromGoto);
        CHECK(as_set(two.modes_kept) == std::set<std::string>{"GOTO", "PARACHUTE"});
    }
}

TEST_CASE("every mode is reported once with a reason") {
    const drone::DroneParams p;
    const auto full = drone::build_full_system(p, drone::ControllerVariant::Buggy);
    const auto report = relevant_modes(full, {"battery", "altitude", "deployed_flag"}, kFromGoto);
    for (const auto& m : full.modes()) {
        const bool kept = as_set(report.modes_kept).count(m.name) != 0;
        const bool dropped = as_set(report.modes_dropped).count(m.name) != 0;
        CHECK(kept != dropped);
        REQUIRE(report.reasons.count("mode:" + m.name));
        CHECK_FALSE(report.reasons.at("mode:" + m.name).empty());
    }
    const std::string json = to_json_text(report);
    CHECK(json.find("\"modes_kept\"") != std::string::npos);
    CHECK(json.find("waypoint_reached") != std::string::npos);
}

TEST_CASE("modes that all touch the kept signals are all kept") {
    const std::vector<std::string> sig{"a"};
    Mode m = mode("M", flow(sig, {{"a", {}}}));
    Mode n = mode("N", flow(sig, {{"a", {}}}));
    link(m, "go", {"a"}, "N");
    link(n, "back", {"a"}, "M");
    const HybridSystem sys(sig, {m, n}, "M");
    const auto r = relevant_modes(sys, {"a"});
    CHECK(r.modes_dropped.empty());
    CHECK(r.modes_kept.size() == 2);
}

TEST_CASE("mode behind a dropped guard is unreachable") {
    // A -> B on a, B -> C on b; keeping only a makes C unreachable.
    const std::vector<std::string> sig{"a", "b"};
    Mode a = mode("A", flow(sig, {{"a", {}}}));
    Mode b = mode("B", flow(sig, {{"a", {}}}));
    Mode c = mode("C", flow(sig, {{"a", {}}}));
    link(a, "ab", {"a"}, "B");
    link(b, "bc", {"b"}, "C");
    const HybridSystem sys(sig, {a, b, c}, "A");
    const auto r = relevant_modes(sys, {"a"});
    CHECK(as_set(r.modes_kept) == std::set<std::string>{"A", "B"});
    CHECK(r.modes_dropped == std::vector<std::string>{"C"});
    CHECK(r.reasons.at("mode:C").find("unreachable") != std::string::npos);
}

TEST_CASE("bad entry mode") {
    const std::vector<std::string> sig{"a"};
    const HybridSystem sys(sig, {mode("M", flow(sig, {}))}, "M");
    CHECK_THROWS_AS(relevant_modes(sys, {"a"}, ReductionOptions{"nope"}), ReductionError);
    CHECK_THROWS_AS(relevant_modes(sys, {}, {}), ReductionError);
}

TEST_CASE("drone surrogate from the analysis") {
    const drone::DroneParams p;
    const auto full = drone::build_full_system(p, drone::ControllerVariant::Buggy);
    const std::map<std::string, ContinuousDynamics> condensed{
        {"GOTO", drone::condensed_drone_descent(p, "GOTO")},
        {"PARACHUTE", drone::condensed_drone_descent(p, "PARACHUTE")}};
    const auto rs = build_surrogate(full, kPhi, condensed, kFromGoto);
    CHECK(rs.system.modes().size() == 2);
    CHECK(as_set(rs.system.signals()) == std::set<std::string>{"battery", "altitude", "deployed_flag"});
    CHECK(rs.system.initial_mode() == "GOTO");
    CHECK(verify_projection_closure(rs));
    CHECK(rs.parameter_space.names() == std::set<std::string>{"battery_init", "altitude_init", "min_deploy_alt",
                                                              "max_deploy_alt", "low_batt_threshold", "delta"});
    // The flow projection path (no condensed dynamics) also closes.
    CHECK(verify_projection_closure(build_surrogate(full, kPhi, {}, kFromGoto)));
}

TEST_CASE("condensed dynamics over the wrong signals are rejected") {
    const drone::DroneParams p;
    const auto full = drone::build_full_system(p, drone::ControllerVariant::Buggy);
    ContinuousDynamics wrong = ContinuousDynamics::zero({"battery", "altitude"});
    CHECK_THROWS_AS(build_surrogate(full, kPhi, {{"GOTO", wrong}}, kFromGoto), ProjectionError);
}

TEST_CASE("projected flow that reads a dropped signal") {
    const std::vector<std::string> sig{"a", "b"};
    // a's flow reads b, but the only thing tying b in is a mode the analysis never reaches,
    // so a hand-made report that keeps only a must be refused by the closure check.
    Mode m = mode("M", flow(sig, {{"a", {"b"}}}));
    const HybridSystem sys(sig, {m}, "M");
    ReducedSystem rs{sys, relevant_modes(sys, {"a"}), {}};
    CHECK_FALSE(verify_projection_closure(rs));
}

TEST_CASE("property over everything leaves the system intact") {
    const std::vector<std::string> sig{"a", "b"};
    Mode m = mode("M", flow(sig, {{"a", {"b"}}, {"b", {}}}));
    Mode n = mode("N", flow(sig, {{"b", {"a"}}}));
    link(m, "go", {"a"}, "N", {"b"}, {"a"});
    const HybridSystem sys(sig, {m, n}, "M");
    const auto rs = build_surrogate(sys, stl::parse("a > 0 or b > 0"));
    CHECK(structure::same(rs.system, sys));
    CHECK(rs.report.modes_dropped.empty());
}

TEST_CASE("reduction is idempotent") {
    const drone::DroneParams p;
    for (auto v : {drone::ControllerVariant::Buggy, drone::ControllerVariant::Patched}) {
        const auto full = drone::build_full_system(p, v);
        const auto once = build_surrogate(full, kPhi, {}, kFromGoto);
        const auto twice = build_surrogate(once.system, kPhi, {}, kFromGoto);
        CHECK(structure::same(once.system, twice.system));
        CHECK(once.report.modes_kept == twice.report.modes_kept);
        CHECK(twice.report.modes_dropped.empty());
    }
}

TEST_CASE("a larger signal set never shrinks the mode set") {
    const drone::DroneParams p;
    const auto full = drone::build_full_system(p, drone::ControllerVariant::Buggy);
    const auto& sig = full.signals();
    for (const std::string entry : {"GOTO", "IDLE", "LAND"}) {
        const ReductionOptions opt{entry};
        for (unsigned mask = 1; mask < (1u << sig.size()); ++mask) {
            SignalSet s;
            for (std::size_t k = 0; k < sig.size(); ++k) {
                if (mask & (1u << k)) s.insert(sig[k]);
            }
            const auto small = kept_or_empty(full, s, opt);
            for (const auto& extra : sig) {
                if (s.count(extra)) continue;
                SignalSet t = s;
                t.insert(extra);
                const auto big = kept_or_empty(full, t, opt);
                REQUIRE(std::includes(big.begin(), big.end(), small.begin(), small.end()));
            }
        }
    }
}

}

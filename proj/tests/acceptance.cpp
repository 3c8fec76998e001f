// Acceptance run: one PASS/FAIL line per criterion. Usage: hdsf_acceptance <path-to-hdsf-cli>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "hdsf/condensation.hpp"
#include "hdsf/drone.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/reduction.hpp"
#include "hdsf/stl.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "structure.hpp"

using namespace hdsf;
using drone::ControllerVariant;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Command {
    int status = -1;
    std::string out;
};

Command shell(const std::string& cmd) {
    Command c;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return c;
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) c.out.append(buf, n);
    const int raw = pclose(p);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<Configuration> sample(std::size_t n, std::uint64_t seed) {
    const ConfigSpace space = drone::default_space(seed);
    std::vector<Configuration> out;
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng = Rng::for_trial(seed, k);
        out.push_back(generate(space, rng));
    }
    return out;
}

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << id << "  " << detail << std::endl;
    failures += !ok;
}

const drone::DroneParams kParams;

void c1(const std::string& cli) {
    const std::string expected = "Configuration:\n"
                                 "- Min deploy altitude: 60.0m\n"
                                 "- Max deploy altitude: 80.0m\n"
                                 "- Low battery threshold: 10.0%\n"
                                 "Result:\n"
                                 "Battery: 10.0\n"
                                 "Altitude: 20.0m\n"
                                 "Parachute: NOT DEPLOYED\n"
                                 "Status: BLOCKED - Critical battery but altitude out of deployment range\n"
                                 "Property: VIOLATED at t=0.00s\n";
    const auto t0 = clock_type::now();
    const Command buggy = shell("'" + cli + "' run --battery 10.0 --altitude 20");
    const double elapsed = seconds_since(t0);
    const Command patched = shell("'" + cli + "' run --battery 10.0 --altitude 20 --variant patched");
    const bool ok = buggy.out == expected && buggy.status == 1 && patched.status == 0 &&
                    patched.out.find("Parachute: DEPLOYED\n") != std::string::npos &&
                    patched.out.find("Property: SATISFIED\n") != std::string::npos && elapsed < 1.0;
    std::ostringstream d;
    d << "run --battery 10.0 --altitude 20: buggy exit " << buggy.status << ", patched exit " << patched.status << ", " << elapsed << " s";
    report("C1", ok, d.str());
}

void c2() {
    const auto phi = drone::property(kParams);
    const ReducedSystem patched = drone::build_surrogate_system(kParams, ControllerVariant::Patched);
    CampaignOptions o;
    o.runs = 200;
    std::size_t patched_violations = 0;
    for (std::uint64_t seed : {0ULL, 1ULL, 7ULL, 42ULL, 2024ULL}) {
        patched_violations += campaign(patched, phi, drone::default_space(seed), o).summary.violating_runs;
    }

    const ReducedSystem buggy = drone::build_surrogate_system(kParams, ControllerVariant::Buggy);
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t positives = 0;
    const auto configs = sample(1000, 2026);
    for (const auto& c : configs) {
        const bool got = run_trial(buggy, c, phi, kParams.dt, kParams.horizon).verdict.outcome ==
                         stl::Outcome::Violated;
        const bool want = oracle::buggy_violation(c.at("battery_init"), c.at("altitude_init"), c.at("min_deploy_alt"),
                                                  c.at("max_deploy_alt"), c.at("low_batt_threshold"),
                                                  kParams.cruise_drain, kParams.horizon);
        positives += want;
        fp += got && !want;
        fn += !got && want;
    }
    std::ostringstream d;
    d << "patched violations over 5x200 runs: " << patched_violations << "; buggy vs predicate on "
      << configs.size() << " configs: " << positives << " positives, " << fp << " FP, " << fn << " FN";
    report("C2", patched_violations == 0 && fp == 0 && fn == 0, d.str());
}

void c3() {
    const auto t0 = clock_type::now();
    const auto configs = sample(100, 3);
    const auto b = drone::conformance_check(kParams, ControllerVariant::Buggy, configs, kParams.dt, kParams.horizon);
    const auto p =
        drone::conformance_check(kParams, ControllerVariant::Patched, configs, kParams.dt, kParams.horizon);
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << "agreement buggy " << b.agreed << "/" << configs.size() << ", patched " << p.agreed << "/"
      << configs.size() << ", " << elapsed << " s";
    report("C3", b.agreed == configs.size() && p.agreed == configs.size() && elapsed < 60.0, d.str());
}

void c4() {
    const auto configs = sample(50, 4);
    const auto t = drone::timing_comparison(kParams, ControllerVariant::Buggy, configs, kParams.dt, kParams.horizon);
    std::ostringstream d;
    d << "mean full " << t.mean_full_seconds * 1e3 << " ms, mean surrogate " << t.mean_surrogate_seconds * 1e3
      << " ms, speedup " << t.speedup << "x, max surrogate " << t.max_surrogate_seconds * 1e3 << " ms";
    report("C4", t.speedup >= 10.0 && t.max_surrogate_seconds < 0.5, d.str());
}

void c5() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 2 + static_cast<int>(rng() % 199);
        Eigen::MatrixXd a(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = g(rng);
        LinearSystem s;
        s.K = a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
        s.F.resize(n);
        oracle::Matrix k(n, std::vector<double>(n));
        std::vector<double> f(n);
        for (int r = 0; r < n; ++r) {
            s.F(r) = g(rng);
            f[r] = s.F(r);
            for (int c = 0; c < n; ++c) k[r][c] = s.K(r, c);
        }
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        const int np = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
        const Partition part(std::vector<int>(idx.begin(), idx.begin() + np), std::vector<int>(idx.begin() + np, idx.end()),
                             static_cast<std::size_t>(n));
        const CondensedSystem cs = condense(s, part);
        const Eigen::VectorXd up = solve_condensed(cs);
        const Eigen::VectorXd u = assemble_solution(part, up, reconstruct_internal(cs, s, up));
        const auto want = oracle::dense_solve(k, f);
        double num = 0.0;
        double den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += (u(i) - want[i]) * (u(i) - want[i]);
            den += want[i] * want[i];
        }
        worst = std::max(worst, std::sqrt(num / den));
    }
    LinearSystem ex;
    ex.K = Eigen::Matrix2d{{4.0, 1.0}, {1.0, 3.0}};
    ex.F = Eigen::Vector2d(1.0, 2.0);
    const CondensedSystem cs = condense(ex, Partition({0}, {1}, 2));
    const Eigen::VectorXd up = solve_condensed(cs);
    const Eigen::VectorXd ui = reconstruct_internal(cs, ex, up);
    const double eps = std::numeric_limits<double>::epsilon();
    const bool example = std::abs(up(0) - 1.0 / 11.0) <= 4 * eps && std::abs(ui(0) - 7.0 / 11.0) <= 4 * eps;
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << "worst relative error " << worst << " over 200 systems, 2x2 example U_p=" << up(0) << " U_i=" << ui(0)
      << ", " << elapsed << " s";
    report("C5", worst <= 1e-8 && example && elapsed < 10.0, d.str());
}

void c6() {
    const auto t0 = clock_type::now();
    std::mt19937_64 rng(6);
    int agree = 0;
    const int cases = 1000;
    for (int k = 0; k < cases; ++k) {
        const Trace tr = gen::random_trace(rng);
        const stl::Formula f = gen::random_formula(rng, 4, tr.dt());
        agree += stl::evaluate(f, tr, Configuration{}).satisfied() == oracle::holds(f, tr, 0);
    }
    const double elapsed = seconds_since(t0);
    std::ostringstream d;
    d << agree << "/" << cases << " agree with the naive evaluator, " << elapsed << " s";
    report("C6", agree == cases && elapsed < 10.0, d.str());
}

void c7() {
    const auto phi = drone::property(kParams);
    const ReductionOptions from_goto{"GOTO"};
    bool ok = true;
    std::string modes;
    std::string sigs;
    for (auto v : {ControllerVariant::Buggy, ControllerVariant::Patched}) {
        const HybridSystem full = drone::build_full_system(kParams, v);
        const ReducedSystem rs = build_surrogate(full, phi, {}, from_goto);
        std::vector<std::string> kept = rs.report.modes_kept;
        std::sort(kept.begin(), kept.end());
        ok = ok && kept == std::vector<std::string>{"GOTO", "PARACHUTE"};
        ok = ok && rs.report.signals_kept == SignalSet{"altitude", "battery", "deployed_flag"};
        ok = ok && verify_projection_closure(rs);
        const ReducedSystem twice = build_surrogate(rs.system, phi, {}, from_goto);
        ok = ok && structure::same(rs.system, twice.system);

        // adding signals never removes modes
        const auto& sig = full.signals();
        for (unsigned mask = 1; mask < (1u << sig.size()) && ok; ++mask) {
            SignalSet s;
            for (std::size_t k = 0; k < sig.size(); ++k)
                if (mask & (1u << k)) s.insert(sig[k]);
            auto kept_for = [&](const SignalSet& set) {
                try {
                    auto m = relevant_modes(full, set, from_goto).modes_kept;
                    return std::set<std::string>(m.begin(), m.end());
                } catch (const ReductionError&) {
                    return std::set<std::string>{};
                }
            };
            const auto small = kept_for(s);
            for (const auto& extra : sig) {
                if (s.count(extra)) continue;
                SignalSet t = s;
                t.insert(extra);
                const auto big = kept_for(t);
                ok = ok && std::includes(big.begin(), big.end(), small.begin(), small.end());
            }
        }
        modes.clear();
        for (const auto& m : kept) modes += (modes.empty() ? "" : ",") + m;
        sigs.clear();
        for (const auto& s : rs.report.signals_kept) sigs += (sigs.empty() ? "" : ",") + s;
    }
    report("C7", ok, "Q = {" + modes + "}, signals = {" + sigs + "}, idempotent and monotone");
}

void c8(const std::string& cli) {
    const fs::path root = fs::temp_directory_path() / "hdsf_acceptance_c8";
    fs::remove_all(root);
    bool ok = true;
    for (const char* run : {"a", "b"}) {
        const Command c =
            shell("'" + cli + "' fuzz --runs 200 --seed 8 --out-dir '" + (root / run).string() + "' > /dev/null");
        ok = ok && c.status == 0;
    }
    std::string detail = "fuzz --runs 200 --seed 8 twice:";
    for (const char* f : {"summary.json", "violations.jsonl", "margins.csv"}) {
        const std::string a = slurp(root / "a" / f);
        const bool same = !a.empty() && a == slurp(root / "b" / f);
        ok = ok && same;
        detail += std::string(" ") + f + (same ? " identical" : " differs");
    }
    fs::remove_all(root);
    report("C8", ok, detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: " << argv[0] << " <path-to-hdsf>\n";
        return 2;
    }
    const std::string cli = argv[1];
    c1(cli);
    c2();
    c3();
    c4();
    c5();
    c6();
    c7();
    c8(cli);
    return failures == 0 ? 0 : 1;
}

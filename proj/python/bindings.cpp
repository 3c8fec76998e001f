#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hdsf/condensation.hpp"
#include "hdsf/drone.hpp"
#include "hdsf/error.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/report.hpp"
#include "hdsf/stl.hpp"

namespace py = pybind11;
using namespace hdsf;

namespace {

drone::DroneParams params_from(double min_alt, double max_alt, double threshold, double delta) {
    drone::DroneParams p;
    p.min_deploy_alt = min_alt;
    p.max_deploy_alt = max_alt;
    p.low_batt_threshold = threshold;
    p.delta = delta;
    p.validate();
    return p;
}

py::dict trace_dict(const Trace& tr) {
    py::dict d;
    d["t"] = tr.times();
    for (const auto& s : tr.signals()) {
        d[py::str(s)] = tr.column(s);
    }
    std::vector<std::string> modes;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        modes.push_back(tr.mode(k));
    }
    d["mode"] = modes;
    return d;
}

Trace trace_from(const std::map<std::string, std::vector<double>>& signals, double dt) {
    std::vector<std::string> names;
    std::size_t n = 0;
    for (const auto& [name, values] : signals) {
        if (!names.empty() && values.size() != n) {
            throw ConfigurationError("signal '" + name + "' has a different length");
        }
        names.push_back(name);
        n = values.size();
    }
    Trace tr(dt, names, {"-"});
    std::vector<double> row(names.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            row[j] = signals.at(names[j])[k];
        }
        tr.add_sample(static_cast<double>(k) * dt, 0, row);
    }
    return tr;
}

py::dict verdict_dict(const stl::Verdict& v) {
    py::dict d;
    d["satisfied"] = v.satisfied();
    d["witness_time"] = v.witness_time ? py::cast(*v.witness_time) : py::none();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Property-scoped surrogate simulation and falsification of a drone parachute controller";

    py::register_exception<Error>(m, "Error", PyExc_ValueError);

    m.def(
        "run",
        [](double battery, double altitude, const std::string& variant, double min_alt, double max_alt,
           double threshold, double delta, double horizon) {
            const auto p = params_from(min_alt, max_alt, threshold, delta);
            const auto rs = drone::build_surrogate_system(p, drone::variant_from_string(variant));
            const auto c = drone::make_configuration(p, battery, altitude);
            const auto o = run_trial(rs, c, drone::property(p), p.dt, horizon);
            py::dict d = verdict_dict(o.verdict);
            d["report"] = format_run_report(c, summarize_run(o.trace, c, o.verdict, p.airborne_min_altitude));
            d["trace"] = trace_dict(o.trace);
            return d;
        },
        py::arg("battery"), py::arg("altitude"), py::arg("variant") = "buggy", py::arg("min_deploy_alt") = 60.0,
        py::arg("max_deploy_alt") = 80.0, py::arg("low_batt_threshold") = 10.0, py::arg("delta") = 2.0,
        py::arg("horizon") = 120.0, "One surrogate run; returns the verdict, the text report and the trace.");

    m.def(
        "fuzz",
        [](std::size_t runs, std::uint64_t seed, const std::string& variant, const std::string& out_dir) {
            const drone::DroneParams p;
            const auto rs = drone::build_surrogate_system(p, drone::variant_from_string(variant));
            CampaignOptions o;
            o.runs = runs;
            o.dt = p.dt;
            o.horizon = p.horizon;
            CampaignResult r;
            {
                py::gil_scoped_release release;
                r = campaign(rs, drone::property(p), drone::default_space(seed), o);
            }
            if (!out_dir.empty()) {
                write_campaign_outputs(out_dir, r);
            }
            py::dict d;
            d["total_runs"] = r.summary.total_runs;
            d["violating_runs"] = r.summary.violating_runs;
            d["unique_violations"] = r.summary.unique_violations;
            d["violation_rate"] = r.summary.violation_rate;
            d["faults"] = r.summary.faults;
            std::vector<std::map<std::string, double>> configs;
            for (const auto& v : r.violations) {
                configs.emplace_back(v.config.values().begin(), v.config.values().end());
            }
            d["violations"] = configs;
            return d;
        },
        py::arg("runs") = 200, py::arg("seed") = 0, py::arg("variant") = "buggy", py::arg("out_dir") = "",
        "Falsification campaign on the surrogate.");

    m.def(
        "conformance",
        [](std::size_t configs, std::uint64_t seed, const std::string& variant) {
            const drone::DroneParams p;
            const ConfigSpace space = drone::default_space(seed);
            std::vector<Configuration> cs;
            for (std::size_t k = 0; k < configs; ++k) {
                Rng rng = Rng::for_trial(seed, k);
                cs.push_back(generate(space, rng));
            }
            const auto r = drone::conformance_check(p, drone::variant_from_string(variant), cs, p.dt, p.horizon);
            return py::make_tuple(r.agreed, r.compared);
        },
        py::arg("configs") = 100, py::arg("seed") = 0, py::arg("variant") = "buggy",
        "Verdict agreement of the full model and the surrogate: (agreed, compared).");

    m.def(
        "evaluate",
        [](const std::string& formula, const std::map<std::string, std::vector<double>>& signals, double dt,
           const std::map<std::string, double>& params) {
            Configuration c;
            for (const auto& [k, v] : params) {
                c.set(k, v);
            }
            return verdict_dict(stl::evaluate(stl::parse(formula), trace_from(signals, dt), c));
        },
        py::arg("formula"), py::arg("signals"), py::arg("dt"), py::arg("params") = std::map<std::string, double>{},
        "Evaluates an STL formula on uniformly sampled signals.");

    m.def(
        "condense",
        [](const Eigen::MatrixXd& K, const Eigen::VectorXd& F, std::vector<int> interface) {
            LinearSystem s{K, F, {}};
            s.validate();
            const CondensedSystem cs = condense(s, Partition::with_interface(std::move(interface), s.size()));
            const Eigen::VectorXd up = solve_condensed(cs);
            const Eigen::VectorXd u = assemble_solution(cs.partition, up, reconstruct_internal(cs, s, up));
            return py::make_tuple(cs.K_tilde, cs.F_tilde, u);
        },
        py::arg("K"), py::arg("F"), py::arg("interface"),
        "Static condensation onto the interface indices: (K_tilde, F_tilde, full solution).");
}

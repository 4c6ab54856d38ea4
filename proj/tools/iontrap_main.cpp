// Command-line front end: loads scenario files or named presets, runs the
// solvers and simulations, and writes CSV tables and JSON reports.
//
// Subcommands:
//   trap solve       trap minimum, secular frequencies, depth
//   trap calibrate   fit the five-wire template to height/band/depth targets
//   detect budget    signal chain budget row (collection ... lock-in output)
//   detect lockin    time-domain lock-in runs with and without ions
//   fidelity time    minimum integration time for a target fidelity
//   entangle rate    heralded entanglement rate report
//   sweep            1-D parameter sweep over any scenario file
//
// Exit codes: 0 success, 2 invalid scenario/configuration, 3 solver failure.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iontrap/calibrate.hpp"
#include "iontrap/histogram.hpp"
#include "iontrap/presets.hpp"
#include "iontrap/serialization.hpp"
#include "iontrap/state_detection.hpp"
#include "iontrap/version.hpp"

namespace fs = std::filesystem;
using iontrap::json;

#ifndef IONTRAP_DEFAULT_PRESET_DIR
#define IONTRAP_DEFAULT_PRESET_DIR "presets"
#endif

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

// Shortest round-trip decimal representation; deterministic across runs.
std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Options {
    std::string preset;
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string format = "csv";
};

fs::path preset_dir() {
    if (const char* env = std::getenv("IONTRAP_PRESET_DIR")) return fs::path(env);
    return fs::path(IONTRAP_DEFAULT_PRESET_DIR);
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw iontrap::ConfigError("cannot open scenario file " + path.string(), "/");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw iontrap::ConfigError(std::string("JSON parse error: ") + e.what(), "/");
    }
    return j;
}

// A scenario file may stand alone or derive from a preset:
//   { "preset": "ito-pd", "overrides": { "/temperature_k": 4.0 }, ... }
// Overrides are JSON-pointer/value pairs applied to the preset document;
// any other top-level fields (seed, sweep, output) replace the preset's.
json load_document(const Options& opt) {
    json doc;
    if (!opt.scenario_path.empty()) {
        doc = load_json_file(opt.scenario_path);
    } else if (!opt.preset.empty()) {
        doc = load_json_file(preset_dir() / (opt.preset + ".json"));
    } else {
        throw iontrap::ConfigError("need --preset or --scenario", "/");
    }
    if (doc.contains("preset")) {
        json base = load_json_file(preset_dir() / (doc.at("preset").get<std::string>() + ".json"));
        if (doc.contains("overrides")) {
            const json& ov = doc.at("overrides");
            if (!ov.is_object())
                throw iontrap::ConfigError("overrides must be an object of pointer/value pairs",
                                           "/overrides");
            for (const auto& [pointer, value] : ov.items()) {
                try {
                    base[json::json_pointer(pointer)] = value;
                } catch (const json::exception& e) {
                    throw iontrap::ConfigError(std::string("bad override pointer: ") + e.what(),
                                               "/overrides" + pointer);
                }
            }
        }
        for (const auto& [key, value] : doc.items())
            if (key != "preset" && key != "overrides") base[key] = value;
        doc = std::move(base);
    }
    return doc;
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void emit_report(const Options& opt, const std::string& stem, const json& report,
                 const std::string& csv = "") {
    const fs::path dir(opt.out_dir);
    write_text(dir / (stem + ".json"), report.dump(2) + "\n");
    if (!csv.empty()) write_text(dir / (stem + ".csv"), csv);
    if (opt.format == "json" || csv.empty())
        std::cout << report.dump(2) << "\n";
    else
        std::cout << csv;
}

std::string histogram_csv(const std::vector<iontrap::HistogramBin>& bins,
                          const std::string& value_name) {
    std::string csv = "bin_center_" + value_name + ",count\n";
    for (const auto& b : bins)
        csv += format_double(b.center) + "," + std::to_string(b.count) + "\n";
    return csv;
}

std::uint64_t require_seed(const Options& opt, const json& doc) {
    if (opt.seed) return *opt.seed;
    if (doc.contains("seed")) return doc.at("seed").get<std::uint64_t>();
    throw iontrap::ConfigError("stochastic run needs a seed (--seed or \"seed\" field)",
                               "/seed");
}

json trap_solution_json(const iontrap::TrapSolution& sol) {
    return json{
        {"minimum_position_m",
         {sol.minimum_position.x, sol.minimum_position.y, sol.minimum_position.z}},
        {"secular_frequencies_hz",
         {sol.secular_frequencies_hz[0], sol.secular_frequencies_hz[1],
          sol.secular_frequencies_hz[2]}},
        {"trap_depth_ev", sol.trap_depth_ev},
        {"rf_only_depth_ev", sol.rf_only_depth_ev},
        {"escape_position_m",
         {sol.escape_position.x, sol.escape_position.y, sol.escape_position.z}},
        {"mathieu_q", sol.mathieu_q}};
}

int run_trap_solve(const Options& opt) {
    const json doc = load_document(opt);
    const auto layout = iontrap::trap_layout_from_json(doc);
    double guess_z = 50e-6;
    for (const auto& e : layout.electrodes)
        if (e.role == iontrap::ElectrodeRole::RF)
            guess_z = std::max(guess_z, 0.6 * (std::abs(e.y_min) + std::abs(e.y_max)) * 0.5);
    const auto sol = iontrap::solve_trap(layout, {0.0, 0.0, guess_z});
    json report = trap_solution_json(sol);
    report["schema"] = "trap-solution/1";
    report["toolkit_version"] = iontrap::kVersion;
    std::string csv =
        "min_x_m,min_y_m,min_z_m,f1_hz,f2_hz,f3_hz,depth_ev,rf_only_depth_ev,mathieu_q\n";
    csv += format_double(sol.minimum_position.x) + "," +
           format_double(sol.minimum_position.y) + "," +
           format_double(sol.minimum_position.z) + "," +
           format_double(sol.secular_frequencies_hz[0]) + "," +
           format_double(sol.secular_frequencies_hz[1]) + "," +
           format_double(sol.secular_frequencies_hz[2]) + "," +
           format_double(sol.trap_depth_ev) + "," + format_double(sol.rf_only_depth_ev) +
           "," + format_double(sol.mathieu_q) + "\n";
    emit_report(opt, "trap_solution", report, csv);
    return 0;
}

int run_trap_calibrate(const Options& opt, double height_um, double f_lo_mhz,
                       double f_hi_mhz, double depth_mev) {
    iontrap::CalibrationTargets targets;
    targets.ion_height = height_um * 1e-6;
    targets.frequency_lo = f_lo_mhz * 1e6;
    targets.frequency_hi = f_hi_mhz * 1e6;
    targets.trap_depth_ev = depth_mev * 1e-3;
    const iontrap::FiveWireTemplate tmpl;
    const auto report = iontrap::calibrate(tmpl, targets);
    if (!report.converged) {
        json err = {{"error", {{"code", "calibration-failure"}, {"message", report.message}}}};
        std::cerr << err.dump(2) << "\n";
        return kExitSolver;
    }
    json j;
    j["schema"] = "calibration-report/1";
    j["toolkit_version"] = iontrap::kVersion;
    j["targets"] = {{"ion_height_m", targets.ion_height},
                    {"frequency_lo_hz", targets.frequency_lo},
                    {"frequency_hi_hz", targets.frequency_hi},
                    {"trap_depth_ev", targets.trap_depth_ev}};
    j["parameters"] = {{"center_half_width_m", report.params.center_half_width},
                       {"rf_outer_edge_m", report.params.rf_outer_edge},
                       {"rf_amplitude_v", report.params.rf_amplitude},
                       {"endcap_voltage_v", report.params.endcap_voltage},
                       {"outer_voltage_v", report.params.outer_voltage}};
    j["solution"] = trap_solution_json(report.solution);
    j["residuals"] = {{"height", report.height_residual},
                      {"frequency_band",
                       {report.frequency_residuals[0], report.frequency_residuals[1],
                        report.frequency_residuals[2]}},
                      {"depth", report.depth_residual}};
    j["objective"] = report.objective;
    j["evaluations"] = report.evaluations;
    j["feasible"] = report.feasible;
    j["message"] = report.message;
    emit_report(opt, "calibration", j);
    write_text(fs::path(opt.out_dir) / "calibrated_layout.json",
               iontrap::to_json(report.layout).dump(2) + "\n");
    return 0;
}

int run_detect_budget(const Options& opt) {
    const json doc = load_document(opt);
    const auto sc = iontrap::detection_scenario_from_json(doc);
    const auto row = iontrap::detect_budget(sc);
    json j;
    j["schema"] = "detect-budget/1";
    j["toolkit_version"] = iontrap::kVersion;
    j["scenario"] = sc.name;
    j["collection_efficiency"] = row.collection_efficiency;
    j["source_power_w"] = row.source_power_w;
    j["computed_source_power_w"] = row.computed_source_power_w;
    j["power_at_detector_w"] = row.power_at_detector_w;
    j["detector_qe"] = row.detector_qe;
    if (row.photocurrent_a) j["photocurrent_a"] = *row.photocurrent_a;
    if (row.lockin_output_v) j["lockin_output_v"] = *row.lockin_output_v;
    std::string csv =
        "collection_efficiency,power_at_detector_w,detector_qe,photocurrent_a,lockin_output_v\n";
    csv += format_double(row.collection_efficiency) + "," +
           format_double(row.power_at_detector_w) + "," + format_double(row.detector_qe) +
           ",";
    csv += row.photocurrent_a ? format_double(*row.photocurrent_a) : std::string("n.a.");
    csv += ",";
    csv += row.lockin_output_v ? format_double(*row.lockin_output_v) : std::string("n.a.");
    csv += "\n";
    emit_report(opt, "budget", j, csv);
    return 0;
}

std::string trace_csv(const iontrap::LockinTrace& trace) {
    std::string csv = "t_s,v_out_V\n";
    csv.reserve(trace.output_v.size() * 24);
    for (std::size_t k = 0; k < trace.output_v.size(); ++k) {
        csv += format_double(double(k) / trace.sample_rate_hz);
        csv += ",";
        csv += format_double(trace.output_v[k]);
        csv += "\n";
    }
    return csv;
}

std::vector<double> settled_samples(const iontrap::LockinTrace& trace) {
    std::vector<double> out;
    const std::size_t start =
        std::size_t(trace.settle_time_s * trace.sample_rate_hz);
    for (std::size_t k = start; k < trace.output_v.size(); ++k)
        out.push_back(trace.output_v[k]);
    return out;
}

int run_detect_lockin(const Options& opt, double bin_width_mv) {
    const json doc = load_document(opt);
    const auto sc = iontrap::detection_scenario_from_json(doc);
    const std::uint64_t seed = require_seed(opt, doc);
    const auto cmp = iontrap::compare_scenario_runs(sc, seed);

    const fs::path dir(opt.out_dir);
    write_text(dir / "lockin_with_ions.csv", trace_csv(cmp.with_ions));
    write_text(dir / "lockin_without_ions.csv", trace_csv(cmp.without_ions));
    const double bin_w = bin_width_mv * 1e-3;
    write_text(dir / "histogram_with_ions.csv",
               histogram_csv(iontrap::build_histogram(settled_samples(cmp.with_ions), bin_w), "V"));
    write_text(dir / "histogram_without_ions.csv",
               histogram_csv(iontrap::build_histogram(settled_samples(cmp.without_ions), bin_w),
                             "V"));

    json j;
    j["schema"] = "lockin-summary/1";
    j["toolkit_version"] = iontrap::kVersion;
    j["scenario"] = sc.name;
    j["seed_with_ions"] = cmp.seed_with;
    j["seed_without_ions"] = cmp.seed_without;
    j["mean_with_ions_v"] = cmp.with_ions.mean_v;
    j["std_with_ions_v"] = cmp.with_ions.std_v;
    j["mean_without_ions_v"] = cmp.without_ions.mean_v;
    j["std_without_ions_v"] = cmp.without_ions.std_v;
    j["signal_mean_v"] = cmp.signal_mean_v;
    j["pooled_std_v"] = cmp.pooled_std_v;
    j["separation"] = cmp.separation;
    j["analytic_prediction_v"] = cmp.analytic_prediction_v;
    write_text(dir / "lockin_summary.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_fidelity_time(const Options& opt) {
    const json doc = load_document(opt);
    const auto q = iontrap::fidelity_query_from_json(doc);
    json j;
    j["schema"] = "fidelity-report/1";
    j["toolkit_version"] = iontrap::kVersion;
    j["query"] = q.name;
    j["bright_rate_hz"] = q.bright_rate_hz;
    j["dark_rate_hz"] = q.dark_rate_hz;
    if (q.target_fidelity) {
        const double t =
            iontrap::min_integration_time(q.bright_rate_hz, q.dark_rate_hz, *q.target_fidelity);
        j["target_fidelity"] = *q.target_fidelity;
        j["min_integration_time_s"] = t;
        const auto r = iontrap::optimal_threshold_for_means(q.bright_rate_hz * t,
                                                            q.dark_rate_hz * t);
        j["threshold_counts"] = r.threshold;
        j["fidelity_at_min_time"] = r.fidelity;
    }
    if (q.integration_time_s) {
        j["integration_time_s"] = *q.integration_time_s;
        j["fidelity"] = iontrap::fidelity_at_time(q.bright_rate_hz, q.dark_rate_hz,
                                                  *q.integration_time_s);
    }
    emit_report(opt, "fidelity", j);
    return 0;
}

int run_entangle_rate(const Options& opt) {
    const json doc = load_document(opt);
    auto link = iontrap::entanglement_link_from_json(doc);
    const auto report = iontrap::entanglement_rate(link);

    auto link_linear = link;
    link_linear.protocol = iontrap::HeraldProtocol::LinearHerald;
    link_linear.herald_prefactor.reset();
    auto link_coinc = link;
    link_coinc.protocol = iontrap::HeraldProtocol::TwoPhotonCoincidence;
    link_coinc.herald_prefactor.reset();
    const double linear_rate = iontrap::entanglement_rate(link_linear).rate_hz;
    const double coincidence_rate = iontrap::entanglement_rate(link_coinc).rate_hz;

    json j;
    j["schema"] = "entanglement-rate/1";
    j["toolkit_version"] = iontrap::kVersion;
    j["protocol"] = link.protocol == iontrap::HeraldProtocol::LinearHerald
                        ? "linear_herald"
                        : "two_photon_coincidence";
    j["per_attempt_probability"] = report.per_attempt_probability;
    j["rate_hz"] = report.rate_hz;
    j["linear_herald_rate_hz"] = linear_rate;
    j["two_photon_coincidence_rate_hz"] = coincidence_rate;
    if (link.reference_rate_hz) {
        j["reference_rate_hz"] = *link.reference_rate_hz;
        const double ratio = report.rate_hz / *link.reference_rate_hz;
        j["ratio_to_reference"] = ratio;
        // flag when the configured model disagrees with the reference by
        // more than 25% in either direction
        j["reference_discrepancy"] = ratio > 1.25 || ratio < 0.8;
    }
    std::string csv =
        "protocol,per_attempt_probability,rate_hz,linear_herald_rate_hz,two_photon_coincidence_rate_hz,reference_rate_hz\n";
    csv += j["protocol"].get<std::string>() + "," +
           format_double(report.per_attempt_probability) + "," +
           format_double(report.rate_hz) + "," + format_double(linear_rate) + "," +
           format_double(coincidence_rate) + ",";
    csv += link.reference_rate_hz ? format_double(*link.reference_rate_hz) : std::string("n.a.");
    csv += "\n";
    emit_report(opt, "entanglement_rate", j, csv);
    return 0;
}

// Values produced by one sweep point, keyed by column name.
std::vector<std::pair<std::string, double>> sweep_outputs(const json& doc) {
    const std::string schema = iontrap::schema_of(doc);
    if (schema == "detection-scenario/1") {
        const auto sc = iontrap::detection_scenario_from_json(doc);
        const auto row = iontrap::detect_budget(sc);
        return {{"collection_efficiency", row.collection_efficiency},
                {"power_at_detector_w", row.power_at_detector_w},
                {"detector_qe", row.detector_qe},
                {"photocurrent_a", row.photocurrent_a.value_or(0.0)},
                {"lockin_output_v", row.lockin_output_v.value_or(0.0)}};
    }
    if (schema == "entanglement-link/1") {
        const auto link = iontrap::entanglement_link_from_json(doc);
        const auto r = iontrap::entanglement_rate(link);
        return {{"per_attempt_probability", r.per_attempt_probability},
                {"rate_hz", r.rate_hz}};
    }
    if (schema == "fidelity-query/1") {
        const auto q = iontrap::fidelity_query_from_json(doc);
        if (q.target_fidelity)
            return {{"min_integration_time_s",
                     iontrap::min_integration_time(q.bright_rate_hz, q.dark_rate_hz,
                                                   *q.target_fidelity)}};
        return {{"fidelity", iontrap::fidelity_at_time(q.bright_rate_hz, q.dark_rate_hz,
                                                       *q.integration_time_s)}};
    }
    if (schema == "trap-layout/1") {
        const auto layout = iontrap::trap_layout_from_json(doc);
        double guess_z = 50e-6;
        for (const auto& e : layout.electrodes)
            if (e.role == iontrap::ElectrodeRole::RF)
                guess_z = std::max(guess_z, 0.6 * (std::abs(e.y_min) + std::abs(e.y_max)) * 0.5);
        const auto sol = iontrap::solve_trap(layout, {0.0, 0.0, guess_z});
        return {{"min_z_m", sol.minimum_position.z},
                {"f1_hz", sol.secular_frequencies_hz[0]},
                {"f2_hz", sol.secular_frequencies_hz[1]},
                {"f3_hz", sol.secular_frequencies_hz[2]},
                {"trap_depth_ev", sol.trap_depth_ev}};
    }
    throw iontrap::ConfigError("unsupported schema for sweep: " + schema, "/schema");
}

int run_sweep(const Options& opt) {
    json doc = load_document(opt);
    const auto sweep = iontrap::sweep_from_json(doc);
    if (!sweep) throw iontrap::ConfigError("scenario has no sweep specification", "/sweep");
    json base = doc;
    base.erase("sweep");

    std::string csv;
    for (int i = 0; i < sweep->steps; ++i) {
        const double value =
            sweep->steps == 1
                ? sweep->from
                : sweep->from + (sweep->to - sweep->from) * double(i) / (sweep->steps - 1);
        json point = base;
        try {
            point[json::json_pointer(sweep->parameter_path)] = value;
        } catch (const json::exception& e) {
            throw iontrap::ConfigError(std::string("bad sweep path: ") + e.what(),
                                       "/sweep/path");
        }
        const auto outputs = sweep_outputs(point);
        if (i == 0) {
            csv = "sweep_value";
            for (const auto& [name, _] : outputs) csv += "," + name;
            csv += "\n";
        }
        csv += format_double(value);
        for (const auto& [_, v] : outputs) csv += "," + format_double(v);
        csv += "\n";
    }
    write_text(fs::path(opt.out_dir) / "sweep.csv", csv);
    std::cout << csv;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surface-trap fluorescence detection toolkit"};
    app.set_version_flag("--version", iontrap::kVersion);
    app.require_subcommand(1);

    Options opt;
    bool out_dir_given = false;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--preset", opt.preset, "named preset from the preset directory");
        cmd->add_option("--scenario", opt.scenario_path, "path to a scenario JSON file");
        cmd->add_option("--seed", opt.seed, "seed for stochastic runs");
        cmd->add_option_function<std::string>(
               "--out",
               [&](const std::string& dir) {
                   opt.out_dir = dir;
                   out_dir_given = true;
               },
               "output directory")
            ->capture_default_str();
        cmd->add_option("--format", opt.format, "stdout format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}))
            ->capture_default_str();
    };

    auto* trap = app.add_subcommand("trap", "trap electrostatics");
    auto* trap_solve = trap->add_subcommand("solve", "solve a trap layout");
    add_common(trap_solve);
    auto* trap_cal = trap->add_subcommand("calibrate", "calibrate the five-wire template");
    add_common(trap_cal);
    double height_um = 100.0, f_lo_mhz = 0.8, f_hi_mhz = 1.3, depth_mev = 300.0;
    trap_cal->add_option("--height-um", height_um, "target ion height, um")
        ->capture_default_str();
    trap_cal->add_option("--f-lo-mhz", f_lo_mhz, "secular band lower edge, MHz")
        ->capture_default_str();
    trap_cal->add_option("--f-hi-mhz", f_hi_mhz, "secular band upper edge, MHz")
        ->capture_default_str();
    trap_cal->add_option("--depth-mev", depth_mev, "target trap depth, meV")
        ->capture_default_str();

    auto* detect = app.add_subcommand("detect", "detection chain");
    auto* detect_budget = detect->add_subcommand("budget", "signal budget table row");
    add_common(detect_budget);
    auto* detect_lockin = detect->add_subcommand("lockin", "lock-in time series + histograms");
    add_common(detect_lockin);
    double bin_width_mv = 10.0;
    detect_lockin->add_option("--bin-mv", bin_width_mv, "histogram bin width, mV")
        ->capture_default_str();

    auto* fidelity = app.add_subcommand("fidelity", "state discrimination");
    auto* fidelity_time = fidelity->add_subcommand("time", "minimum integration time");
    add_common(fidelity_time);

    auto* entangle = app.add_subcommand("entangle", "remote entanglement link");
    auto* entangle_rate = entangle->add_subcommand("rate", "heralded rate report");
    add_common(entangle_rate);

    auto* sweep = app.add_subcommand("sweep", "1-D parameter sweep");
    add_common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        // an output directory named in the scenario file applies unless the
        // flag was given explicitly
        if (!out_dir_given && (!opt.preset.empty() || !opt.scenario_path.empty())) {
            try {
                const json doc = load_document(opt);
                if (doc.contains("output") && doc.at("output").contains("dir"))
                    opt.out_dir = doc.at("output").at("dir").get<std::string>();
            } catch (...) {
                // errors surface from the subcommand's own load
            }
        }
        if (trap_solve->parsed()) return run_trap_solve(opt);
        if (trap_cal->parsed())
            return run_trap_calibrate(opt, height_um, f_lo_mhz, f_hi_mhz, depth_mev);
        if (detect_budget->parsed()) return run_detect_budget(opt);
        if (detect_lockin->parsed()) return run_detect_lockin(opt, bin_width_mv);
        if (fidelity_time->parsed()) return run_fidelity_time(opt);
        if (entangle_rate->parsed()) return run_entangle_rate(opt);
        if (sweep->parsed()) return run_sweep(opt);
        std::cerr << "no subcommand\n";
        return kExitConfig;
    } catch (const iontrap::ConfigError& e) {
        json err = {{"error",
                     {{"code", "invalid-configuration"},
                      {"message", e.what()},
                      {"field", e.field_path}}}};
        std::cerr << err.dump(2) << "\n";
        return kExitConfig;
    } catch (const iontrap::DomainError& e) {
        json err = {{"error", {{"code", "invalid-value"}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << "\n";
        return kExitConfig;
    } catch (const iontrap::SolverError& e) {
        json err = {{"error", {{"code", "solver-failure"}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        json err = {{"error", {{"code", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump(2) << "\n";
        return 1;
    }
}

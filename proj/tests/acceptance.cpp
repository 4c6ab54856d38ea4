// Acceptance suite: one check per headline claim of the toolkit, each printed
// as a single [PASS]/[FAIL] line with its runtime. Returns the number of
// failed checks.
//
// Usage: acceptance [--cli <path>] [--presets <dir>] [--only N] [--skip N]
//
// Check 4 (trap calibration) targets a trap depth that is out of reach for
// this electrode geometry class while every secular frequency stays inside
// the 0.8-1.3 MHz band; it fails by design and is registered as an expected
// failure in CTest. The calibration report carries the quantitative bound.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iontrap/calibrate.hpp"
#include "iontrap/entanglement.hpp"
#include "iontrap/histogram.hpp"
#include "iontrap/presets.hpp"
#include "iontrap/state_detection.hpp"
#include "../tests/oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace iontrap;

namespace {

std::string cli_path;
std::string preset_path;

struct CheckResult {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

bool near(double value, double reference, double rel) {
    return std::abs(value - reference) <=
           rel * std::max(std::abs(reference), std::abs(value));
}

int run_cli(const std::string& args, const std::string& tag) {
    const std::string cmd =
        cli_path + " " + args + " > /tmp/acc_" + tag + ".out 2> /tmp/acc_" + tag + ".err";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

json load_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("missing " + p.string());
    json j;
    in >> j;
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// 1. Full signal-budget pipeline through the CLI.
CheckResult check_budget_pipeline() {
    CheckResult r;
    const fs::path work = fs::temp_directory_path() / "iontrap_acc_budget";
    fs::remove_all(work);
    r.require(run_cli("detect budget --preset ito-pd --out " + (work / "pd").string(),
                      "budget_pd") == 0,
              "ito-pd budget run failed");
    if (!r.pass) return r;
    const json pd = load_json(work / "pd" / "budget.json");
    r.require(near(pd["collection_efficiency"].get<double>(), 0.30, 0.05),
              "collection " + fmt(pd["collection_efficiency"].get<double>()) + " vs 0.30");
    r.require(near(pd["power_at_detector_w"].get<double>(), 60e-12, 0.05),
              "power " + fmt(pd["power_at_detector_w"].get<double>() * 1e12) + " pW vs 60");
    r.require(near(pd["detector_qe"].get<double>(), 0.30, 0.05),
              "qe " + fmt(pd["detector_qe"].get<double>()) + " vs 0.30");
    r.require(near(pd["photocurrent_a"].get<double>(), 6e-12, 0.05),
              "current " + fmt(pd["photocurrent_a"].get<double>() * 1e12) + " pA vs 6");
    r.require(near(pd["lockin_output_v"].get<double>(), 0.120, 0.05),
              "lock-in " + fmt(pd["lockin_output_v"].get<double>() * 1e3) + " mV vs 120");

    r.require(run_cli("detect budget --preset pmt-bulk --out " + (work / "pmt").string(),
                      "budget_pmt") == 0,
              "pmt-bulk budget run failed");
    if (!r.pass) return r;
    const json pmt = load_json(work / "pmt" / "budget.json");
    r.require(near(pmt["collection_efficiency"].get<double>(), 0.05, 0.05),
              "pmt collection vs 0.05");
    r.require(near(pmt["power_at_detector_w"].get<double>(), 10e-12, 0.05),
              "pmt power vs 10 pW");
    r.require(near(pmt["detector_qe"].get<double>(), 0.20, 0.05), "pmt qe vs 0.20");
    return r;
}

// 2. Emitted source power for the 50-ion cloud.
CheckResult check_source_power() {
    CheckResult r;
    const double p = total_emitted_power({50, 1.0e7, 422e-9});
    r.require(near(p, 235e-12, 0.005), "power " + fmt(p * 1e12) + " pW vs 235");
    r.require(std::abs(p - 200e-12) / 200e-12 < 0.20,
              "not within 20% of the rounded 200 pW");
    return r;
}

// 3. Responsivity <-> quantum efficiency consistency.
CheckResult check_qe_consistency() {
    CheckResult r;
    const double qe = responsivity_to_qe(0.1, nm(422));
    r.require(near(qe, 0.294, 0.005), "qe " + fmt(qe) + " vs 0.294");
    r.require(std::abs(qe - 0.30) < 0.02, "qe differs from 0.30 by 2 points or more");
    const double back = qe_to_responsivity(qe, nm(422));
    r.require(near(back, 0.1, 1e-12), "round trip broke");
    return r;
}

// 4. Five-wire calibration against height/band/depth targets.
CheckResult check_trap_calibration() {
    CheckResult r;
    const fs::path work = fs::temp_directory_path() / "iontrap_acc_cal";
    fs::remove_all(work);
    r.require(run_cli("trap calibrate --out " + work.string(), "calibrate") == 0,
              "calibration run failed");
    if (!r.pass) return r;
    const json cal = load_json(work / "calibration.json");
    const double h = cal["solution"]["minimum_position_m"][2].get<double>();
    r.require(std::abs(h - 100e-6) / 100e-6 < 0.02,
              "height " + fmt(h * 1e6) + " um vs 100 +-2%");
    const auto freqs = cal["solution"]["secular_frequencies_hz"];
    for (const auto& f : freqs)
        r.require(f.get<double>() >= 0.8e6 && f.get<double>() <= 1.3e6,
                  "frequency " + fmt(f.get<double>() / 1e6) + " MHz outside [0.8, 1.3]");
    const double depth = cal["solution"]["trap_depth_ev"].get<double>();
    r.require(depth >= 0.240 && depth <= 0.360,
              "depth " + fmt(depth * 1e3) + " meV outside [240, 360] (geometry-class bound; "
              "see the calibration report)");
    return r;
}

// 5. Electrostatics property suite.
CheckResult check_electrostatics_properties() {
    CheckResult r;
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> uxy(-300e-6, 300e-6);
    std::uniform_real_distribution<double> uz(5e-6, 400e-6);
    const RectElectrode rect{-70e-6, 110e-6, -90e-6, 50e-6, ElectrodeRole::DC, 1.0, "r"};

    double worst_harmonicity = 0.0;
    double worst_gradient = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 p{uxy(gen), uxy(gen), uz(gen)};
        const auto eval = unit_potential_eval(rect, p);
        double curvature = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                curvature = std::max(curvature, std::abs(eval.hess[a][b]));
        worst_harmonicity = std::max(
            worst_harmonicity,
            std::abs(eval.hess[0][0] + eval.hess[1][1] + eval.hess[2][2]) / curvature);
        for (int axis = 0; axis < 3; ++axis) {
            const double fd = richardson_partial(
                [&](Vec3 q) { return unit_potential(rect, q); }, p, axis, 1e-9);
            const double scale = std::max(std::abs(fd), 1e-3 * eval.grad.norm());
            worst_gradient =
                std::max(worst_gradient, std::abs(eval.grad[axis] - fd) / scale);
        }
    }
    r.require(worst_harmonicity < 1e-6,
              "harmonicity " + fmt(worst_harmonicity) + " above 1e-6");
    r.require(worst_gradient < 1e-6,
              "gradient vs finite differences " + fmt(worst_gradient) + " above 1e-6");

    // completeness of a plane tiling around the field point
    {
        const Vec3 p{9e-6, -17e-6, 100e-6};
        const int n = 20;
        auto tiled = [&](double radius) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    RectElectrode cell{-radius + 2 * radius * i / n,
                                       -radius + 2 * radius * (i + 1) / n,
                                       -radius + 2 * radius * j / n,
                                       -radius + 2 * radius * (j + 1) / n,
                                       ElectrodeRole::DC, 1.0, ""};
                    sum += unit_potential(cell, p);
                }
            return sum;
        };
        const double near_sum = tiled(100.0 * p.z);  // deficit ~ 0.9 * height/radius
        const double far_sum = tiled(1000.0 * p.z);
        r.require(std::abs(far_sum - 1.0) < 1e-3,
                  "completeness deficit " + fmt(std::abs(far_sum - 1.0)) + " above 1e-3");
        r.require(std::abs(far_sum - 1.0) < std::abs(near_sum - 1.0),
                  "completeness does not improve with tiling radius");
    }

    // frequency linear and depth quadratic in the drive amplitude
    {
        const TrapLayout base =
            build_five_wire(FiveWireTemplate{}, {62e-6, 162e-6, 120.0, 0.0, 0.0});
        const TrapLayout strong = with_rf_amplitude(base, 240.0);
        const Vec3 m1 = find_minimum(base, {0, 0, 90e-6});
        const Vec3 m2 = find_minimum(strong, {0, 0, 90e-6});
        const auto f1 = secular_frequencies(base, m1).frequencies_hz;
        const auto f2 = secular_frequencies(strong, m2).frequencies_hz;
        r.require(near(f2[1], 2.0 * f1[1], 0.01) && near(f2[2], 2.0 * f1[2], 0.01),
                  "frequencies not linear in the RF amplitude");
        const double d1 = trap_depth(base, m1).depth_ev;
        const double d2 = trap_depth(strong, m2).depth_ev;
        r.require(near(d2, 4.0 * d1, 0.01), "depth not quadratic in the RF amplitude");
    }
    return r;
}

// 6. State-detection fidelity claims and tail-sum accuracy.
CheckResult check_fidelity_claims() {
    CheckResult r;
    const double t_fast = min_integration_time(0.40 * 1e7, 1e3, 0.99);
    r.require(t_fast <= 5e-6, "40% efficiency needs " + fmt(t_fast * 1e6) + " us > 5");
    const double t_slow = min_integration_time(0.01 * 1e7, 1e3, 0.99);
    r.require(t_slow <= 200e-6, "1% efficiency needs " + fmt(t_slow * 1e6) + " us > 200");
    const double f_pd = fidelity_at_time(0.09 * 1e7, 1e3, 1e-3);
    r.require(f_pd > 0.99, "photodiode fidelity " + fmt(f_pd) + " at 1 ms");

    using big_float = boost::multiprecision::cpp_bin_float_50;
    for (double mean : {0.5, 2.0, 10.0, 40.0, 100.0}) {
        for (unsigned n : {1u, unsigned(mean / 2) + 1u, unsigned(mean) + 1u,
                           unsigned(mean + 4.0 * std::sqrt(mean)) + 1u}) {
            big_float term = exp(-big_float(mean));
            big_float lower = 0;
            for (unsigned k = 0; k < n; ++k) {
                lower += term;
                term *= big_float(mean) / (k + 1);
            }
            big_float upper = 0;
            const unsigned cap = n + 400 + unsigned(4.0 * mean);
            big_float t2 = exp(-big_float(mean));
            for (unsigned k = 1; k <= n && n > 0; ++k) t2 *= big_float(mean) / k;
            for (unsigned k = n; k < cap; ++k) {
                upper += t2;
                t2 *= big_float(mean) / (k + 1);
            }
            const double ref_lower = double(lower);
            const double ref_upper = double(upper);
            if (ref_lower > 1e-280)
                r.require(near(poisson_lower_tail(mean, n), ref_lower, 1e-12),
                          "lower tail mean " + fmt(mean) + " n " + std::to_string(n));
            if (ref_upper > 1e-280)
                r.require(near(poisson_upper_tail(mean, n), ref_upper, 1e-12),
                          "upper tail mean " + fmt(mean) + " n " + std::to_string(n));
        }
    }
    return r;
}

// 7. Lock-in simulation against the analytic chain and the measured signal.
CheckResult check_lockin_simulation() {
    CheckResult r;
    const auto sc = preset_ito_pd();

    // noiseless convergence over 100 time constants
    DetectionScenario quiet = sc;
    quiet.background = {};
    quiet.simulation.shot_noise = false;
    quiet.detector.dark_current_a = 0.0;
    quiet.amplifier.amp_input_noise_a_rthz = 0.0;
    quiet.simulation.duration_s = 100.0 * quiet.amplifier.lockin_time_constant_s;
    const auto trace = simulate_scenario(quiet, true, 1);
    const auto budget = detect_budget(quiet);
    r.require(near(trace.mean_v, *budget.lockin_output_v, 0.01),
              "noiseless mean " + fmt(trace.mean_v * 1e3) + " mV vs analytic " +
                  fmt(*budget.lockin_output_v * 1e3));

    // measured-signal consistency and histogram separation
    const auto cmp = compare_scenario_runs(sc, *sc.seed);
    const double signal_mv = cmp.signal_mean_v * 1e3;
    r.require(std::abs(signal_mv - 175.0) < 1.2 * 49.0,
              "signal " + fmt(signal_mv) + " mV not within 1.2 sigma of 175 +- 49");
    r.require(cmp.separation > 1.0,
              "separation " + fmt(cmp.separation) + " below 1 pooled sigma");

    // byte-identical artifacts for a fixed seed
    const fs::path work = fs::temp_directory_path() / "iontrap_acc_lockin";
    fs::remove_all(work);
    json short_sc = to_json(sc);
    short_sc["simulation"]["duration_s"] = 20.0;
    fs::create_directories(work);
    std::ofstream(work / "short.json") << short_sc.dump(2);
    const std::string scenario = (work / "short.json").string();
    r.require(run_cli("detect lockin --scenario " + scenario + " --seed 11 --out " +
                          (work / "a").string(),
                      "lockin_a") == 0,
              "lock-in run a failed");
    r.require(run_cli("detect lockin --scenario " + scenario + " --seed 11 --out " +
                          (work / "b").string(),
                      "lockin_b") == 0,
              "lock-in run b failed");
    if (r.pass) {
        const bool identical = slurp(work / "a" / "lockin_with_ions.csv") ==
                                   slurp(work / "b" / "lockin_with_ions.csv") &&
                               slurp(work / "a" / "lockin_summary.json") ==
                                   slurp(work / "b" / "lockin_summary.json");
        r.require(identical, "outputs differ between identical seeded runs");
    }
    return r;
}

// 8. Entanglement unit: rates, exact coupling, Monte Carlo validation.
CheckResult check_entanglement_unit() {
    CheckResult r;
    const fs::path work = fs::temp_directory_path() / "iontrap_acc_ent";
    fs::remove_all(work);
    r.require(run_cli("entangle rate --preset proposed-unit --out " + (work / "p").string(),
                      "ent_p") == 0,
              "proposed-unit run failed");
    if (!r.pass) return r;
    const json p = load_json(work / "p" / "entanglement_rate.json");
    const double rate = p["rate_hz"].get<double>();
    r.require(near(rate, 33.75, 1e-9), "rate " + fmt(rate) + " vs 33.75");
    const double ratio = rate / 30.0;
    r.require(ratio < 1.25 && ratio > 0.8, "rate outside factor 1.25 of 30/s");

    r.require(coupling_from_geometry(0.5, 0.10) == 0.45, "coupling(0.5, 0.10) != 0.45");

    const auto mc = simulate_attempts(preset_proposed_unit(), 10'000'000, 424242);
    r.require(std::abs(mc.rate_hz - 33.75) <= 3.0 * mc.standard_error_hz,
              "Monte Carlo " + fmt(mc.rate_hz) + " beyond 3 standard errors of 33.75");

    r.require(run_cli("entangle rate --preset bulk-baseline --out " + (work / "b").string(),
                      "ent_b") == 0,
              "bulk-baseline run failed");
    if (!r.pass) return r;
    const json b = load_json(work / "b" / "entanglement_rate.json");
    r.require(near(b["linear_herald_rate_hz"].get<double>(), 0.3, 1e-9),
              "bulk linear rate not emitted as 0.3/s");
    r.require(near(b["two_photon_coincidence_rate_hz"].get<double>(), 4.5e-7, 1e-6),
              "bulk coincidence rate not emitted as 4.5e-7/s");
    r.require(near(b["reference_rate_hz"].get<double>(), 2e-3, 1e-12),
              "reference constant not carried in the report");
    r.require(b["reference_discrepancy"].get<bool>(),
              "reference discrepancy not flagged");
    return r;
}

// 9. Lock-in response is linear in the number of ions.
CheckResult check_ion_number_linearity() {
    CheckResult r;
    DetectionScenario sc = preset_ito_pd();
    sc.source_power_override_w.reset(); // physical product, not the rounded basis
    sc.simulation.duration_s = 600.0;   // long averaging keeps the fit noise floor low
    std::vector<double> n_values, signals;
    for (int n = 10; n <= 100; n += 10) {
        sc.source.n_ions = n;
        const auto cmp = compare_scenario_runs(sc, *sc.seed + 31 * n);
        n_values.push_back(double(n));
        signals.push_back(cmp.signal_mean_v);
    }
    const auto fit = oracles::linear_fit(n_values, signals);
    r.require(fit.r_squared > 0.999,
              "R^2 " + fmt(fit.r_squared) + " below 0.999 over n = 10..100");
    r.require(fit.slope > 0.0, "response does not grow with ion number");
    return r;
}

} // namespace

int main(int argc, char** argv) {
    cli_path = "./iontrap";
    preset_path = "presets";
    std::set<int> only, skip;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc) cli_path = argv[++i];
        else if (arg == "--presets" && i + 1 < argc) preset_path = argv[++i];
        else if (arg == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
        else if (arg == "--skip" && i + 1 < argc) skip.insert(std::atoi(argv[++i]));
    }
    setenv("IONTRAP_PRESET_DIR", preset_path.c_str(), 1);

    struct Criterion {
        int number;
        std::string title;
        double time_limit_s;
        std::function<CheckResult()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "signal budget pipeline (ito-pd, pmt-bulk)", 1.0, check_budget_pipeline},
        {2, "emitted source power for 50 ions", 1.0, check_source_power},
        {3, "responsivity/quantum-efficiency consistency", 1.0, check_qe_consistency},
        {4, "five-wire calibration targets", 30.0, check_trap_calibration},
        {5, "electrostatics property suite", 60.0, check_electrostatics_properties},
        {6, "state-detection fidelity claims", 5.0, check_fidelity_claims},
        {7, "lock-in simulation vs analytic and measured signal", 30.0,
         check_lockin_simulation},
        {8, "entanglement unit rates", 10.0, check_entanglement_unit},
        {9, "lock-in response linear in ion number", 60.0, check_ion_number_linearity},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.number)) continue;
        if (skip.count(c.number)) continue;
        const auto start = std::chrono::steady_clock::now();
        CheckResult result;
        try {
            result = c.run();
        } catch (const std::exception& e) {
            result.pass = false;
            result.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > c.time_limit_s) {
            result.pass = false;
            result.detail += (result.detail.empty() ? "" : "; ") + std::string("runtime ") +
                             fmt(elapsed) + " s above " + fmt(c.time_limit_s) + " s";
        }
        std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << "criterion " << c.number
                  << ": " << c.title << " (" << fmt(elapsed) << " s)";
        if (!result.detail.empty()) std::cout << " -- " << result.detail;
        std::cout << "\n";
        if (!result.pass) ++failures;
    }
    return failures;
}

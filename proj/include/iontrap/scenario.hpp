#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "iontrap/detection_chain.hpp"
#include "iontrap/fluorescence.hpp"
#include "iontrap/lockin_sim.hpp"

// A complete detection scenario: ion source, modulation, collection path,
// detector, amplifier chain and simulation settings. Produces the signal
// budget table row and drives the lock-in simulation.

namespace iontrap {

struct DetectionScenario {
    std::string name;
    IonSource source;
    ModulationSpec modulation;
    CollectionGeometry geometry;
    FilmStack stack;
    // Optional area weighting for partially metal-covered collection area:
    // a fraction of rays passes through one extra attenuating layer.
    std::optional<double> covered_area_fraction;
    std::optional<double> covered_area_transmission;
    DetectorSpec detector;
    AmplifierChain amplifier;
    double temperature_k = 77.0;
    BackgroundSpec background;
    SimulationSpec simulation;
    // When set, budget and simulation use this as the emitted source power
    // (e.g. a rounded tabulated value) instead of the computed product.
    std::optional<double> source_power_override_w;
    std::optional<std::uint64_t> seed;
};

inline double scenario_collection_efficiency(const DetectionScenario& sc) {
    double t = stack_transmission(sc.stack);
    if (sc.covered_area_fraction) {
        const double f = *sc.covered_area_fraction;
        if (f < 0.0 || f > 1.0) throw DomainError("covered area fraction outside [0,1]");
        const double tc = sc.covered_area_transmission.value_or(1.0);
        t *= (1.0 - f) + f * tc;
    }
    return solid_angle_fraction(sc.geometry) * t;
}

inline double scenario_source_power(const DetectionScenario& sc) {
    return sc.source_power_override_w.value_or(total_emitted_power(sc.source));
}

struct BudgetRow {
    double collection_efficiency = 0.0;
    double source_power_w = 0.0;          // basis actually used
    double computed_source_power_w = 0.0; // n_ions x rate x photon energy
    double power_at_detector_w = 0.0;
    double detector_qe = 0.0;
    std::optional<double> photocurrent_a;  // absent for counting detectors
    std::optional<double> lockin_output_v;
};

/// Signal budget through the full chain: collection, power at the detector,
/// detector quantum efficiency, photocurrent and lock-in output. Detectors
/// specified by quantum efficiency alone (no responsivity table) get no
/// current/lock-in entries.
inline BudgetRow detect_budget(const DetectionScenario& sc) {
    BudgetRow row;
    row.collection_efficiency = scenario_collection_efficiency(sc);
    row.computed_source_power_w = total_emitted_power(sc.source);
    row.source_power_w = scenario_source_power(sc);
    row.power_at_detector_w = power_at_detector(row.source_power_w, row.collection_efficiency);
    row.detector_qe =
        detector_qe(sc.detector, sc.temperature_k, Wavelength(sc.source.wavelength_m));
    if (!sc.detector.responsivity_table.empty()) {
        row.photocurrent_a = photocurrent(sc.detector, row.power_at_detector_w, sc.temperature_k);
        row.lockin_output_v =
            lockin_output_analytic(sc.amplifier, *row.photocurrent_a, sc.modulation);
    }
    return row;
}

/// Incident signal photon flux at the detector during the on phase.
inline double scenario_peak_flux_at_detector(const DetectionScenario& sc) {
    const double power = scenario_source_power(sc) * scenario_collection_efficiency(sc);
    return power / photon_energy(Wavelength(sc.source.wavelength_m));
}

/// Runs the lock-in simulation for this scenario. `with_ions = false` keeps
/// the background scatter and noise chain but removes the ion signal.
inline LockinTrace simulate_scenario(const DetectionScenario& sc, bool with_ions,
                                     std::uint64_t seed) {
    const double qe =
        detector_qe(sc.detector, sc.temperature_k, Wavelength(sc.source.wavelength_m));
    const double peak = with_ions ? scenario_peak_flux_at_detector(sc) : 0.0;
    const ModulationSpec mod = sc.modulation;
    auto flux = [peak, mod](double t) {
        return peak * (1.0 - mod.depth * (1.0 - modulation_gate(mod, t)));
    };
    return lockin_simulate(sc.amplifier, sc.modulation, qe, sc.detector.dark_current_a,
                           sc.detector.internal_gain, flux, sc.background, sc.simulation,
                           seed);
}

struct LockinComparison {
    LockinTrace with_ions;
    LockinTrace without_ions;
    double signal_mean_v = 0.0; // background-subtracted ion signal
    double pooled_std_v = 0.0;
    double separation = 0.0;
    double analytic_prediction_v = 0.0;
    std::uint64_t seed_with = 0;
    std::uint64_t seed_without = 0;
};

/// Paired with/without-ions runs (seed and seed+1) and their histogram-level
/// comparison statistics.
inline LockinComparison compare_scenario_runs(const DetectionScenario& sc,
                                              std::uint64_t seed) {
    LockinComparison cmp;
    cmp.seed_with = seed;
    cmp.seed_without = seed + 1;
    cmp.with_ions = simulate_scenario(sc, true, cmp.seed_with);
    cmp.without_ions = simulate_scenario(sc, false, cmp.seed_without);
    cmp.signal_mean_v = cmp.with_ions.mean_v - cmp.without_ions.mean_v;
    cmp.pooled_std_v = std::sqrt(0.5 * (cmp.with_ions.std_v * cmp.with_ions.std_v +
                                        cmp.without_ions.std_v * cmp.without_ions.std_v));
    cmp.separation = cmp.pooled_std_v > 0.0 ? cmp.signal_mean_v / cmp.pooled_std_v : 0.0;
    const auto row = detect_budget(sc);
    cmp.analytic_prediction_v = row.lockin_output_v.value_or(0.0);
    return cmp;
}

} // namespace iontrap

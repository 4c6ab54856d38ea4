#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/electrostatics.hpp"
#include "iontrap/fluorescence.hpp"

// Optical collection path through the transparent trap (solid angle, film
// stack), detector response vs temperature, transimpedance/lock-in signal
// levels and the amplifier noise budget.

namespace iontrap {

struct FilmLayer {
    std::string label;
    double thickness_m = 0.0;
    double transmission_at_422 = 1.0;
    std::optional<double> resistivity_ohm_m;
};

struct FilmStack {
    std::vector<FilmLayer> layers;
    double substrate_transmission = 1.0;

    void validate() const {
        for (const auto& l : layers) {
            if (!(l.thickness_m > 0.0))
                throw DomainError("film layer '" + l.label + "' needs thickness > 0");
            if (l.transmission_at_422 < 0.0 || l.transmission_at_422 > 1.0)
                throw DomainError("film layer '" + l.label + "' transmission outside [0,1]");
        }
        if (substrate_transmission < 0.0 || substrate_transmission > 1.0)
            throw DomainError("substrate transmission outside [0,1]");
    }
};

struct Aperture {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
};

struct CollectionGeometry {
    double ion_height_above_surface = 100e-6; // m
    double substrate_thickness = 150e-6;      // m
    double trap_to_detector_gap = 0.0;        // m
    Aperture detector_aperture;               // in the detector plane, ion at origin

    double standoff() const {
        return ion_height_above_surface + substrate_thickness + trap_to_detector_gap;
    }
    void validate() const {
        if (ion_height_above_surface < 0.0 || substrate_thickness < 0.0 ||
            trap_to_detector_gap < 0.0)
            throw DomainError("collection distances must be >= 0");
        if (!(standoff() > 0.0)) throw DomainError("total standoff must be positive");
        if (!(detector_aperture.x_min < detector_aperture.x_max) ||
            !(detector_aperture.y_min < detector_aperture.y_max))
            throw DomainError("detector aperture is degenerate");
    }
};

/// Fraction of 4*pi intercepted by the aperture as seen from the ion. Uses
/// the same rectangle solid-angle closed form as the electrostatics basis:
/// unit_potential is solid angle / 2*pi, so the fraction is half of it.
inline double solid_angle_fraction(const CollectionGeometry& g) {
    g.validate();
    RectElectrode rect{g.detector_aperture.x_min, g.detector_aperture.x_max,
                       g.detector_aperture.y_min, g.detector_aperture.y_max,
                       ElectrodeRole::Ground, 0.0, "aperture"};
    return 0.5 * unit_potential(rect, {0.0, 0.0, g.standoff()});
}

/// Product of layer transmissions and the substrate transmission.
inline double stack_transmission(const FilmStack& s) {
    s.validate();
    double t = s.substrate_transmission;
    for (const auto& l : s.layers) t *= l.transmission_at_422;
    return t;
}

inline double collection_efficiency(const CollectionGeometry& g, const FilmStack& s) {
    return solid_angle_fraction(g) * stack_transmission(s);
}

inline double power_at_detector(double source_power_w, double efficiency) {
    if (source_power_w < 0.0) throw DomainError("source power must be >= 0");
    return source_power_w * efficiency;
}

enum class DetectorKind { Photodiode, PMT, VLPC };

struct ResponsivityPoint {
    double temperature_k;
    double amps_per_watt;
};

struct DetectorSpec {
    DetectorKind kind = DetectorKind::Photodiode;
    std::vector<ResponsivityPoint> responsivity_table; // sorted by temperature
    std::optional<double> quantum_efficiency;          // alternative to the table
    double dark_current_a = 0.0;
    double dark_count_rate_hz = 0.0;
    double internal_gain = 1.0;
};

/// Exact at table points; log-log interpolation between points; constant
/// extrapolation beyond the ends.
inline double detector_responsivity_at(const DetectorSpec& d, double temperature_k) {
    if (temperature_k < 0.0) throw DomainError("temperature must be >= 0 K");
    if (d.responsivity_table.empty())
        throw DomainError("detector has no responsivity table");
    auto table = d.responsivity_table;
    std::sort(table.begin(), table.end(),
              [](const ResponsivityPoint& a, const ResponsivityPoint& b) {
                  return a.temperature_k < b.temperature_k;
              });
    if (temperature_k <= table.front().temperature_k) return table.front().amps_per_watt;
    if (temperature_k >= table.back().temperature_k) return table.back().amps_per_watt;
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (temperature_k <= table[i].temperature_k) {
            const auto& a = table[i - 1];
            const auto& b = table[i];
            if (temperature_k == b.temperature_k) return b.amps_per_watt;
            const double f = (std::log(temperature_k) - std::log(a.temperature_k)) /
                             (std::log(b.temperature_k) - std::log(a.temperature_k));
            return std::exp(std::log(a.amps_per_watt) +
                            f * (std::log(b.amps_per_watt) - std::log(a.amps_per_watt)));
        }
    }
    return table.back().amps_per_watt;
}

/// Detector quantum efficiency at the given temperature and wavelength.
inline double detector_qe(const DetectorSpec& d, double temperature_k, Wavelength lambda) {
    if (d.quantum_efficiency) return *d.quantum_efficiency;
    return responsivity_to_qe(detector_responsivity_at(d, temperature_k), lambda);
}

inline double photocurrent(const DetectorSpec& d, double power_w, double temperature_k) {
    if (power_w < 0.0) throw DomainError("optical power must be >= 0");
    return power_w * detector_responsivity_at(d, temperature_k) * d.internal_gain;
}

struct AmplifierChain {
    double transimpedance_gain = 1.0e7;           // V/A
    double amp_input_noise_a_rthz = 0.0;          // A/sqrt(Hz), input-referred
    double feedback_resistance = 1.0e9;           // ohm
    double lockin_reference_frequency_hz = 300.0; // Hz
    double lockin_time_constant_s = 0.1;          // s
    // Output convention: V_out = lockin_gain * transimpedance_gain *
    // mean(I(t) * r(t)) with r a unit +-1 square reference at the modulation
    // frequency. For full-depth 50% duty modulation the mean is I_peak / 2.
    double lockin_gain = 4000.0;

    void validate() const {
        if (!(transimpedance_gain > 0.0) || !(lockin_gain > 0.0))
            throw DomainError("amplifier gains must be positive");
        if (!(lockin_reference_frequency_hz > 0.0))
            throw DomainError("lock-in reference frequency must be positive");
        if (!(lockin_time_constant_s > 0.0))
            throw DomainError("lock-in time constant must be positive");
        if (!(feedback_resistance > 0.0))
            throw DomainError("feedback resistance must be positive");
        if (amp_input_noise_a_rthz < 0.0)
            throw DomainError("amplifier noise density must be >= 0");
    }
};

struct NoiseBudget {
    double shot_rms_a = 0.0;
    double johnson_rms_a = 0.0;
    double amp_rms_a = 0.0;
    double total_rms_a = 0.0;
};

/// Input-referred RMS current noise terms over the given bandwidth.
inline NoiseBudget noise_budget(const AmplifierChain& a, double dc_current_a,
                                double bandwidth_hz, double temperature_k) {
    a.validate();
    if (bandwidth_hz < 0.0) throw DomainError("bandwidth must be >= 0");
    if (temperature_k < 0.0) throw DomainError("temperature must be >= 0 K");
    NoiseBudget n;
    n.shot_rms_a = std::sqrt(2.0 * constants.elementary_charge *
                             std::abs(dc_current_a) * bandwidth_hz);
    n.johnson_rms_a = std::sqrt(4.0 * constants.boltzmann_constant * temperature_k *
                                bandwidth_hz / a.feedback_resistance);
    n.amp_rms_a = a.amp_input_noise_a_rthz * std::sqrt(bandwidth_hz);
    n.total_rms_a = std::sqrt(n.shot_rms_a * n.shot_rms_a +
                              n.johnson_rms_a * n.johnson_rms_a +
                              n.amp_rms_a * n.amp_rms_a);
    return n;
}

/// Lock-in output for a square-modulated photocurrent with on-phase peak
/// I_peak. mean(I * r) over one period is min(duty, 1-duty) * depth * I_peak.
inline double lockin_output_analytic(const AmplifierChain& a, double signal_peak_a,
                                     const ModulationSpec& mod) {
    a.validate();
    mod.validate();
    const double demod_mean =
        std::min(mod.duty, 1.0 - mod.duty) * mod.depth * signal_peak_a;
    return a.lockin_gain * a.transimpedance_gain * demod_mean;
}

/// Sheet resistance of parallel conductive layers, ohm/square.
inline double effective_sheet_resistance(const FilmStack& s) {
    s.validate();
    if (s.layers.empty()) throw DomainError("film stack has no layers");
    double conductance = 0.0; // per square
    for (const auto& l : s.layers) {
        if (!l.resistivity_ohm_m)
            throw DomainError("film layer '" + l.label + "' has no resistivity");
        conductance += l.thickness_m / *l.resistivity_ohm_m;
    }
    return 1.0 / conductance;
}

/// Sheet resistance re-expressed as a resistivity at a reference thickness.
inline double effective_resistivity(const FilmStack& s, double reference_thickness_m) {
    if (!(reference_thickness_m > 0.0))
        throw DomainError("reference thickness must be positive");
    return effective_sheet_resistance(s) * reference_thickness_m;
}

} // namespace iontrap

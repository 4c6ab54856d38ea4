#pragma once

#include <cmath>

#include "iontrap/constants.hpp"

// Emitted optical power and its time modulation for a trapped ion (or cloud)
// under Doppler cooling with a chopped repumper. Atomic structure is
// collapsed into a single per-ion scatter rate; the modulation is a square
// gate with configurable duty cycle and depth.

namespace iontrap {

struct IonSource {
    int n_ions = 1;
    double scatter_rate_per_ion = 1.0e7; // photons/s
    double wavelength_m = 422e-9;

    void validate() const {
        if (n_ions < 1) throw DomainError("n_ions must be >= 1");
        if (scatter_rate_per_ion < 0.0)
            throw DomainError("scatter_rate_per_ion must be >= 0");
        if (!(wavelength_m > 0.0)) throw DomainError("wavelength must be positive");
    }
};

struct ModulationSpec {
    double frequency_hz = 300.0;
    double duty = 0.5;      // fraction of the period the gate is open
    double depth = 1.0;     // 1 = fluorescence fully gated by the repumper

    void validate() const {
        if (!(frequency_hz > 0.0)) throw DomainError("modulation frequency must be positive");
        if (!(duty > 0.0) || duty > 1.0) throw DomainError("duty must be in (0, 1]");
        if (depth < 0.0 || depth > 1.0) throw DomainError("depth must be in [0, 1]");
    }
};

/// Total power emitted into 4*pi, W.
inline double total_emitted_power(const IonSource& src) {
    src.validate();
    return src.n_ions * src.scatter_rate_per_ion *
           photon_energy(Wavelength(src.wavelength_m));
}

/// Square gate: 1 during the first `duty` fraction of each period, else 0.
inline double modulation_gate(const ModulationSpec& mod, double t) {
    const double period = 1.0 / mod.frequency_hz;
    double phase = std::fmod(t, period);
    if (phase < 0.0) phase += period;
    return phase < mod.duty * period ? 1.0 : 0.0;
}

/// Instantaneous photon flux (photons/s into 4*pi) at time t.
inline double modulated_flux(const IonSource& src, const ModulationSpec& mod, double t) {
    src.validate();
    mod.validate();
    if (t < 0.0) throw DomainError("time must be >= 0");
    const double rate = src.n_ions * src.scatter_rate_per_ion;
    return rate * (1.0 - mod.depth * (1.0 - modulation_gate(mod, t)));
}

/// Time average of the modulated flux over one period.
inline double cycle_average_flux(const IonSource& src, const ModulationSpec& mod) {
    src.validate();
    mod.validate();
    const double rate = src.n_ions * src.scatter_rate_per_ion;
    return rate * (mod.duty + (1.0 - mod.duty) * (1.0 - mod.depth));
}

} // namespace iontrap

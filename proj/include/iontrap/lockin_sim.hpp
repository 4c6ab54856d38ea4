#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "iontrap/detection_chain.hpp"
#include "iontrap/rng.hpp"

// Time-domain lock-in detection simulation: Poisson photon counting in each
// sample bin, dark current, input-referred amplifier noise, square-reference
// demodulation and a single-pole low-pass at the configured time constant.
// Fully deterministic for a fixed seed.

namespace iontrap {

struct BackgroundSpec {
    double peak_flux_hz = 0.0;       // photons/s at the detector, on phase
    double relative_std = 0.0;       // OU amplitude modulation of the peak
    double correlation_time_s = 1.0; // OU correlation time
    bool modulated = true;           // gated synchronously with the repumper
};

struct SimulationSpec {
    double duration_s = 1.0;
    double sample_rate_hz = 6000.0;
    bool shot_noise = true;
};

struct LockinTrace {
    double sample_rate_hz = 0.0;
    std::vector<double> output_v;  // demodulated, filtered output per sample
    double settle_time_s = 0.0;    // stats exclude samples before this
    double mean_v = 0.0;
    double std_v = 0.0;
};

/// Simulates the demodulated photodiode voltage. `ion_flux_at_detector`
/// gives the deterministic incident signal flux (photons/s) at time t;
/// detection statistics, background scatter and amplifier noise are applied
/// per sample.
inline LockinTrace lockin_simulate(const AmplifierChain& chain,
                                   const ModulationSpec& mod, double quantum_efficiency,
                                   double dark_current_a, double internal_gain,
                                   const std::function<double(double)>& ion_flux_at_detector,
                                   const BackgroundSpec& background,
                                   const SimulationSpec& sim, std::uint64_t seed) {
    chain.validate();
    mod.validate();
    if (!(sim.sample_rate_hz >= 10.0 * mod.frequency_hz))
        throw ConfigError("sample_rate must be at least 10x the modulation frequency",
                          "/simulation/sample_rate_hz");
    if (!(sim.duration_s >= 10.0 * chain.lockin_time_constant_s))
        throw ConfigError("duration must be at least 10 lock-in time constants",
                          "/simulation/duration_s");
    if (quantum_efficiency < 0.0 || quantum_efficiency > 1.0)
        throw DomainError("quantum efficiency outside [0,1]");

    const double dt = 1.0 / sim.sample_rate_hz;
    const std::size_t n = std::size_t(std::llround(sim.duration_s * sim.sample_rate_hz));
    const double tau = chain.lockin_time_constant_s;
    const double alpha = dt / (tau + dt);
    const double e = constants.elementary_charge;
    const double dark_rate = dark_current_a / e; // electrons/s
    const double amp_sigma_a = chain.amp_input_noise_a_rthz *
                               std::sqrt(0.5 * sim.sample_rate_hz);
    // demodulation reference: unit square at the configured lock-in
    // frequency, phase-locked to t = 0 like the modulation gate
    const double period = 1.0 / chain.lockin_reference_frequency_hz;

    const bool have_ou = background.relative_std > 0.0 && background.peak_flux_hz > 0.0;
    const double ou_decay = have_ou ? std::exp(-dt / background.correlation_time_s) : 1.0;
    const double ou_step =
        have_ou ? background.relative_std * std::sqrt(1.0 - ou_decay * ou_decay) : 0.0;

    Rng rng(seed);
    LockinTrace trace;
    trace.sample_rate_hz = sim.sample_rate_hz;
    trace.output_v.resize(n);
    trace.settle_time_s = std::min(10.0 * tau, 0.5 * sim.duration_s);

    double ou = 0.0;
    double filtered = 0.0;
    double sum = 0.0, sum2 = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = double(k) * dt;
        const double gate = modulation_gate(mod, t);
        double bg = 0.0;
        if (background.peak_flux_hz > 0.0) {
            if (have_ou) ou = ou * ou_decay + ou_step * rng.normal();
            bg = background.peak_flux_hz * std::max(0.0, 1.0 + ou);
            if (background.modulated) bg *= gate;
        }
        const double electron_rate =
            (ion_flux_at_detector(t) + bg) * quantum_efficiency + dark_rate;
        const double expected = electron_rate * dt;
        const double counts = sim.shot_noise ? double(rng.poisson(expected)) : expected;
        double current = e * counts / dt * internal_gain;
        if (amp_sigma_a > 0.0) current += amp_sigma_a * rng.normal();

        double phase = std::fmod(t, period);
        if (phase < 0.0) phase += period;
        const double reference = phase < 0.5 * period ? 1.0 : -1.0;
        const double demod = chain.transimpedance_gain * current * reference;
        filtered += alpha * (demod - filtered);
        const double out = chain.lockin_gain * filtered;
        trace.output_v[k] = out;
        if (t >= trace.settle_time_s) {
            sum += out;
            sum2 += out * out;
            ++counted;
        }
    }
    if (counted > 0) {
        trace.mean_v = sum / double(counted);
        const double var = std::max(0.0, sum2 / double(counted) - trace.mean_v * trace.mean_v);
        trace.std_v = std::sqrt(var);
    }
    return trace;
}

} // namespace iontrap

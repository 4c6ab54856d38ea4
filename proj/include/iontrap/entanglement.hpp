#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "iontrap/constants.hpp"
#include "iontrap/rng.hpp"

// Link budget for heralded remote entanglement between two emitter nodes:
// per-attempt success probability and generation rate under a single-photon
// (linear) herald or a two-photon coincidence herald.

namespace iontrap {

struct EmitterNode {
    double branching_ratio = 0.0;     // emission into the herald channel
    double coupling_efficiency = 0.0; // solid angle x optical losses
    double detector_qe = 0.0;

    void validate() const {
        auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in01(branching_ratio) || !in01(coupling_efficiency) || !in01(detector_qe))
            throw DomainError("emitter node efficiencies must be in [0,1]");
    }
};

enum class HeraldProtocol { LinearHerald, TwoPhotonCoincidence };

struct EntanglementLink {
    EmitterNode node_a;
    EmitterNode node_b;
    double attempt_rate_hz = 0.0;
    HeraldProtocol protocol = HeraldProtocol::LinearHerald;
    // Default 1 for the linear herald, 1/2 for the coincidence herald.
    std::optional<double> herald_prefactor;
    std::optional<double> reference_rate_hz; // external value to compare against

    double prefactor() const {
        if (herald_prefactor) return *herald_prefactor;
        return protocol == HeraldProtocol::LinearHerald ? 1.0 : 0.5;
    }
    void validate() const {
        node_a.validate();
        node_b.validate();
        if (!(attempt_rate_hz > 0.0)) throw DomainError("attempt rate must be positive");
        const double pf = prefactor();
        if (!(pf > 0.0) || pf > 1.0) throw DomainError("herald prefactor must be in (0,1]");
    }
};

struct RateReport {
    HeraldProtocol protocol = HeraldProtocol::LinearHerald;
    double per_attempt_probability = 0.0;
    double rate_hz = 0.0;
    std::optional<double> ratio_to_reference; // rate / reference, if provided
};

inline double per_attempt_probability(const EntanglementLink& link, HeraldProtocol protocol) {
    const double pf = link.herald_prefactor
                          ? *link.herald_prefactor
                          : (protocol == HeraldProtocol::LinearHerald ? 1.0 : 0.5);
    const EmitterNode& a = link.node_a;
    const EmitterNode& b = link.node_b;
    double p;
    if (protocol == HeraldProtocol::LinearHerald) {
        // one heralding photon from a shared emission event; the geometric
        // mean covers asymmetric nodes and collapses to branching x coupling
        // x qe for identical ones
        const double branching = std::sqrt(a.branching_ratio * b.branching_ratio);
        p = pf * branching *
            std::sqrt(a.coupling_efficiency * a.detector_qe * b.coupling_efficiency *
                      b.detector_qe);
    } else {
        p = pf * (a.branching_ratio * a.coupling_efficiency * a.detector_qe) *
            (b.branching_ratio * b.coupling_efficiency * b.detector_qe);
    }
    if (p > 1.0)
        throw DomainError("per-attempt probability exceeds 1; inconsistent link parameters");
    return p;
}

/// Rate report for the link's configured protocol.
inline RateReport entanglement_rate(const EntanglementLink& link) {
    link.validate();
    RateReport r;
    r.protocol = link.protocol;
    r.per_attempt_probability = per_attempt_probability(link, link.protocol);
    r.rate_hz = link.attempt_rate_hz * r.per_attempt_probability;
    if (link.reference_rate_hz && *link.reference_rate_hz > 0.0)
        r.ratio_to_reference = r.rate_hz / *link.reference_rate_hz;
    return r;
}

inline double rate_ratio(const RateReport& candidate, const RateReport& baseline) {
    if (!(baseline.rate_hz > 0.0)) throw DomainError("baseline rate must be positive");
    return candidate.rate_hz / baseline.rate_hz;
}

/// Coupling efficiency from a collection solid-angle fraction and the optical
/// loss of the path.
inline double coupling_from_geometry(double solid_angle_fraction, double stack_loss) {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(solid_angle_fraction) || !in01(stack_loss))
        throw DomainError("inputs must be in [0,1]");
    return solid_angle_fraction * (1.0 - stack_loss);
}

struct MonteCarloRate {
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    double rate_hz = 0.0;
    double standard_error_hz = 0.0;
};

/// Bernoulli validation of the analytic per-attempt probability.
inline MonteCarloRate simulate_attempts(const EntanglementLink& link,
                                        std::uint64_t attempts, std::uint64_t seed) {
    link.validate();
    const double p = per_attempt_probability(link, link.protocol);
    Rng rng(seed);
    std::uint64_t successes = 0;
    for (std::uint64_t i = 0; i < attempts; ++i)
        if (rng.uniform() < p) ++successes;
    MonteCarloRate mc;
    mc.attempts = attempts;
    mc.successes = successes;
    const double phat = attempts > 0 ? double(successes) / double(attempts) : 0.0;
    mc.rate_hz = link.attempt_rate_hz * phat;
    mc.standard_error_hz =
        link.attempt_rate_hz * std::sqrt(std::max(phat * (1.0 - phat), p * (1.0 - p)) /
                                         std::max<double>(1.0, double(attempts)));
    return mc;
}

} // namespace iontrap

#pragma once

#include <array>
#include <optional>
#include <string>

#include <json.hpp>

#include "iontrap/calibrate.hpp"
#include "iontrap/electrostatics.hpp"
#include "iontrap/entanglement.hpp"
#include "iontrap/scenario.hpp"
#include "iontrap/state_detection.hpp"
#include "iontrap/version.hpp"

// JSON scenario files. Every document carries a versioned "schema" tag:
// trap-layout/1, detection-scenario/1, entanglement-link/1, fidelity-query/1.
// Parse errors throw ConfigError with the JSON-pointer path of the offending
// field.

namespace iontrap {

using json = nlohmann::json;

struct FidelityQuery {
    std::string name;
    double bright_rate_hz = 0.0;
    double dark_rate_hz = 0.0;
    std::optional<double> target_fidelity;
    std::optional<double> integration_time_s;
};

struct SweepSpec {
    std::string parameter_path; // JSON pointer into the scenario document
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
};

namespace detail {

inline const json& require_field(const json& j, const std::string& key,
                                 const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError("missing required field", path + "/" + key);
    return j.at(key);
}

inline double require_number(const json& j, const std::string& key,
                             const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw ConfigError("expected a number", path + "/" + key);
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback,
                        const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("expected a number", path + "/" + key);
    return v.get<double>();
}

inline std::string require_string(const json& j, const std::string& key,
                                  const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_string()) throw ConfigError("expected a string", path + "/" + key);
    return v.get<std::string>();
}

} // namespace detail

inline std::string schema_of(const json& j) {
    return detail::require_string(j, "schema", "");
}

// ---- trap layout ----------------------------------------------------------

inline json to_json(const TrapLayout& layout) {
    json j;
    j["schema"] = "trap-layout/1";
    j["rf_amplitude_v"] = layout.rf_amplitude;
    j["rf_angular_frequency_rad_per_s"] = layout.rf_angular_frequency;
    j["ion_mass_kg"] = layout.ion_mass;
    j["ion_charge_c"] = layout.ion_charge;
    json electrodes = json::array();
    for (const auto& e : layout.electrodes) {
        json je;
        je["label"] = e.label;
        je["role"] = e.role == ElectrodeRole::RF ? "rf"
                     : e.role == ElectrodeRole::DC ? "dc"
                                                   : "ground";
        je["x_min_m"] = e.x_min;
        je["x_max_m"] = e.x_max;
        je["y_min_m"] = e.y_min;
        je["y_max_m"] = e.y_max;
        je["voltage_v"] = e.voltage;
        electrodes.push_back(je);
    }
    j["electrodes"] = electrodes;
    return j;
}

inline TrapLayout trap_layout_from_json(const json& j) {
    if (schema_of(j) != "trap-layout/1")
        throw ConfigError("expected schema trap-layout/1", "/schema");
    TrapLayout layout;
    layout.rf_amplitude = detail::require_number(j, "rf_amplitude_v", "");
    layout.rf_angular_frequency = detail::require_number(j, "rf_angular_frequency_rad_per_s", "");
    layout.ion_mass = detail::require_number(j, "ion_mass_kg", "");
    layout.ion_charge = detail::require_number(j, "ion_charge_c", "");
    const json& electrodes = detail::require_field(j, "electrodes", "");
    if (!electrodes.is_array() || electrodes.empty())
        throw ConfigError("expected a non-empty array", "/electrodes");
    int idx = 0;
    for (const auto& je : electrodes) {
        const std::string path = "/electrodes/" + std::to_string(idx);
        RectElectrode e;
        e.label = je.contains("label") ? je.at("label").get<std::string>() : "";
        const std::string role = detail::require_string(je, "role", path);
        if (role == "rf")
            e.role = ElectrodeRole::RF;
        else if (role == "dc")
            e.role = ElectrodeRole::DC;
        else if (role == "ground")
            e.role = ElectrodeRole::Ground;
        else
            throw ConfigError("role must be rf, dc or ground", path + "/role");
        e.x_min = detail::require_number(je, "x_min_m", path);
        e.x_max = detail::require_number(je, "x_max_m", path);
        e.y_min = detail::require_number(je, "y_min_m", path);
        e.y_max = detail::require_number(je, "y_max_m", path);
        e.voltage = detail::require_number(je, "voltage_v", path);
        layout.electrodes.push_back(e);
        ++idx;
    }
    validate_layout(layout);
    return layout;
}

// ---- detection scenario ----------------------------------------------------

inline json to_json(const DetectionScenario& sc) {
    json j;
    j["schema"] = "detection-scenario/1";
    j["name"] = sc.name;
    j["source"] = {{"n_ions", sc.source.n_ions},
                   {"scatter_rate_per_ion_hz", sc.source.scatter_rate_per_ion},
                   {"wavelength_m", sc.source.wavelength_m}};
    j["modulation"] = {{"frequency_hz", sc.modulation.frequency_hz},
                       {"duty", sc.modulation.duty},
                       {"depth", sc.modulation.depth}};
    j["geometry"] = {{"ion_height_m", sc.geometry.ion_height_above_surface},
                     {"substrate_thickness_m", sc.geometry.substrate_thickness},
                     {"detector_gap_m", sc.geometry.trap_to_detector_gap},
                     {"aperture",
                      {{"x_min_m", sc.geometry.detector_aperture.x_min},
                       {"x_max_m", sc.geometry.detector_aperture.x_max},
                       {"y_min_m", sc.geometry.detector_aperture.y_min},
                       {"y_max_m", sc.geometry.detector_aperture.y_max}}}};
    json layers = json::array();
    for (const auto& l : sc.stack.layers) {
        json jl = {{"label", l.label},
                   {"thickness_m", l.thickness_m},
                   {"transmission_at_422", l.transmission_at_422}};
        if (l.resistivity_ohm_m) jl["resistivity_ohm_m"] = *l.resistivity_ohm_m;
        layers.push_back(jl);
    }
    j["stack"] = {{"layers", layers},
                  {"substrate_transmission", sc.stack.substrate_transmission}};
    if (sc.covered_area_fraction) j["covered_area_fraction"] = *sc.covered_area_fraction;
    if (sc.covered_area_transmission)
        j["covered_area_transmission"] = *sc.covered_area_transmission;
    json detector;
    detector["kind"] = sc.detector.kind == DetectorKind::Photodiode ? "photodiode"
                       : sc.detector.kind == DetectorKind::PMT      ? "pmt"
                                                                    : "vlpc";
    if (!sc.detector.responsivity_table.empty()) {
        json table = json::array();
        for (const auto& p : sc.detector.responsivity_table)
            table.push_back({{"temperature_k", p.temperature_k},
                             {"amps_per_watt", p.amps_per_watt}});
        detector["responsivity_table"] = table;
    }
    if (sc.detector.quantum_efficiency)
        detector["quantum_efficiency"] = *sc.detector.quantum_efficiency;
    detector["dark_current_a"] = sc.detector.dark_current_a;
    detector["dark_count_rate_hz"] = sc.detector.dark_count_rate_hz;
    detector["internal_gain"] = sc.detector.internal_gain;
    j["detector"] = detector;
    j["amplifier"] = {{"transimpedance_v_per_a", sc.amplifier.transimpedance_gain},
                      {"input_noise_a_per_rthz", sc.amplifier.amp_input_noise_a_rthz},
                      {"feedback_resistance_ohm", sc.amplifier.feedback_resistance},
                      {"lockin_reference_hz", sc.amplifier.lockin_reference_frequency_hz},
                      {"lockin_time_constant_s", sc.amplifier.lockin_time_constant_s},
                      {"lockin_gain", sc.amplifier.lockin_gain}};
    j["temperature_k"] = sc.temperature_k;
    j["background"] = {{"peak_flux_hz", sc.background.peak_flux_hz},
                       {"relative_std", sc.background.relative_std},
                       {"correlation_time_s", sc.background.correlation_time_s},
                       {"modulated", sc.background.modulated}};
    j["simulation"] = {{"duration_s", sc.simulation.duration_s},
                       {"sample_rate_hz", sc.simulation.sample_rate_hz},
                       {"shot_noise", sc.simulation.shot_noise}};
    if (sc.source_power_override_w) j["source_power_override_w"] = *sc.source_power_override_w;
    if (sc.seed) j["seed"] = *sc.seed;
    return j;
}

inline DetectionScenario detection_scenario_from_json(const json& j) {
    if (schema_of(j) != "detection-scenario/1")
        throw ConfigError("expected schema detection-scenario/1", "/schema");
    DetectionScenario sc;
    sc.name = j.contains("name") ? j.at("name").get<std::string>() : "";

    const json& src = detail::require_field(j, "source", "");
    const double n_ions = detail::require_number(src, "n_ions", "/source");
    sc.source.n_ions = int(n_ions);
    if (sc.source.n_ions < 1 || double(sc.source.n_ions) != n_ions)
        throw ConfigError("n_ions must be a positive integer", "/source/n_ions");
    sc.source.scatter_rate_per_ion =
        detail::require_number(src, "scatter_rate_per_ion_hz", "/source");
    sc.source.wavelength_m = detail::require_number(src, "wavelength_m", "/source");

    const json& mod = detail::require_field(j, "modulation", "");
    sc.modulation.frequency_hz = detail::require_number(mod, "frequency_hz", "/modulation");
    sc.modulation.duty = detail::number_or(mod, "duty", 0.5, "/modulation");
    sc.modulation.depth = detail::number_or(mod, "depth", 1.0, "/modulation");

    const json& geo = detail::require_field(j, "geometry", "");
    sc.geometry.ion_height_above_surface =
        detail::require_number(geo, "ion_height_m", "/geometry");
    sc.geometry.substrate_thickness =
        detail::require_number(geo, "substrate_thickness_m", "/geometry");
    sc.geometry.trap_to_detector_gap =
        detail::number_or(geo, "detector_gap_m", 0.0, "/geometry");
    const json& ap = detail::require_field(geo, "aperture", "/geometry");
    sc.geometry.detector_aperture.x_min =
        detail::require_number(ap, "x_min_m", "/geometry/aperture");
    sc.geometry.detector_aperture.x_max =
        detail::require_number(ap, "x_max_m", "/geometry/aperture");
    sc.geometry.detector_aperture.y_min =
        detail::require_number(ap, "y_min_m", "/geometry/aperture");
    sc.geometry.detector_aperture.y_max =
        detail::require_number(ap, "y_max_m", "/geometry/aperture");

    const json& stack = detail::require_field(j, "stack", "");
    sc.stack.substrate_transmission =
        detail::number_or(stack, "substrate_transmission", 1.0, "/stack");
    if (stack.contains("layers")) {
        int idx = 0;
        for (const auto& jl : stack.at("layers")) {
            const std::string path = "/stack/layers/" + std::to_string(idx);
            FilmLayer l;
            l.label = jl.contains("label") ? jl.at("label").get<std::string>() : "";
            l.thickness_m = detail::require_number(jl, "thickness_m", path);
            l.transmission_at_422 = detail::require_number(jl, "transmission_at_422", path);
            if (jl.contains("resistivity_ohm_m"))
                l.resistivity_ohm_m = jl.at("resistivity_ohm_m").get<double>();
            sc.stack.layers.push_back(l);
            ++idx;
        }
    }
    if (j.contains("covered_area_fraction"))
        sc.covered_area_fraction = j.at("covered_area_fraction").get<double>();
    if (j.contains("covered_area_transmission"))
        sc.covered_area_transmission = j.at("covered_area_transmission").get<double>();

    const json& det = detail::require_field(j, "detector", "");
    const std::string kind = detail::require_string(det, "kind", "/detector");
    if (kind == "photodiode")
        sc.detector.kind = DetectorKind::Photodiode;
    else if (kind == "pmt")
        sc.detector.kind = DetectorKind::PMT;
    else if (kind == "vlpc")
        sc.detector.kind = DetectorKind::VLPC;
    else
        throw ConfigError("kind must be photodiode, pmt or vlpc", "/detector/kind");
    if (det.contains("responsivity_table")) {
        int idx = 0;
        for (const auto& jp : det.at("responsivity_table")) {
            const std::string path = "/detector/responsivity_table/" + std::to_string(idx);
            ResponsivityPoint p;
            p.temperature_k = detail::require_number(jp, "temperature_k", path);
            p.amps_per_watt = detail::require_number(jp, "amps_per_watt", path);
            sc.detector.responsivity_table.push_back(p);
            ++idx;
        }
    }
    if (det.contains("quantum_efficiency"))
        sc.detector.quantum_efficiency = det.at("quantum_efficiency").get<double>();
    if (sc.detector.responsivity_table.empty() && !sc.detector.quantum_efficiency)
        throw ConfigError("detector needs a responsivity_table or quantum_efficiency",
                          "/detector");
    sc.detector.dark_current_a = detail::number_or(det, "dark_current_a", 0.0, "/detector");
    sc.detector.dark_count_rate_hz =
        detail::number_or(det, "dark_count_rate_hz", 0.0, "/detector");
    sc.detector.internal_gain = detail::number_or(det, "internal_gain", 1.0, "/detector");

    const json& amp = detail::require_field(j, "amplifier", "");
    sc.amplifier.transimpedance_gain =
        detail::require_number(amp, "transimpedance_v_per_a", "/amplifier");
    sc.amplifier.amp_input_noise_a_rthz =
        detail::number_or(amp, "input_noise_a_per_rthz", 0.0, "/amplifier");
    sc.amplifier.feedback_resistance =
        detail::number_or(amp, "feedback_resistance_ohm", 1e9, "/amplifier");
    sc.amplifier.lockin_reference_frequency_hz =
        detail::number_or(amp, "lockin_reference_hz", sc.modulation.frequency_hz, "/amplifier");
    sc.amplifier.lockin_time_constant_s =
        detail::require_number(amp, "lockin_time_constant_s", "/amplifier");
    sc.amplifier.lockin_gain = detail::require_number(amp, "lockin_gain", "/amplifier");

    sc.temperature_k = detail::require_number(j, "temperature_k", "");

    if (j.contains("background")) {
        const json& bg = j.at("background");
        sc.background.peak_flux_hz = detail::number_or(bg, "peak_flux_hz", 0.0, "/background");
        sc.background.relative_std = detail::number_or(bg, "relative_std", 0.0, "/background");
        sc.background.correlation_time_s =
            detail::number_or(bg, "correlation_time_s", 1.0, "/background");
        sc.background.modulated =
            bg.contains("modulated") ? bg.at("modulated").get<bool>() : true;
    }
    if (j.contains("simulation")) {
        const json& sim = j.at("simulation");
        sc.simulation.duration_s = detail::number_or(sim, "duration_s", 1.0, "/simulation");
        sc.simulation.sample_rate_hz =
            detail::number_or(sim, "sample_rate_hz", 6000.0, "/simulation");
        sc.simulation.shot_noise =
            sim.contains("shot_noise") ? sim.at("shot_noise").get<bool>() : true;
    }
    if (j.contains("source_power_override_w"))
        sc.source_power_override_w = j.at("source_power_override_w").get<double>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();

    sc.source.validate();
    sc.modulation.validate();
    sc.geometry.validate();
    sc.stack.validate();
    sc.amplifier.validate();
    return sc;
}

// ---- entanglement link -----------------------------------------------------

inline json to_json(const EntanglementLink& link, const std::string& name = "") {
    json j;
    j["schema"] = "entanglement-link/1";
    if (!name.empty()) j["name"] = name;
    auto node = [](const EmitterNode& n) {
        return json{{"branching_ratio", n.branching_ratio},
                    {"coupling_efficiency", n.coupling_efficiency},
                    {"detector_qe", n.detector_qe}};
    };
    j["node_a"] = node(link.node_a);
    j["node_b"] = node(link.node_b);
    j["attempt_rate_hz"] = link.attempt_rate_hz;
    j["protocol"] = link.protocol == HeraldProtocol::LinearHerald ? "linear_herald"
                                                                  : "two_photon_coincidence";
    if (link.herald_prefactor) j["herald_prefactor"] = *link.herald_prefactor;
    if (link.reference_rate_hz) j["reference_rate_hz"] = *link.reference_rate_hz;
    return j;
}

inline EntanglementLink entanglement_link_from_json(const json& j) {
    if (schema_of(j) != "entanglement-link/1")
        throw ConfigError("expected schema entanglement-link/1", "/schema");
    EntanglementLink link;
    auto node = [&](const std::string& key) {
        const json& jn = detail::require_field(j, key, "");
        EmitterNode n;
        n.branching_ratio = detail::require_number(jn, "branching_ratio", "/" + key);
        n.coupling_efficiency = detail::require_number(jn, "coupling_efficiency", "/" + key);
        n.detector_qe = detail::require_number(jn, "detector_qe", "/" + key);
        return n;
    };
    link.node_a = node("node_a");
    link.node_b = node("node_b");
    link.attempt_rate_hz = detail::require_number(j, "attempt_rate_hz", "");
    const std::string protocol = detail::require_string(j, "protocol", "");
    if (protocol == "linear_herald")
        link.protocol = HeraldProtocol::LinearHerald;
    else if (protocol == "two_photon_coincidence")
        link.protocol = HeraldProtocol::TwoPhotonCoincidence;
    else
        throw ConfigError("protocol must be linear_herald or two_photon_coincidence",
                          "/protocol");
    if (j.contains("herald_prefactor"))
        link.herald_prefactor = j.at("herald_prefactor").get<double>();
    if (j.contains("reference_rate_hz"))
        link.reference_rate_hz = j.at("reference_rate_hz").get<double>();
    link.validate();
    return link;
}

// ---- fidelity query ---------------------------------------------------------

inline json to_json(const FidelityQuery& q) {
    json j;
    j["schema"] = "fidelity-query/1";
    if (!q.name.empty()) j["name"] = q.name;
    j["bright_rate_hz"] = q.bright_rate_hz;
    j["dark_rate_hz"] = q.dark_rate_hz;
    if (q.target_fidelity) j["target_fidelity"] = *q.target_fidelity;
    if (q.integration_time_s) j["integration_time_s"] = *q.integration_time_s;
    return j;
}

inline FidelityQuery fidelity_query_from_json(const json& j) {
    if (schema_of(j) != "fidelity-query/1")
        throw ConfigError("expected schema fidelity-query/1", "/schema");
    FidelityQuery q;
    q.name = j.contains("name") ? j.at("name").get<std::string>() : "";
    q.bright_rate_hz = detail::require_number(j, "bright_rate_hz", "");
    q.dark_rate_hz = detail::require_number(j, "dark_rate_hz", "");
    if (j.contains("target_fidelity"))
        q.target_fidelity = j.at("target_fidelity").get<double>();
    if (j.contains("integration_time_s"))
        q.integration_time_s = j.at("integration_time_s").get<double>();
    if (!q.target_fidelity && !q.integration_time_s)
        throw ConfigError("need target_fidelity or integration_time_s", "/target_fidelity");
    return q;
}

// ---- sweep ------------------------------------------------------------------

inline std::optional<SweepSpec> sweep_from_json(const json& j) {
    if (!j.contains("sweep")) return std::nullopt;
    const json& js = j.at("sweep");
    SweepSpec s;
    s.parameter_path = detail::require_string(js, "path", "/sweep");
    s.from = detail::require_number(js, "from", "/sweep");
    s.to = detail::require_number(js, "to", "/sweep");
    const double steps = detail::require_number(js, "steps", "/sweep");
    s.steps = int(steps);
    if (s.steps < 1 || double(s.steps) != steps)
        throw ConfigError("sweep needs at least 1 step", "/sweep/steps");
    return s;
}

} // namespace iontrap

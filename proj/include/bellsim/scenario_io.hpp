#pragma once

// JSON scenario files. Lengths in nm (wavelengths, path delays) or mm
// (thicknesses), times in fs, angles in degrees. Keys starting with "_" are
// annotations and ignored.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bellsim/errors.hpp"
#include "bellsim/material_data.hpp"
#include "bellsim/scenario.hpp"

namespace bellsim::scenario {

namespace io_detail {

using nlohmann::json;

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return j.at(key);
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline AxisOrientation parse_axis(const std::string& s, const std::string& where) {
    if (s == "horizontal") return AxisOrientation::horizontal;
    if (s == "vertical") return AxisOrientation::vertical;
    throw ConfigError(where + ": axis must be 'horizontal' or 'vertical', got '" + s + "'");
}

inline BirefringentElement parse_element(const json& j, const dispersion::MaterialTable& mats,
                                         const std::string& where) {
    BirefringentElement el;
    el.material = dispersion::lookup(mats, need(j, "material", where).get<std::string>());
    el.thickness_mm = need(j, "thickness_mm", where).get<double>();
    el.axis = parse_axis(need(j, "axis", where).get<std::string>(), where);
    el.tilt_deg = get_or(j, "tilt_deg", 0.0);
    if (j.contains("cut_angle_deg") && j.at("cut_angle_deg").is_number()) {
        el.cut_angle_deg = j.at("cut_angle_deg").get<double>();
    }
    return el;
}

inline spectral::SpectralFilter parse_filter(const json& j, const std::string& where) {
    spectral::SpectralFilter f;
    const auto shape = need(j, "shape", where).get<std::string>();
    if (shape == "none") {
        f.shape = spectral::FilterShape::none;
    } else if (shape == "gaussian") {
        f.shape = spectral::FilterShape::gaussian;
    } else if (shape == "rectangular") {
        f.shape = spectral::FilterShape::rectangular;
    } else {
        throw ConfigError(where + ": unknown filter shape '" + shape + "'");
    }
    f.center_nm = get_or(j, "center_nm", 0.0);
    f.fwhm_nm = get_or(j, "fwhm_nm", 0.0);
    return f;
}

}  // namespace io_detail

/// Parses a scenario document. `base_dir` resolves a relative materials_file.
inline SourceConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                 const dispersion::MaterialTable* materials = nullptr) {
    using namespace io_detail;
    try {
        if (get_or(doc, "schema_version", 0) != 1) throw ConfigError("config: schema_version must be 1");
        dispersion::MaterialTable loaded;
        if (!materials) {
            std::filesystem::path mp = need(doc, "materials_file", "config").get<std::string>();
            if (mp.is_relative()) mp = base_dir / mp;
            loaded = dispersion::load_materials(mp.string());
            materials = &loaded;
        }
        const auto& mats = *materials;
        SourceConfig c;

        const auto scheme = need(doc, "scheme", "config").get<std::string>();
        if (scheme == "collinear") {
            c.scheme = Scheme::collinear;
        } else if (scheme == "mzi") {
            c.scheme = Scheme::mzi;
        } else {
            throw ConfigError("config: scheme must be 'collinear' or 'mzi', got '" + scheme + "'");
        }

        const auto& pump = need(doc, "pump", "config");
        c.pump.center_wavelength_nm = need(pump, "center_wavelength_nm", "pump").get<double>();
        c.pump.duration_fs = need(pump, "duration_fs", "pump").get<double>();
        c.pump.polarization_angle_deg = get_or(pump, "polarization_angle_deg", 45.0);
        const auto& conv = need(pump, "duration_convention", "pump");
        c.duration_convention = need(conv, "name", "pump.duration_convention").get<std::string>();
        c.pump.sigma_t_per_duration = need(conv, "sigma_t_per_duration", "pump.duration_convention").get<double>();

        c.signal_nm = need(doc, "signal_nm", "config").get<double>();
        c.idler_nm = need(doc, "idler_nm", "config").get<double>();

        const auto& crystals = need(doc, "crystals", "config");
        if (!crystals.is_array() || crystals.size() != 2) throw ConfigError("crystals: exactly two entries required");
        for (std::size_t k = 0; k < 2; ++k) {
            const auto where = "crystals[" + std::to_string(k) + "]";
            auto& cr = c.crystals[k];
            cr.label = get_or<std::string>(crystals[k], "label", where);
            cr.element = parse_element(crystals[k], mats, where);
            const auto& cut = need(crystals[k], "cut_angle_deg", where);
            cr.auto_cut_angle = cut.is_string() && cut.get<std::string>() == "auto";
            if (!cr.auto_cut_angle && !cut.is_number()) throw ConfigError(where + ": cut_angle_deg must be a number or \"auto\"");
        }

        const auto& comp = need(doc, "compensator", "config");
        c.compensator.auto_size = get_or(comp, "auto_size", false);
        c.compensator.sized_element = get_or<std::size_t>(comp, "sized_element", 0);
        const auto stage = get_or<std::string>(comp, "stage", "pre");
        if (stage == "pre") {
            c.compensator.stage = CompensationStage::pre;
        } else if (stage == "post") {
            c.compensator.stage = CompensationStage::post;
        } else {
            throw ConfigError("compensator: stage must be 'pre' or 'post'");
        }
        c.compensator.error_fs = get_or(comp, "error_fs", 0.0);
        const auto& els = need(comp, "elements", "compensator");
        if (!els.is_array()) throw ConfigError("compensator: elements must be a list");
        for (std::size_t k = 0; k < els.size(); ++k) {
            const auto where = "compensator.elements[" + std::to_string(k) + "]";
            c.compensator.elements.push_back(parse_element(els[k], mats, where));
            c.compensator.labels.push_back(get_or<std::string>(els[k], "label", where));
        }

        const auto& filters = need(doc, "filters", "config");
        if (!filters.is_array() || filters.size() != 2) throw ConfigError("filters: exactly two entries required");
        c.filters[0] = parse_filter(filters[0], "filters[0]");
        c.filters[1] = parse_filter(filters[1], "filters[1]");

        const auto& plates = need(doc, "arm_plates", "config");
        c.signal_plate = parse_element(need(plates, "signal", "arm_plates"), mats, "arm_plates.signal");
        c.idler_plate = parse_element(need(plates, "idler", "arm_plates"), mats, "arm_plates.idler");

        c.cross_dispersion_enabled = get_or(doc, "cross_dispersion_enabled", false);
        c.pump_amplitude_ratio = get_or(doc, "pump_amplitude_ratio", 1.0);
        const auto pm = get_or<std::string>(doc, "phase_matching_shape", "sinc");
        if (pm == "sinc") {
            c.phase_matching_shape = spectral::PhaseMatchingShape::sinc;
        } else if (pm == "gaussian") {
            c.phase_matching_shape = spectral::PhaseMatchingShape::gaussian;
        } else {
            throw ConfigError("config: phase_matching_shape must be 'sinc' or 'gaussian'");
        }
        c.mzi_arm_imbalance_fs = get_or(doc, "mzi_arm_imbalance_fs", 0.0);

        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            c.grid.points = get_or<std::size_t>(g, "points", 256);
            c.grid.span_sigmas = get_or(g, "span_sigmas", 5.0);
            c.grid.refine_for_delays = get_or(g, "refine_for_delays", true);
        }
        if (doc.contains("knobs")) {
            const auto& k = doc.at("knobs");
            c.knobs.pump_delta_x_nm = get_or(k, "pump_delta_x_nm", 0.0);
            c.knobs.signal_tilt_deg = get_or(k, "signal_tilt_deg", 0.0);
            c.knobs.idler_tilt_deg = get_or(k, "idler_tilt_deg", 0.0);
        }
        if (doc.contains("analyzers")) {
            const auto& a = doc.at("analyzers");
            c.analyzers.theta1_deg = get_or(a, "theta1_deg", 45.0);
            c.analyzers.theta2_deg = get_or(a, "theta2_deg", 45.0);
        }
        if (doc.contains("scan")) {
            const auto& s = doc.at("scan");
            c.scan.axis = parse_axis_kind(get_or<std::string>(s, "axis", "pump_delay"));
            c.scan.start = get_or(s, "start", 0.0);
            c.scan.stop = get_or(s, "stop", 1600.0);
            c.scan.steps = get_or(s, "steps", 128);
        }
        if (doc.contains("noise")) {
            const auto& n = doc.at("noise");
            c.noise.enabled = get_or(n, "enabled", false);
            c.noise.mean_counts = get_or(n, "mean_counts", 1000.0);
            c.noise.seed = get_or<std::uint64_t>(n, "seed", 1);
        }
        if (doc.contains("hwp")) {
            const auto& h = doc.at("hwp");
            c.hwp.port = get_or(h, "port", 1);
            c.hwp.axis_deg = get_or(h, "axis_deg", 45.0);
        }
        if (doc.contains("reconstructed")) c.reconstructed = doc.at("reconstructed").get<std::vector<std::string>>();
        validate(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline SourceConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_json_file(path), path.parent_path());
}

}  // namespace bellsim::scenario

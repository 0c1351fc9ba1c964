#pragma once

// Loader for the material data file (JSON). Schema:
//
//   {
//     "schema_version": 1,
//     "wavelength_unit": "um",
//     "records": [
//       { "name": "BBO", "pol": "o", "form": "pole_quadratic",
//         "coefficients": [A, B, C, D], "valid_range_nm": [220, 1060],
//         "source_note": "..." },
//       ...
//     ]
//   }
//
// Every material needs exactly one "o" and one "e" record with the same
// valid range. "form" defaults to "sellmeier".

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "bellsim/dispersion.hpp"
#include "bellsim/errors.hpp"

namespace bellsim::dispersion {

using MaterialTable = std::map<std::string, Material, std::less<>>;

inline SellmeierForm parse_form(const std::string& s) {
    if (s == "sellmeier") return SellmeierForm::sellmeier;
    if (s == "pole_quadratic") return SellmeierForm::pole_quadratic;
    throw ConfigError("material data: unknown form '" + s + "'");
}

inline MaterialTable parse_materials(const nlohmann::json& doc) {
    if (doc.value("schema_version", 0) != 1) {
        throw ConfigError("material data: unsupported schema_version");
    }
    if (doc.value("wavelength_unit", std::string{}) != "um") {
        throw ConfigError("material data: wavelength_unit must be \"um\"");
    }
    struct Partial {
        Material m;
        bool has_o = false;
        bool has_e = false;
    };
    std::map<std::string, Partial, std::less<>> partial;
    try {
        for (const auto& rec : doc.at("records")) {
            const auto name = rec.at("name").get<std::string>();
            const auto pol = rec.at("pol").get<std::string>();
            const auto range = rec.at("valid_range_nm").get<std::vector<double>>();
            if (range.size() != 2) throw ConfigError("material data: " + name + " valid_range_nm needs two values");
            SellmeierFit fit;
            fit.form = parse_form(rec.value("form", std::string{"sellmeier"}));
            fit.coefficients = rec.at("coefficients").get<std::vector<double>>();
            fit.source_note = rec.value("source_note", std::string{});
            auto& p = partial[name];
            if (p.has_o || p.has_e) {
                if (p.m.valid_min_nm != range[0] || p.m.valid_max_nm != range[1]) {
                    throw ConfigError("material data: " + name + " o/e records disagree on valid_range_nm");
                }
            }
            p.m.name = name;
            p.m.valid_min_nm = range[0];
            p.m.valid_max_nm = range[1];
            if (pol == "o") {
                if (p.has_o) throw ConfigError("material data: duplicate o record for " + name);
                p.m.sellmeier_o = fit;
                p.has_o = true;
            } else if (pol == "e") {
                if (p.has_e) throw ConfigError("material data: duplicate e record for " + name);
                p.m.sellmeier_e = fit;
                p.has_e = true;
            } else {
                throw ConfigError("material data: " + name + " has pol '" + pol + "', expected o or e");
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("material data: ") + ex.what());
    }
    MaterialTable table;
    for (auto& [name, p] : partial) {
        if (!p.has_o || !p.has_e) throw ConfigError("material data: " + name + " needs both o and e records");
        validate(p.m);
        table.emplace(name, std::move(p.m));
    }
    return table;
}

inline MaterialTable load_materials(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open material data file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
    return parse_materials(doc);
}

inline const Material& lookup(const MaterialTable& table, std::string_view name) {
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown material '" + std::string(name) + "'");
    return it->second;
}

}  // namespace bellsim::dispersion

#pragma once

#include <string>

#include "bellsim/material_data.hpp"
#include "bellsim/scenario_io.hpp"

namespace bellsim::testing_support {

inline const dispersion::MaterialTable& materials() {
    static const auto table = dispersion::load_materials(std::string(BELLSIM_DATA_DIR) + "/materials.json");
    return table;
}

inline const dispersion::Material& bbo() { return dispersion::lookup(materials(), "BBO"); }
inline const dispersion::Material& quartz() { return dispersion::lookup(materials(), "quartz"); }

inline std::string default_config_path() { return std::string(BELLSIM_CONFIG_DIR) + "/default.json"; }

inline scenario::SourceConfig default_config() {
    static const auto cfg = scenario::load_config(default_config_path());
    return cfg;
}

}  // namespace bellsim::testing_support

#pragma once

#include <numbers>

namespace bellsim {

// Internal unit system: time in fs, angular frequency in rad/fs, wavelength
// in nm, crystal/plate thickness in mm.
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Speed of light in vacuum, nm/fs.
inline constexpr double kSpeedOfLightNmPerFs = 299.792458;
/// Speed of light in vacuum, mm/fs.
inline constexpr double kSpeedOfLightMmPerFs = 299.792458e-6;

inline constexpr double kNmPerMm = 1.0e6;

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Vacuum wavelength (nm) to angular frequency (rad/fs).
constexpr double wavelength_to_omega(double lambda_nm) {
    return kTwoPi * kSpeedOfLightNmPerFs / lambda_nm;
}

constexpr double omega_to_wavelength(double omega) {
    return kTwoPi * kSpeedOfLightNmPerFs / omega;
}

/// Vacuum wavenumber 2*pi/lambda in rad/nm.
constexpr double wavenumber(double lambda_nm) { return kTwoPi / lambda_nm; }

/// Convert a spectral FWHM given in wavelength units to angular frequency
/// units at the given center (first-order Jacobian).
constexpr double fwhm_nm_to_omega(double fwhm_nm, double center_nm) {
    return kTwoPi * kSpeedOfLightNmPerFs * fwhm_nm / (center_nm * center_nm);
}

}  // namespace bellsim

#pragma once

// Frequency-domain ingredients of the biphoton amplitude: Gaussian pump
// envelope, spectral filters, first-order phase matching, and the joint
// spectral amplitude built from them.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "bellsim/errors.hpp"
#include "bellsim/jsa.hpp"
#include "bellsim/units.hpp"

namespace bellsim::spectral {

/// 1/(2 sqrt(2 ln 2)): intensity standard deviation per intensity FWHM.
inline constexpr double kIntensityFwhmToSigma = 0.42466090014400953;

struct PumpPulse {
    double center_wavelength_nm = 400.0;
    /// Pulse duration as quoted by the source. Interpreted through
    /// `sigma_t_per_duration` (intensity std of the envelope per unit duration).
    double duration_fs = 80.0;
    double polarization_angle_deg = 45.0;
    double sigma_t_per_duration = kIntensityFwhmToSigma;

    double center_omega() const { return wavelength_to_omega(center_wavelength_nm); }
    /// Intensity standard deviation of the temporal envelope, fs.
    double sigma_t() const { return duration_fs * sigma_t_per_duration; }
    /// Intensity standard deviation of the spectrum, rad/fs (transform limited).
    double sigma_omega() const { return 1.0 / (2.0 * sigma_t()); }
};

inline void validate(const PumpPulse& p) {
    if (!(p.duration_fs > 0.0)) throw ConfigError("pump: duration_fs must be positive");
    if (!(p.center_wavelength_nm > 0.0)) throw ConfigError("pump: center_wavelength_nm must be positive");
    if (!(p.sigma_t_per_duration > 0.0) || !(p.sigma_omega() > 0.0)) {
        throw ConfigError("pump: duration convention gives a non-positive bandwidth");
    }
}

enum class FilterShape { none, gaussian, rectangular };

struct SpectralFilter {
    double center_nm = 0.0;
    double fwhm_nm = 0.0;
    FilterShape shape = FilterShape::none;

    double center_omega() const { return wavelength_to_omega(center_nm); }
    double fwhm_omega() const { return fwhm_nm_to_omega(fwhm_nm, center_nm); }
};

inline void validate(const SpectralFilter& f) {
    if (f.shape == FilterShape::none) return;
    if (!(f.fwhm_nm > 0.0)) throw ConfigError("filter: fwhm_nm must be positive");
    if (!(f.center_nm > 0.0)) throw ConfigError("filter: center_nm must be positive");
}

enum class PhaseMatchingShape {
    sinc,
    /// exp(-γ x²) in place of sinc(x): closed-form overlaps for tests.
    gaussian,
};

/// Coefficient of the Gaussian stand-in for sinc, sinc(x) ≈ exp(-0.193 x²).
inline constexpr double kSincGaussianCoefficient = 0.193;

struct PhaseMatchingSpec {
    double crystal_length_mm = 0.0;
    double pump_center_nm = 0.0;
    double signal_center_nm = 0.0;
    double idler_center_nm = 0.0;
    double inverse_group_velocity_pump_fs_per_mm = 0.0;
    double inverse_group_velocity_signal_fs_per_mm = 0.0;
    double inverse_group_velocity_idler_fs_per_mm = 0.0;
    PhaseMatchingShape shape = PhaseMatchingShape::sinc;

    double signal_slope() const {
        return inverse_group_velocity_pump_fs_per_mm - inverse_group_velocity_signal_fs_per_mm;
    }
    double idler_slope() const {
        return inverse_group_velocity_pump_fs_per_mm - inverse_group_velocity_idler_fs_per_mm;
    }
};

/// Relative violation of 1/λs + 1/λi = 1/λp.
inline double energy_mismatch(double pump_nm, double signal_nm, double idler_nm) {
    return std::abs(1.0 / signal_nm + 1.0 / idler_nm - 1.0 / pump_nm) * pump_nm;
}

inline void validate(const PhaseMatchingSpec& s) {
    if (!(s.crystal_length_mm > 0.0)) throw ConfigError("phase matching: crystal_length_mm must be positive");
    if (!(s.pump_center_nm > 0.0 && s.signal_center_nm > 0.0 && s.idler_center_nm > 0.0)) {
        throw ConfigError("phase matching: center wavelengths must be positive");
    }
    if (energy_mismatch(s.pump_center_nm, s.signal_center_nm, s.idler_center_nm) > 1e-3) {
        throw ConfigError("phase matching: signal and idler centers violate energy conservation");
    }
}

/// Pump spectral amplitude at ω_s + ω_i; peak 1 at the pump carrier.
inline double pump_spectrum(const PumpPulse& p, double omega_sum) {
    const double d = omega_sum - p.center_omega();
    const double s = p.sigma_omega();
    return std::exp(-d * d / (4.0 * s * s));
}

/// Phase-matching argument x = D L / 2 for detunings (ν_s, ν_i).
inline double phase_matching_argument(const PhaseMatchingSpec& s, double nu_s, double nu_i) {
    return 0.5 * s.crystal_length_mm * (s.signal_slope() * nu_s + s.idler_slope() * nu_i);
}

/// (1/L) ∫₀ᴸ exp(iDz) dz = sinc(DL/2) exp(iDL/2).
inline cplx phase_matching(const PhaseMatchingSpec& s, double nu_s, double nu_i) {
    const double x = phase_matching_argument(s, nu_s, nu_i);
    double mag;
    if (s.shape == PhaseMatchingShape::gaussian) {
        mag = std::exp(-kSincGaussianCoefficient * x * x);
    } else {
        mag = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    }
    return std::polar(mag, x);
}

/// Amplitude (field) transmission, √T.
inline double filter_amplitude(const SpectralFilter& f, double omega) {
    switch (f.shape) {
        case FilterShape::none:
            return 1.0;
        case FilterShape::gaussian: {
            const double d = (omega - f.center_omega()) / f.fwhm_omega();
            return std::exp(-2.0 * std::log(2.0) * d * d);
        }
        case FilterShape::rectangular:
            return std::abs(omega - f.center_omega()) <= 0.5 * f.fwhm_omega() ? 1.0 : 0.0;
    }
    return 1.0;
}

/// Quadratic-form model of |JSA| as exp(-νᵀMν) with the sinc replaced by
/// its Gaussian stand-in and rectangular filters by Gaussians of equal FWHM.
/// Used to size the grid.
struct EnvelopeForm {
    double mss = 0.0;
    double msi = 0.0;
    double mii = 0.0;

    double det() const { return mss * mii - msi * msi; }
    /// Amplitude standard deviations of the signal and idler marginals.
    double sigma_signal() const { return std::sqrt(mii / (2.0 * det())); }
    double sigma_idler() const { return std::sqrt(mss / (2.0 * det())); }
};

inline EnvelopeForm envelope_form(const PumpPulse& p, const PhaseMatchingSpec& s, const SpectralFilter& fs,
                                  const SpectralFilter& fi) {
    EnvelopeForm m;
    const double sp = p.sigma_omega();
    const double pump = 1.0 / (4.0 * sp * sp);
    m.mss += pump;
    m.mii += pump;
    m.msi += pump;
    const double half_l = 0.5 * s.crystal_length_mm;
    const double a = half_l * s.signal_slope();
    const double b = half_l * s.idler_slope();
    m.mss += kSincGaussianCoefficient * a * a;
    m.mii += kSincGaussianCoefficient * b * b;
    m.msi += kSincGaussianCoefficient * a * b;
    auto filt = [](const SpectralFilter& f) {
        if (f.shape == FilterShape::none) return 0.0;
        const double w = f.fwhm_omega();
        return 2.0 * std::log(2.0) / (w * w);
    };
    m.mss += filt(fs);
    m.mii += filt(fi);
    return m;
}

struct GridSettings {
    std::size_t points = 256;
    /// Half-span in units of the amplitude standard deviation of each marginal.
    double span_sigmas = 5.0;
    /// Let the scenario double `points` when applied delays outgrow the time window.
    bool refine_for_delays = true;
};

/// Grid centered on the signal/idler carriers wide enough for `span_sigmas`
/// marginal standard deviations of the envelope.
inline FrequencyGrid auto_grid(const PumpPulse& p, const PhaseMatchingSpec& s, const SpectralFilter& fs,
                               const SpectralFilter& fi, const GridSettings& settings) {
    const auto m = envelope_form(p, s, fs, fi);
    if (!(m.det() > 0.0)) {
        throw ConfigError("frequency grid: amplitude is unbounded (degenerate group velocities and no filters)");
    }
    return make_grid(wavelength_to_omega(s.signal_center_nm), wavelength_to_omega(s.idler_center_nm),
                     settings.span_sigmas * m.sigma_signal(), settings.span_sigmas * m.sigma_idler(),
                     settings.points);
}

/// Edge threshold (relative to the maximum) for the compact envelope.
inline constexpr double kTruncationThreshold = 1e-4;

struct BuildOptions {
    bool check_truncation = true;
    std::string label;
};

/// JSA[j,k] = α(ω_s+ω_i) Φ(ν_s,ν_i) f_s(ω_s) f_i(ω_i), L²-normalized.
///
/// Truncation is judged on the compact envelope (sinc replaced by its
/// Gaussian stand-in): its largest value on the grid boundary must stay
/// below 1e-4 of its maximum.
inline JointSpectralAmplitude build_jsa(const PumpPulse& pulse, const PhaseMatchingSpec& spec,
                                        const SpectralFilter& fs, const SpectralFilter& fi,
                                        std::shared_ptr<const FrequencyGrid> grid, const BuildOptions& opts = {}) {
    validate(pulse);
    validate(spec);
    validate(fs);
    validate(fi);
    validate(*grid);
    const auto& g = *grid;
    const double ws0 = wavelength_to_omega(spec.signal_center_nm);
    const double wi0 = wavelength_to_omega(spec.idler_center_nm);

    std::vector<double> fsv(g.ns());
    std::vector<double> fiv(g.ni());
    for (std::size_t j = 0; j < g.ns(); ++j) fsv[j] = filter_amplitude(fs, g.signal_axis[j]);
    for (std::size_t k = 0; k < g.ni(); ++k) fiv[k] = filter_amplitude(fi, g.idler_axis[k]);

    std::vector<cplx> values(g.ns() * g.ni());
    double env_max = 0.0;
    double env_edge = 0.0;
    for (std::size_t j = 0; j < g.ns(); ++j) {
        const double ws = g.signal_axis[j];
        for (std::size_t k = 0; k < g.ni(); ++k) {
            const double wi = g.idler_axis[k];
            const double alpha = pump_spectrum(pulse, ws + wi);
            const double nu_s = ws - ws0;
            const double nu_i = wi - wi0;
            values[j * g.ni() + k] = alpha * fsv[j] * fiv[k] * phase_matching(spec, nu_s, nu_i);
            if (opts.check_truncation) {
                const double x = phase_matching_argument(spec, nu_s, nu_i);
                auto gauss_filter = [](const SpectralFilter& f, double w, double amp) {
                    if (f.shape != FilterShape::rectangular) return amp;
                    const double d = (w - f.center_omega()) / f.fwhm_omega();
                    return std::exp(-2.0 * std::log(2.0) * d * d);
                };
                const double env = alpha * gauss_filter(fs, ws, fsv[j]) * gauss_filter(fi, wi, fiv[k]) *
                                   std::exp(-kSincGaussianCoefficient * x * x);
                env_max = std::max(env_max, env);
                if (j == 0 || k == 0 || j + 1 == g.ns() || k + 1 == g.ni()) env_edge = std::max(env_edge, env);
            }
        }
    }
    if (opts.check_truncation && env_edge > kTruncationThreshold * env_max) {
        throw TruncationError("frequency grid too narrow: edge envelope is " + std::to_string(env_edge / env_max) +
                              " of its maximum (limit 1e-4)");
    }

    JsaProvenance meta;
    meta.crystal_label = opts.label;
    meta.model_note = spec.shape == PhaseMatchingShape::sinc
                          ? "first-order sinc phase matching x Gaussian pump (reconstructed biphoton model)"
                          : "Gaussian phase-matching stand-in x Gaussian pump";
    JointSpectralAmplitude jsa(std::move(grid), std::move(values), meta);
    const double n2 = norm_squared(jsa);
    if (!(n2 > 0.0)) throw TruncationError("amplitude vanishes on the grid");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : jsa.mutable_values()) v *= inv;
    return jsa;
}

}  // namespace bellsim::spectral

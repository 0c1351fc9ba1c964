#pragma once

// Full source models: the two-arm interferometer and the collinear
// two-crystal source, their timing bookkeeping, phase knobs and scans.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bellsim/biphoton.hpp"
#include "bellsim/dispersion.hpp"
#include "bellsim/errors.hpp"
#include "bellsim/polarization.hpp"
#include "bellsim/spectral.hpp"
#include "bellsim/units.hpp"

namespace bellsim::scenario {

using dispersion::AxisOrientation;
using dispersion::BirefringentElement;
using dispersion::Pol;

enum class Scheme { mzi, collinear };
enum class CompensationStage { pre, post };
enum class AxisKind { pump_delay, signal_tilt, idler_tilt, both_tilts, analyzer2_angle };

inline std::string to_string(AxisKind k) {
    switch (k) {
        case AxisKind::pump_delay: return "pump_delay";
        case AxisKind::signal_tilt: return "signal_tilt";
        case AxisKind::idler_tilt: return "idler_tilt";
        case AxisKind::both_tilts: return "both_tilts";
        case AxisKind::analyzer2_angle: return "analyzer2_angle";
    }
    return "?";
}

inline AxisKind parse_axis_kind(const std::string& s) {
    for (auto k : {AxisKind::pump_delay, AxisKind::signal_tilt, AxisKind::idler_tilt, AxisKind::both_tilts,
                   AxisKind::analyzer2_angle}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown scan axis '" + s + "'");
}

struct CrystalSetup {
    std::string label;
    BirefringentElement element;
    /// Solve the type-I phase-matching angle instead of using element.cut_angle_deg.
    bool auto_cut_angle = true;
};

struct CompensatorSetup {
    std::vector<BirefringentElement> elements;
    std::vector<std::string> labels;
    /// Solve the thickness of elements[sized_element] for zero mean residual.
    bool auto_size = true;
    std::size_t sized_element = 0;
    CompensationStage stage = CompensationStage::pre;
    /// Deliberate timing error added on top of the compensator, fs.
    double error_fs = 0.0;
};

struct NoiseSettings {
    bool enabled = false;
    double mean_counts = 1000.0;
    std::uint64_t seed = 1;
};

struct ScanSettings {
    AxisKind axis = AxisKind::pump_delay;
    double start = 0.0;
    double stop = 1600.0;
    int steps = 128;
};

struct HwpSettings {
    int port = 1;
    double axis_deg = 45.0;
};

struct PhaseKnobs {
    double pump_delta_x_nm = 0.0;
    double signal_tilt_deg = 0.0;
    double idler_tilt_deg = 0.0;
};

struct SourceConfig {
    Scheme scheme = Scheme::collinear;
    spectral::PumpPulse pump;
    std::string duration_convention = "intensity_fwhm";
    double signal_nm = 730.0;
    double idler_nm = 885.0;
    /// First crystal then second (pump order for the collinear source).
    std::array<CrystalSetup, 2> crystals;
    CompensatorSetup compensator;
    std::array<spectral::SpectralFilter, 2> filters;
    BirefringentElement signal_plate;
    BirefringentElement idler_plate;
    bool cross_dispersion_enabled = false;
    double pump_amplitude_ratio = 1.0;
    spectral::PhaseMatchingShape phase_matching_shape = spectral::PhaseMatchingShape::sinc;
    spectral::GridSettings grid;
    /// Extra path delay of the second arm (interferometer scheme), fs.
    double mzi_arm_imbalance_fs = 0.0;
    PhaseKnobs knobs;
    polarization::AnalyzerSetting analyzers;
    ScanSettings scan;
    NoiseSettings noise;
    HwpSettings hwp;
    /// Names of values chosen without a published figure.
    std::vector<std::string> reconstructed;
};

inline void validate(const SourceConfig& c) {
    spectral::validate(c.pump);
    for (const auto& f : c.filters) spectral::validate(f);
    if (c.crystals[0].element.axis == c.crystals[1].element.axis) {
        throw ConfigError("crystals: the two crystal axes must be orthogonal");
    }
    for (const auto& cr : c.crystals) {
        dispersion::validate(cr.element);
        if (!(cr.element.thickness_mm > 0.0)) throw ConfigError("crystal " + cr.label + ": thickness must be positive");
    }
    for (const auto& el : c.compensator.elements) dispersion::validate(el);
    if (c.compensator.auto_size && c.compensator.sized_element >= c.compensator.elements.size()) {
        throw ConfigError("compensator: auto_size needs an element to size");
    }
    if (c.compensator.stage == CompensationStage::post && c.scheme == Scheme::collinear) {
        throw ConfigError("compensator: post-compensation is only supported for the mzi scheme");
    }
    if (!std::isfinite(c.pump_amplitude_ratio) || c.pump_amplitude_ratio < 0.0) {
        throw ConfigError("pump_amplitude_ratio must be finite and >= 0");
    }
    if (spectral::energy_mismatch(c.pump.center_wavelength_nm, c.signal_nm, c.idler_nm) > 1e-3) {
        throw ConfigError("signal/idler wavelengths violate energy conservation with the pump");
    }
    if (c.grid.points < 8) throw ConfigError("grid: need at least 8 points per axis");
    if (!(c.grid.span_sigmas > 0.0)) throw ConfigError("grid: span_sigmas must be positive");
    if (c.noise.enabled && !(c.noise.mean_counts > 0.0)) throw ConfigError("noise: mean_counts must be positive");
}

/// Pair polarization produced by a type-I crystal: orthogonal to its axis.
inline AxisOrientation pair_polarization(const CrystalSetup& c) { return dispersion::orthogonal(c.element.axis); }

inline double cut_angle(const SourceConfig& c, const CrystalSetup& cr) {
    if (!cr.auto_cut_angle) return cr.element.cut_angle_deg;
    return dispersion::type1_phase_matching_angle(cr.element.material, c.pump.center_wavelength_nm, c.signal_nm,
                                                  c.idler_nm);
}

/// Copy with phase-matching angles filled in.
inline SourceConfig with_cut_angles(SourceConfig c) {
    for (auto& cr : c.crystals) {
        cr.element.cut_angle_deg = cut_angle(c, cr);
        cr.auto_cut_angle = false;
    }
    return c;
}

inline spectral::PhaseMatchingSpec phase_matching_spec(const SourceConfig& c, const CrystalSetup& cr) {
    spectral::PhaseMatchingSpec s;
    const auto& m = cr.element.material;
    const double theta = cut_angle(c, cr);
    s.crystal_length_mm = cr.element.thickness_mm;
    s.pump_center_nm = c.pump.center_wavelength_nm;
    s.signal_center_nm = c.signal_nm;
    s.idler_center_nm = c.idler_nm;
    s.inverse_group_velocity_pump_fs_per_mm =
        dispersion::inverse_group_velocity(m, Pol::e, c.pump.center_wavelength_nm, theta);
    s.inverse_group_velocity_signal_fs_per_mm = dispersion::inverse_group_velocity(m, Pol::o, c.signal_nm);
    s.inverse_group_velocity_idler_fs_per_mm = dispersion::inverse_group_velocity(m, Pol::o, c.idler_nm);
    s.shape = c.phase_matching_shape;
    return s;
}

/// Arrival-time bookkeeping of amp_b relative to amp_a, fs (positive: later).
struct TimingReport {
    /// Uncompensated per-photon offsets.
    double signal_offset_fs = 0.0;
    double idler_offset_fs = 0.0;
    /// What the compensator must cancel (mean of the two photons).
    double required_fs = 0.0;
    double compensator_signal_fs = 0.0;
    double compensator_idler_fs = 0.0;
    double residual_signal_fs = 0.0;
    double residual_idler_fs = 0.0;
    /// Symmetric crystal-only figure from dispersion::compensation_delay.
    double crystal_compensation_fs = 0.0;
    double sized_thickness_mm = 0.0;
};

namespace detail {

inline double compensator_advance(const SourceConfig& c, double lambda_nm, AxisOrientation advanced) {
    return dispersion::group_advance_fs(c.compensator.elements, advanced, lambda_nm);
}

/// Advance per photon (signal, idler) produced by the compensator.
inline std::pair<double, double> compensator_effect(const SourceConfig& c) {
    const auto& second = c.crystals[1];
    if (c.compensator.stage == CompensationStage::pre) {
        const double a = compensator_advance(c, c.pump.center_wavelength_nm, second.element.axis);
        return {a, a};
    }
    const auto pol_b = pair_polarization(second);
    return {compensator_advance(c, c.signal_nm, pol_b), compensator_advance(c, c.idler_nm, pol_b)};
}

}  // namespace detail

/// Timing of the two amplitudes, with the sized compensator element solved
/// when auto_size is set. Returns the resolved config alongside.
inline std::pair<SourceConfig, TimingReport> resolve_timing(SourceConfig c) {
    validate(c);
    c = with_cut_angles(std::move(c));
    TimingReport t;
    const auto& c1 = c.crystals[0].element;
    const auto& c2 = c.crystals[1].element;
    if (c.scheme == Scheme::collinear) {
        const double lp = c.pump.center_wavelength_nm;
        const double kp_o = dispersion::inverse_group_velocity(c1.material, Pol::o, lp);
        auto offset = [&](double lambda) {
            const double k1_o = dispersion::inverse_group_velocity(c1.material, Pol::o, lambda);
            const double k2_o = dispersion::inverse_group_velocity(c2.material, Pol::o, lambda);
            const double k2_e = dispersion::inverse_group_velocity(c2.material, Pol::e, lambda, c2.cut_angle_deg);
            return c1.thickness_mm * (kp_o - k1_o) + c2.thickness_mm * (k2_o - k2_e);
        };
        t.signal_offset_fs = offset(c.signal_nm);
        t.idler_offset_fs = offset(c.idler_nm);
    } else {
        t.signal_offset_fs = c.mzi_arm_imbalance_fs;
        t.idler_offset_fs = c.mzi_arm_imbalance_fs;
    }
    t.required_fs = 0.5 * (t.signal_offset_fs + t.idler_offset_fs);
    const std::array<BirefringentElement, 2> pair{c1, c2};
    t.crystal_compensation_fs =
        dispersion::compensation_delay(pair, c.pump.center_wavelength_nm, c.signal_nm, c.idler_nm);

    if (c.compensator.auto_size) {
        auto& el = c.compensator.elements[c.compensator.sized_element];
        el.thickness_mm = 0.0;
        const auto [s0, i0] = detail::compensator_effect(c);
        el.thickness_mm = 1.0;
        const auto [s1, i1] = detail::compensator_effect(c);
        const double base = 0.5 * (s0 + i0);
        const double per_mm = 0.5 * (s1 + i1) - base;
        const double need = t.required_fs - base;
        if (std::abs(need) < 1e-12) {
            el.thickness_mm = 0.0;
        } else if (per_mm == 0.0 || need / per_mm < 0.0) {
            throw ConfigError("compensator: element orientation cannot cancel a " + std::to_string(need) +
                              " fs offset (advance per mm " + std::to_string(per_mm) + " fs)");
        } else {
            el.thickness_mm = need / per_mm;
        }
        t.sized_thickness_mm = el.thickness_mm;
    }
    const auto [cs, ci] = detail::compensator_effect(c);
    t.compensator_signal_fs = cs;
    t.compensator_idler_fs = ci;
    t.residual_signal_fs = t.signal_offset_fs - cs + c.compensator.error_fs;
    t.residual_idler_fs = t.idler_offset_fs - ci + c.compensator.error_fs;
    return {std::move(c), t};
}

/// Shared pieces every scan point starts from.
struct BaseAmplitudes {
    SourceConfig config;  // resolved: cut angles set, compensator sized
    TimingReport timing;
    biphoton::AmplitudePair pair;  // timing applied, knobs not yet
    AxisOrientation pol_a = AxisOrientation::vertical;
    AxisOrientation pol_b = AxisOrientation::horizontal;
    std::size_t grid_points = 0;
};

namespace detail {

/// Temporal extent of either amplitude, fs: crystal walk-off plus pump and
/// filter coherence times.
inline double temporal_support_fs(const SourceConfig& c, const spectral::PhaseMatchingSpec& s) {
    double support = s.crystal_length_mm *
                         std::max(std::abs(s.signal_slope()), std::abs(s.idler_slope())) +
                     12.0 * c.pump.sigma_t();
    for (const auto& f : c.filters) {
        if (f.shape != spectral::FilterShape::none) support += 12.0 / f.fwhm_omega();
    }
    return support;
}

}  // namespace detail

/// Builds both crystal amplitudes on one grid and applies the timing offsets.
/// The grid is refined (points doubled) until its time window holds the
/// largest residual delay plus the amplitude's temporal support twice over.
inline BaseAmplitudes build_base(const SourceConfig& config) {
    auto [c, timing] = resolve_timing(config);
    BaseAmplitudes out;
    out.pol_a = pair_polarization(c.crystals[0]);
    out.pol_b = pair_polarization(c.crystals[1]);
    const auto spec_a = phase_matching_spec(c, c.crystals[0]);
    const auto spec_b = phase_matching_spec(c, c.crystals[1]);

    auto ga = spectral::auto_grid(c.pump, spec_a, c.filters[0], c.filters[1], c.grid);
    auto gb = spectral::auto_grid(c.pump, spec_b, c.filters[0], c.filters[1], c.grid);
    const double hs = 0.5 * std::max(ga.signal_axis.back() - ga.signal_axis.front(),
                                     gb.signal_axis.back() - gb.signal_axis.front());
    const double hi = 0.5 * std::max(ga.idler_axis.back() - ga.idler_axis.front(),
                                     gb.idler_axis.back() - gb.idler_axis.front());
    const double max_delay = std::max({std::abs(timing.residual_signal_fs), std::abs(timing.residual_idler_fs)});
    const double support = std::max(detail::temporal_support_fs(c, spec_a), detail::temporal_support_fs(c, spec_b));
    std::size_t points = c.grid.points;
    auto window = [&](std::size_t n) { return kTwoPi * static_cast<double>(n - 1) / (2.0 * std::max(hs, hi)); };
    while (c.grid.refine_for_delays && window(points) < 2.0 * (max_delay + support)) {
        points = 2 * points;
        if (points > 8192) throw TruncationError("frequency grid: delay too large for any supported resolution");
    }
    auto grid = std::make_shared<const FrequencyGrid>(
        make_grid(wavelength_to_omega(c.signal_nm), wavelength_to_omega(c.idler_nm), hs, hi, points));

    spectral::BuildOptions oa;
    oa.label = c.crystals[0].label;
    spectral::BuildOptions ob;
    ob.label = c.crystals[1].label;
    auto amp_a = spectral::build_jsa(c.pump, spec_a, c.filters[0], c.filters[1], grid, oa);
    auto amp_b = spectral::build_jsa(c.pump, spec_b, c.filters[0], c.filters[1], grid, ob);

    // Envelope-only shifts; the constant carrier phase of the birefringent
    // path is absorbed in the fringe offset.
    const double mean = 0.5 * (timing.residual_signal_fs + timing.residual_idler_fs);
    const bool differential = c.scheme == Scheme::mzi || c.cross_dispersion_enabled;
    if (differential) {
        amp_b = biphoton::apply_spectral_phase(std::move(amp_b), 0.0, mean, 0.0, mean);
        const double half = 0.5 * (timing.residual_signal_fs - timing.residual_idler_fs);
        if (half != 0.0) amp_a = biphoton::apply_spectral_phase(std::move(amp_a), 0.0, -half, 0.0, half);
    } else {
        amp_b = biphoton::apply_spectral_phase(std::move(amp_b), 0.0, mean, 0.0, mean);
    }
    if (c.pump_amplitude_ratio != 1.0) amp_b = scaled(std::move(amp_b), c.pump_amplitude_ratio);

    out.config = std::move(c);
    out.timing = timing;
    out.pair = biphoton::AmplitudePair{std::move(amp_a), std::move(amp_b), 0.0};
    out.grid_points = points;
    return out;
}

/// Effective optical path delay (nm) added by tilting an arm plate, relative
/// to normal incidence: c·(Δτ_phase,e − Δτ_phase,o).
inline double plate_path_delay_nm(BirefringentElement plate, double tilt_deg, double lambda_nm) {
    plate.tilt_deg = 0.0;
    const auto d0 = dispersion::birefringent_delay(plate, lambda_nm);
    plate.tilt_deg = tilt_deg;
    const auto d1 = dispersion::birefringent_delay(plate, lambda_nm);
    return (d1.phase_fs - d0.phase_fs) * kSpeedOfLightNmPerFs;
}

/// Smallest |tilt| giving the requested path delay (bisection on [0, 45)).
inline double tilt_for_path_delay(const BirefringentElement& plate, double path_nm, double lambda_nm) {
    if (path_nm == 0.0) return 0.0;
    const double sign = plate_path_delay_nm(plate, 10.0, lambda_nm) > 0.0 ? 1.0 : -1.0;
    const double target = sign * path_nm;
    constexpr double kMaxTilt = 44.999;
    if (target < 0.0 || target > sign * plate_path_delay_nm(plate, kMaxTilt, lambda_nm)) {
        throw ConfigError("tilt scan: path delay " + std::to_string(path_nm) +
                          " nm is not reachable with tilts below 45 deg");
    }
    double lo = 0.0;
    double hi = kMaxTilt;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sign * plate_path_delay_nm(plate, mid, lambda_nm) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline biphoton::AmplitudePair apply_plate(biphoton::AmplitudePair pair, const BaseAmplitudes& base,
                                           const BirefringentElement& plate_in, double tilt_deg,
                                           biphoton::Arm arm, double lambda_nm) {
    if (tilt_deg == 0.0) return pair;
    BirefringentElement plate = plate_in;
    plate.tilt_deg = 0.0;
    const auto d0 = dispersion::birefringent_delay(plate, lambda_nm);
    plate.tilt_deg = tilt_deg;
    const auto d1 = dispersion::birefringent_delay(plate, lambda_nm);
    const double dphase = d1.phase_fs - d0.phase_fs;
    const double dgroup = d1.group_fs - d0.group_fs;
    // The plate delays light polarized along its axis relative to the other.
    if (base.pol_a == plate.axis) {
        pair.amp_a = biphoton::apply_dispersive_arm_delay(std::move(pair.amp_a), arm, dphase, dgroup);
    } else {
        pair.amp_b = biphoton::apply_dispersive_arm_delay(std::move(pair.amp_b), arm, dphase, dgroup);
    }
    return pair;
}

}  // namespace detail

/// Folds the phase knobs into the base pair.
inline biphoton::AmplitudePair apply_knobs(const BaseAmplitudes& base, const PhaseKnobs& knobs) {
    const auto& c = base.config;
    biphoton::AmplitudePair pair = base.pair;
    pair.relative_phase_rad = wavenumber(c.pump.center_wavelength_nm) * knobs.pump_delta_x_nm;
    pair = detail::apply_plate(std::move(pair), base, c.signal_plate, knobs.signal_tilt_deg, biphoton::Arm::signal,
                               c.signal_nm);
    pair = detail::apply_plate(std::move(pair), base, c.idler_plate, knobs.idler_tilt_deg, biphoton::Arm::idler,
                               c.idler_nm);
    return pair;
}

inline biphoton::AmplitudePair build_amplitudes(const SourceConfig& config, const PhaseKnobs& knobs) {
    return apply_knobs(build_base(config), knobs);
}

/// Analyzer weights of the two amplitudes, normalized to 1 at θ₁ = θ₂ = 45°:
/// w = 2⟨θ₁|P⟩⟨θ₂|P⟩ for a pair polarized along P.
inline biphoton::ArmWeights analyzer_weights(const BaseAmplitudes& base, const polarization::AnalyzerSetting& a) {
    const auto u = polarization::analyzer_hv(a.theta1_deg);
    const auto v = polarization::analyzer_hv(a.theta2_deg);
    auto w = [&](AxisOrientation p) {
        const std::size_t i = p == AxisOrientation::horizontal ? 0 : 1;
        return 2.0 * u[i] * v[i];
    };
    return {w(base.pol_a), w(base.pol_b)};
}

struct FringeScan {
    AxisKind axis_kind = AxisKind::pump_delay;
    std::string axis_unit;
    std::vector<double> axis;
    std::vector<double> rates;
    /// Simulated counts when the noise stage is on (rates = counts / mean_counts).
    std::vector<double> counts;
    /// Plate tilts behind each tilt-scan point, degrees.
    std::vector<double> signal_tilts_deg;
    std::vector<double> idler_tilts_deg;
    SourceConfig config;
    TimingReport timing;
    PhaseKnobs knobs;
    polarization::AnalyzerSetting analyzers;
    std::size_t grid_points = 0;
};

struct ScanOptions {
    /// Single-threaded, fixed evaluation order.
    bool reference = false;
    unsigned threads = 0;  // 0: hardware concurrency
};

inline FringeScan scan(const SourceConfig& config, AxisKind kind, double start, double stop, int steps,
                       const polarization::AnalyzerSetting& analyzers, const ScanOptions& opts = {}) {
    if (steps < 2) throw ConfigError("scan: steps must be at least 2");
    if (!std::isfinite(start) || !std::isfinite(stop) || start == stop) {
        throw ConfigError("scan: range must be finite with start != stop");
    }
    const BaseAmplitudes base = build_base(config);
    const auto& c = base.config;

    FringeScan out;
    out.axis_kind = kind;
    out.axis_unit = kind == AxisKind::analyzer2_angle ? "deg" : "nm";
    out.config = c;
    out.timing = base.timing;
    out.knobs = c.knobs;
    out.analyzers = analyzers;
    out.grid_points = base.grid_points;
    const auto n = static_cast<std::size_t>(steps);
    out.axis.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.axis[k] = start + (stop - start) * static_cast<double>(k) / static_cast<double>(n - 1);
    }

    // Resolve per-point knobs up front (tilt solving may throw).
    std::vector<PhaseKnobs> knobs(n, c.knobs);
    std::vector<polarization::AnalyzerSetting> an(n, analyzers);
    const bool tilts = kind == AxisKind::signal_tilt || kind == AxisKind::idler_tilt || kind == AxisKind::both_tilts;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = out.axis[k];
        switch (kind) {
            case AxisKind::pump_delay:
                knobs[k].pump_delta_x_nm += x;
                break;
            case AxisKind::signal_tilt:
                knobs[k].signal_tilt_deg = tilt_for_path_delay(c.signal_plate, x, c.signal_nm);
                break;
            case AxisKind::idler_tilt:
                knobs[k].idler_tilt_deg = tilt_for_path_delay(c.idler_plate, x, c.idler_nm);
                break;
            case AxisKind::both_tilts: {
                // Equal tilts on both plates; x is the mean of the two path delays.
                if (x < 0.0) throw ConfigError("tilt scan: path delays must be non-negative");
                auto mean_path = [&](double t) {
                    return 0.5 * (std::abs(plate_path_delay_nm(c.signal_plate, t, c.signal_nm)) +
                                  std::abs(plate_path_delay_nm(c.idler_plate, t, c.idler_nm)));
                };
                if (x > mean_path(44.999)) throw ConfigError("tilt scan: path delay not reachable below 45 deg");
                double lo = 0.0;
                double hi = 44.999;
                for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (mean_path(mid) < x ? lo : hi) = mid;
                }
                knobs[k].signal_tilt_deg = knobs[k].idler_tilt_deg = x == 0.0 ? 0.0 : 0.5 * (lo + hi);
                break;
            }
            case AxisKind::analyzer2_angle:
                an[k].theta2_deg = x;
                break;
        }
        if (tilts) {
            out.signal_tilts_deg.push_back(knobs[k].signal_tilt_deg);
            out.idler_tilts_deg.push_back(knobs[k].idler_tilt_deg);
        }
    }

    out.rates.assign(n, 0.0);
    auto eval = [&](std::size_t k) {
        const auto pair = apply_knobs(base, knobs[k]);
        out.rates[k] = biphoton::coincidence_rate(pair, analyzer_weights(base, an[k])).rate;
    };
    unsigned threads = opts.reference ? 1u : (opts.threads ? opts.threads : std::thread::hardware_concurrency());
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t k = 0; k < n; ++k) eval(k);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t k = t; k < n; k += threads) eval(k);
            });
        }
    }

    if (c.noise.enabled) {
        std::mt19937_64 rng(c.noise.seed);
        out.counts.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::poisson_distribution<long long> dist(std::max(c.noise.mean_counts * out.rates[k], 1e-300));
            out.counts[k] = static_cast<double>(dist(rng));
            out.rates[k] = out.counts[k] / c.noise.mean_counts;
        }
    }
    return out;
}

inline FringeScan scan(const SourceConfig& config, const ScanOptions& opts = {}) {
    return scan(config, config.scan.axis, config.scan.start, config.scan.stop, config.scan.steps, config.analyzers,
                opts);
}

/// Visibility of a pair: 2|⟨a|b⟩|/(N_a + N_b).
inline double visibility(const BaseAmplitudes& base) {
    return biphoton::coincidence_rate(base.pair).visibility_bound;
}

enum class BellTarget { phi_plus, phi_minus };

struct PreparedKnobs {
    PhaseKnobs knobs;
    double visibility = 0.0;
    double rate = 0.0;
    /// Phase of the interference term at the returned knobs, rad.
    double fringe_phase_rad = 0.0;
};

inline constexpr double kMinPreparationOverlap = 0.9;

/// Sets the pump Δx so the space-time fringe sits at its maximum (Φ+) or
/// minimum (Φ−); tilts stay at the configured values.
inline PreparedKnobs prepare_bell(const SourceConfig& config, BellTarget target) {
    const BaseAmplitudes base = build_base(config);
    PhaseKnobs k = base.config.knobs;
    k.pump_delta_x_nm = 0.0;
    const auto pair0 = apply_knobs(base, k);
    const auto r0 = biphoton::coincidence_rate(pair0);
    if (r0.visibility_bound <= kMinPreparationOverlap) {
        throw InfeasibleError("prepare: |overlap| = " + std::to_string(r0.visibility_bound) +
                              " is below the " + std::to_string(kMinPreparationOverlap) +
                              " needed for interference (check compensation)");
    }
    const double phi0 = std::arg(r0.overlap);
    const double goal = target == BellTarget::phi_plus ? 0.0 : kPi;
    double turn = std::fmod(goal - phi0, kTwoPi);
    if (turn < 0.0) turn += kTwoPi;
    k.pump_delta_x_nm = turn / wavenumber(base.config.pump.center_wavelength_nm);
    const auto pair = apply_knobs(base, k);
    const auto r = biphoton::coincidence_rate(pair);
    PreparedKnobs out;
    out.knobs = k;
    out.visibility = r.visibility_bound;
    out.rate = r.rate;
    out.fringe_phase_rad = std::arg(std::polar(1.0, pair.relative_phase_rad) * r.overlap);
    return out;
}

struct EffectiveState {
    polarization::PolarizationState state;
    double visibility = 0.0;
    double phase_rad = 0.0;
    std::string label;
};

inline constexpr double kIncoherentThreshold = 0.1;

/// Pure-state coefficients √N_a|P_aP_a⟩ + e^{iφ}√N_b|P_bP_b⟩ with the
/// effective phase φ, plus the coherence factor V reported separately.
inline EffectiveState effective_polarization_state(const BaseAmplitudes& base, const PhaseKnobs& knobs) {
    const auto pair = apply_knobs(base, knobs);
    const auto r = biphoton::coincidence_rate(pair);
    EffectiveState out;
    out.visibility = r.visibility_bound;
    out.phase_rad = pair.relative_phase_rad + (std::abs(r.overlap) > 0.0 ? std::arg(r.overlap) : 0.0);
    auto index = [](AxisOrientation p) {
        return p == AxisOrientation::horizontal ? polarization::HH : polarization::VV;
    };
    polarization::PolarizationState s;
    s.c[index(base.pol_a)] += std::sqrt(r.norm_a);
    s.c[index(base.pol_b)] += std::polar(std::sqrt(r.norm_b), out.phase_rad);
    s = polarization::normalized(s);
    if (std::abs(s.c[polarization::HH]) > 0.0) {
        const auto g = std::conj(s.c[polarization::HH]) / std::abs(s.c[polarization::HH]);
        for (auto& x : s.c) x *= g;
    }
    s.wavelength1_nm = base.config.signal_nm;
    s.wavelength2_nm = base.config.idler_nm;
    s.label = out.visibility < kIncoherentThreshold ? "incoherent-mixture-equivalent" : "coherent";
    out.state = s;
    out.label = s.label;
    return out;
}

inline EffectiveState effective_polarization_state(const SourceConfig& config, const PhaseKnobs& knobs) {
    return effective_polarization_state(build_base(config), knobs);
}

}  // namespace bellsim::scenario

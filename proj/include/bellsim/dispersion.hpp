#pragma once

// Refractive and group indices of uniaxial crystals (BBO, crystalline quartz)
// and the delays that plates and crystals impose on a pulse.
//
// Wavelengths at the API are vacuum wavelengths in nm. Sellmeier fits are
// evaluated in µm, which is the unit every published coefficient set uses.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bellsim/errors.hpp"
#include "bellsim/units.hpp"

namespace bellsim::dispersion {

enum class Pol { o, e };

enum class AxisOrientation { horizontal, vertical };

inline AxisOrientation orthogonal(AxisOrientation a) {
    return a == AxisOrientation::horizontal ? AxisOrientation::vertical : AxisOrientation::horizontal;
}

/// Functional form of a dispersion fit, n^2(λ) with λ in µm.
///   sellmeier:      n^2 = A + Σ_k B_k λ^2 / (λ^2 - C_k)   coefficients [A, B1, C1, B2, C2, ...]
///   pole_quadratic: n^2 = A + B / (λ^2 - C) - D λ^2       coefficients [A, B, C, D]
enum class SellmeierForm { sellmeier, pole_quadratic };

struct SellmeierFit {
    SellmeierForm form = SellmeierForm::sellmeier;
    std::vector<double> coefficients;
    std::string source_note;
};

struct Material {
    std::string name;
    SellmeierFit sellmeier_o;
    SellmeierFit sellmeier_e;
    double valid_min_nm = 0.0;
    double valid_max_nm = 0.0;

    const SellmeierFit& fit(Pol pol) const { return pol == Pol::o ? sellmeier_o : sellmeier_e; }
};

namespace detail {

inline void check_form(const SellmeierFit& fit, const std::string& who) {
    const auto n = fit.coefficients.size();
    const bool ok = fit.form == SellmeierForm::sellmeier ? (n >= 1 && n % 2 == 1) : n == 4;
    if (!ok) {
        throw ConfigError(who + ": coefficient count " + std::to_string(n) + " does not match the fit form");
    }
}

// n^2 and d(n^2)/dλ at λ (µm).
struct IndexSquared {
    double value;
    double slope;
};

inline IndexSquared index_squared(const SellmeierFit& fit, double lambda_um) {
    const auto& k = fit.coefficients;
    const double l2 = lambda_um * lambda_um;
    IndexSquared out{k.at(0), 0.0};
    if (fit.form == SellmeierForm::sellmeier) {
        for (std::size_t i = 1; i + 1 < k.size(); i += 2) {
            const double b = k[i];
            const double c = k[i + 1];
            const double den = l2 - c;
            out.value += b * l2 / den;
            out.slope += -2.0 * b * c * lambda_um / (den * den);
        }
    } else {
        const double b = k[1];
        const double c = k[2];
        const double d = k[3];
        const double den = l2 - c;
        out.value += b / den - d * l2;
        out.slope += -2.0 * b * lambda_um / (den * den) - 2.0 * d * lambda_um;
    }
    return out;
}

// n and dn/dλ (per µm) for a principal polarization.
struct IndexAndSlope {
    double n;
    double dn_dlambda_um;
};

inline IndexAndSlope principal(const Material& m, Pol pol, double lambda_nm) {
    const auto sq = index_squared(m.fit(pol), lambda_nm * 1e-3);
    const double n = std::sqrt(sq.value);
    return {n, sq.slope / (2.0 * n)};
}

inline void require_in_range(const Material& m, double lambda_nm) {
    if (!(lambda_nm >= m.valid_min_nm && lambda_nm <= m.valid_max_nm)) {
        throw RangeError(m.name + ": wavelength " + std::to_string(lambda_nm) + " nm outside valid range [" +
                         std::to_string(m.valid_min_nm) + ", " + std::to_string(m.valid_max_nm) + "] nm");
    }
}

inline void require_strictly_inside(const Material& m, double lambda_nm) {
    if (!(lambda_nm > m.valid_min_nm && lambda_nm < m.valid_max_nm)) {
        throw RangeError(m.name + ": wavelength " + std::to_string(lambda_nm) +
                         " nm must lie strictly inside (" + std::to_string(m.valid_min_nm) + ", " +
                         std::to_string(m.valid_max_nm) + ") nm for a derivative");
    }
}

// Index of the wave polarized as `pol` travelling at `angle_rad` to the
// optic axis, with its wavelength derivative. The o-wave does not depend on
// the angle.
inline IndexAndSlope directional(const Material& m, Pol pol, double lambda_nm, double angle_rad) {
    const auto o = principal(m, Pol::o, lambda_nm);
    if (pol == Pol::o) return o;
    const auto e = principal(m, Pol::e, lambda_nm);
    const double c2 = std::cos(angle_rad) * std::cos(angle_rad);
    const double s2 = std::sin(angle_rad) * std::sin(angle_rad);
    const double inv = c2 / (o.n * o.n) + s2 / (e.n * e.n);
    const double n = 1.0 / std::sqrt(inv);
    const double slope =
        n * n * n * (c2 * o.dn_dlambda_um / (o.n * o.n * o.n) + s2 * e.dn_dlambda_um / (e.n * e.n * e.n));
    return {n, slope};
}

}  // namespace detail

/// Checks the type invariants: nonempty fits that match their form, a
/// sensible range, and n > 1 across it.
inline void validate(const Material& m) {
    detail::check_form(m.sellmeier_o, m.name + " (o)");
    detail::check_form(m.sellmeier_e, m.name + " (e)");
    if (!(m.valid_min_nm > 0.0 && m.valid_max_nm > m.valid_min_nm)) {
        throw ConfigError(m.name + ": invalid valid_range_nm");
    }
    constexpr int kSamples = 64;
    for (int i = 0; i <= kSamples; ++i) {
        const double l = m.valid_min_nm + (m.valid_max_nm - m.valid_min_nm) * i / kSamples;
        for (Pol p : {Pol::o, Pol::e}) {
            const auto sq = detail::index_squared(m.fit(p), l * 1e-3);
            if (!(sq.value > 1.0) || !std::isfinite(sq.value)) {
                throw ConfigError(m.name + ": fit gives n <= 1 at " + std::to_string(l) + " nm");
            }
        }
    }
}

/// Principal refractive index n_o or n_e at λ (boundary wavelengths included).
inline double refractive_index(const Material& m, Pol pol, double lambda_nm) {
    detail::require_in_range(m, lambda_nm);
    return detail::principal(m, pol, lambda_nm).n;
}

/// Group index n - λ dn/dλ, from the analytic derivative of the fit.
inline double group_index(const Material& m, Pol pol, double lambda_nm) {
    detail::require_strictly_inside(m, lambda_nm);
    const auto p = detail::principal(m, pol, lambda_nm);
    return p.n - lambda_nm * 1e-3 * p.dn_dlambda_um;
}

/// Index for propagation at `angle_deg` from the optic axis (90 = principal plane).
inline double directional_index(const Material& m, Pol pol, double lambda_nm, double angle_deg) {
    detail::require_in_range(m, lambda_nm);
    return detail::directional(m, pol, lambda_nm, deg_to_rad(angle_deg)).n;
}

inline double directional_group_index(const Material& m, Pol pol, double lambda_nm, double angle_deg) {
    detail::require_strictly_inside(m, lambda_nm);
    const auto p = detail::directional(m, pol, lambda_nm, deg_to_rad(angle_deg));
    return p.n - lambda_nm * 1e-3 * p.dn_dlambda_um;
}

/// Inverse group velocity k' = n_g / c in fs/mm.
inline double inverse_group_velocity(const Material& m, Pol pol, double lambda_nm, double angle_deg = 90.0) {
    return directional_group_index(m, pol, lambda_nm, angle_deg) / kSpeedOfLightMmPerFs;
}

/// Type-I (e -> o + o) collinear phase-matching angle in degrees, solving
/// n_e(θ, λp)/λp = n_o(λs)/λs + n_o(λi)/λi.
inline double type1_phase_matching_angle(const Material& m, double pump_nm, double signal_nm, double idler_nm) {
    const double target = refractive_index(m, Pol::o, signal_nm) / signal_nm +
                          refractive_index(m, Pol::o, idler_nm) / idler_nm;
    auto mismatch = [&](double angle_rad) {
        return detail::directional(m, Pol::e, pump_nm, angle_rad).n / pump_nm - target;
    };
    detail::require_in_range(m, pump_nm);
    double lo = 0.0;
    double hi = kPi / 2.0;
    double f_lo = mismatch(lo);
    const double f_hi = mismatch(hi);
    if (f_lo * f_hi > 0.0) {
        throw RangeError(m.name + ": no type-I phase-matching angle for " + std::to_string(pump_nm) + " -> " +
                         std::to_string(signal_nm) + " + " + std::to_string(idler_nm) + " nm");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = mismatch(mid);
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return rad_to_deg(0.5 * (lo + hi));
}

struct BirefringentElement {
    Material material;
    double thickness_mm = 0.0;
    AxisOrientation axis = AxisOrientation::vertical;
    /// Rotation about an axis in the plate plane; 0 is normal incidence.
    double tilt_deg = 0.0;
    /// Angle between the beam and the optic axis. 90 for plates cut with the
    /// axis in the face, the phase-matching angle for SPDC crystals.
    double cut_angle_deg = 90.0;

    /// Polarization role (o or e) of light linearly polarized along `pol_axis`.
    Pol role_of(AxisOrientation pol_axis) const { return pol_axis == axis ? Pol::e : Pol::o; }
};

inline void validate(const BirefringentElement& el) {
    if (!(el.thickness_mm >= 0.0)) {
        throw ConfigError(el.material.name + " element: thickness must be non-negative");
    }
    if (!(std::abs(el.tilt_deg) < 45.0)) {
        throw ConfigError(el.material.name + " element: |tilt| must be below 45 deg");
    }
}

struct GroupDelayReport {
    double phase_delay_fs = 0.0;
    double group_delay_fs = 0.0;
    Pol polarization = Pol::o;
    /// Set when the e-wave index was taken at normal incidence although the
    /// element is tilted.
    bool tilt_index_approximated = false;
};

/// Geometric path inside a tilted plane-parallel plate: Snell refraction with
/// the ordinary index, L / cos(θ_internal).
inline double tilted_path_mm(const BirefringentElement& el, double lambda_nm) {
    const double n_o = refractive_index(el.material, Pol::o, lambda_nm);
    const double sin_int = std::sin(deg_to_rad(el.tilt_deg)) / n_o;
    return el.thickness_mm / std::sqrt(1.0 - sin_int * sin_int);
}

inline GroupDelayReport element_delays(const BirefringentElement& el, Pol pol, double lambda_nm) {
    validate(el);
    const double path = tilted_path_mm(el, lambda_nm);
    const double n = directional_index(el.material, pol, lambda_nm, el.cut_angle_deg);
    const double ng = directional_group_index(el.material, pol, lambda_nm, el.cut_angle_deg);
    GroupDelayReport r;
    r.phase_delay_fs = n * path / kSpeedOfLightMmPerFs;
    r.group_delay_fs = ng * path / kSpeedOfLightMmPerFs;
    r.polarization = pol;
    r.tilt_index_approximated = pol == Pol::e && el.tilt_deg != 0.0;
    return r;
}

/// Phase and group delay of light polarized along the element axis (e)
/// minus light polarized across it (o). Positive for a positive crystal.
struct DifferentialDelay {
    double phase_fs;
    double group_fs;
};

inline DifferentialDelay birefringent_delay(const BirefringentElement& el, double lambda_nm) {
    const auto e = element_delays(el, Pol::e, lambda_nm);
    const auto o = element_delays(el, Pol::o, lambda_nm);
    return {e.phase_delay_fs - o.phase_delay_fs, e.group_delay_fs - o.group_delay_fs};
}

/// Group-delay advance that a stack of elements gives light polarized along
/// `advanced` over light polarized orthogonally to it, in fs.
inline double group_advance_fs(std::span<const BirefringentElement> elements, AxisOrientation advanced,
                               double lambda_nm) {
    double sum = 0.0;
    for (const auto& el : elements) {
        const double own = element_delays(el, el.role_of(advanced), lambda_nm).group_delay_fs;
        const double other = element_delays(el, el.role_of(orthogonal(advanced)), lambda_nm).group_delay_fs;
        sum += other - own;
    }
    return sum;
}

/// Timing offset the compensator must pre-impose between the two pump
/// polarizations of a type-I crystal chain so that pairs from each crystal
/// exit together (positive: the pump feeding the later crystal is advanced).
///
/// The pump for a later crystal crosses the earlier one as an o-wave while
/// the earlier crystal's pair crosses the later one as e-waves; every crystal
/// plays each role once in a symmetric pair, so each contributes half of
/// L (k'_pump,o - mean(k'_signal,e, k'_idler,e)). Exact for equal crystals.
inline double compensation_delay(std::span<const BirefringentElement> crystals, double pump_nm, double signal_nm,
                                 double idler_nm) {
    double sum = 0.0;
    for (const auto& c : crystals) {
        validate(c);
        const double kp_o = inverse_group_velocity(c.material, Pol::o, pump_nm);
        const double ks_e = inverse_group_velocity(c.material, Pol::e, signal_nm, c.cut_angle_deg);
        const double ki_e = inverse_group_velocity(c.material, Pol::e, idler_nm, c.cut_angle_deg);
        sum += 0.5 * c.thickness_mm * (kp_o - 0.5 * (ks_e + ki_e));
    }
    return sum;
}

}  // namespace bellsim::dispersion

#pragma once

// Two-photon polarization algebra on the ordered basis (HH, HV, VH, VV),
// first letter = photon 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "bellsim/errors.hpp"
#include "bellsim/units.hpp"

namespace bellsim::polarization {

using cplx = std::complex<double>;

enum Basis : std::size_t { HH = 0, HV = 1, VH = 2, VV = 3 };

struct PolarizationState {
    std::array<cplx, 4> c{};
    double wavelength1_nm = 730.0;
    double wavelength2_nm = 885.0;
    std::string label;
};

inline double norm_squared(const PolarizationState& s) {
    double n = 0.0;
    for (const auto& x : s.c) n += std::norm(x);
    return n;
}

inline PolarizationState normalized(PolarizationState s) {
    const double n = std::sqrt(norm_squared(s));
    if (!(n > 0.0)) throw ConfigError("polarization state has zero norm");
    for (auto& x : s.c) x /= n;
    return s;
}

enum class StateKind { phi_plus, phi_minus, psi_plus, psi_minus, custom };

/// Φ± = (HH ± e^{iφ}VV)/√2, Ψ± = (HV ± e^{iφ}VH)/√2,
/// custom = (r·HH + e^{iφ}VV)/√(1+r²).
inline PolarizationState make_state(StateKind kind, double phase_rad = 0.0, double amplitude_ratio = 1.0) {
    if (!std::isfinite(amplitude_ratio) || amplitude_ratio < 0.0) {
        throw ConfigError("make_state: amplitude_ratio must be finite and >= 0");
    }
    PolarizationState s;
    const cplx ph = std::polar(1.0, phase_rad);
    const double h = 1.0 / std::sqrt(2.0);
    switch (kind) {
        case StateKind::phi_plus:
            s.c[HH] = h;
            s.c[VV] = h * ph;
            s.label = "phi+";
            break;
        case StateKind::phi_minus:
            s.c[HH] = h;
            s.c[VV] = -h * ph;
            s.label = "phi-";
            break;
        case StateKind::psi_plus:
            s.c[HV] = h;
            s.c[VH] = h * ph;
            s.label = "psi+";
            break;
        case StateKind::psi_minus:
            s.c[HV] = h;
            s.c[VH] = -h * ph;
            s.label = "psi-";
            break;
        case StateKind::custom:
            s.c[HH] = amplitude_ratio;
            s.c[VV] = ph;
            s.label = "custom";
            return normalized(s);
    }
    return s;
}

struct AnalyzerSetting {
    double theta1_deg = 45.0;
    double theta2_deg = 45.0;
};

/// Single-photon analyzer vector (H, V) components: |θ⟩ = cosθ|V⟩ + sinθ|H⟩.
inline std::array<double, 2> analyzer_hv(double theta_deg) {
    const double t = deg_to_rad(std::fmod(theta_deg, 180.0));
    return {std::sin(t), std::cos(t)};
}

/// |⟨θ₁|⊗⟨θ₂| ψ⟩|².
inline double project(const PolarizationState& s, const AnalyzerSetting& a) {
    const auto u = analyzer_hv(a.theta1_deg);
    const auto v = analyzer_hv(a.theta2_deg);
    const cplx amp = u[0] * v[0] * s.c[HH] + u[0] * v[1] * s.c[HV] + u[1] * v[0] * s.c[VH] + u[1] * v[1] * s.c[VV];
    return std::norm(amp);
}

/// Half-wave plate with its fast axis at `axis_deg` from vertical, on photon
/// `port` (1 or 2). Jones matrix on (V, H): [[cos2α, sin2α], [sin2α, −cos2α]].
inline PolarizationState half_wave_plate(const PolarizationState& s, int port, double axis_deg) {
    if (port != 1 && port != 2) throw ConfigError("half_wave_plate: port must be 1 or 2");
    const double c2 = std::cos(2.0 * deg_to_rad(axis_deg));
    const double s2 = std::sin(2.0 * deg_to_rad(axis_deg));
    // On (H, V) ordering the same matrix reads [[−c2, s2], [s2, c2]].
    const double m[2][2] = {{-c2, s2}, {s2, c2}};
    PolarizationState out = s;
    for (std::size_t x = 0; x < 2; ++x) {
        for (std::size_t y = 0; y < 2; ++y) {
            cplx acc{0.0, 0.0};
            for (std::size_t z = 0; z < 2; ++z) {
                acc += port == 1 ? m[x][z] * s.c[2 * z + y] : m[y][z] * s.c[2 * x + z];
            }
            out.c[2 * x + y] = acc;
        }
    }
    return out;
}

/// |⟨target|state⟩|².
inline double fidelity(const PolarizationState& state, const PolarizationState& target) {
    cplx ip{0.0, 0.0};
    for (std::size_t k = 0; k < 4; ++k) ip += std::conj(target.c[k]) * state.c[k];
    return std::min(1.0, std::norm(ip));
}

/// Fidelity when the two amplitudes only interfere with coherence V: the
/// state is mixed with its relative-phase-flipped partner,
/// ρ = (1+V)/2 |ψ⟩⟨ψ| + (1−V)/2 |ψ̃⟩⟨ψ̃|.
inline double fidelity_with_coherence(const PolarizationState& state, double visibility,
                                      const PolarizationState& target) {
    PolarizationState flipped = state;
    flipped.c[VV] = -flipped.c[VV];
    flipped.c[VH] = -flipped.c[VH];
    const double v = std::clamp(visibility, 0.0, 1.0);
    return 0.5 * (1.0 + v) * fidelity(state, target) + 0.5 * (1.0 - v) * fidelity(flipped, target);
}

enum class PostselectionScheme { beamsplitter_degenerate, dichroic_nondegenerate };

/// Fraction of the pair amplitude discarded by coincidence post-selection.
inline double postselection_fraction(PostselectionScheme scheme) {
    return scheme == PostselectionScheme::beamsplitter_degenerate ? 0.5 : 0.0;
}

}  // namespace bellsim::polarization

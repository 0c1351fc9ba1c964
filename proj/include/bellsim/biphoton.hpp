#pragma once

// Two-amplitude interference: delays, overlaps and normalized coincidence rates.

#include <cmath>
#include <complex>

#include "bellsim/errors.hpp"
#include "bellsim/jsa.hpp"

namespace bellsim::biphoton {

enum class Arm { signal, idler };

/// Multiplies by exp(i[φ_s + (ω_s − Ω_s)τ_s + φ_i + (ω_i − Ω_i)τ_i]) where
/// Ω are the grid carriers. A plain delay T on one arm is φ = Ω·T, τ = T.
inline JointSpectralAmplitude apply_spectral_phase(JointSpectralAmplitude jsa, double signal_phase_rad,
                                                   double signal_group_fs, double idler_phase_rad,
                                                   double idler_group_fs) {
    const auto& g = jsa.grid();
    std::vector<cplx> ps(g.ns());
    std::vector<cplx> pi(g.ni());
    for (std::size_t j = 0; j < g.ns(); ++j) {
        ps[j] = std::polar(1.0, signal_phase_rad + (g.signal_axis[j] - g.signal_center) * signal_group_fs);
    }
    for (std::size_t k = 0; k < g.ni(); ++k) {
        pi[k] = std::polar(1.0, idler_phase_rad + (g.idler_axis[k] - g.idler_center) * idler_group_fs);
    }
    auto& v = jsa.mutable_values();
    for (std::size_t j = 0; j < g.ns(); ++j) {
        for (std::size_t k = 0; k < g.ni(); ++k) v[j * g.ni() + k] *= ps[j] * pi[k];
    }
    jsa.meta().signal_delay_fs += signal_group_fs;
    jsa.meta().idler_delay_fs += idler_group_fs;
    return jsa;
}

/// values[j,k] · exp(i(ω_s+ω_i)T).
inline JointSpectralAmplitude apply_pair_delay(JointSpectralAmplitude jsa, double t_fs) {
    if (t_fs == 0.0) return jsa;
    const auto& g = jsa.grid();
    const double ws = g.signal_center;
    const double wi = g.idler_center;
    auto out = apply_spectral_phase(std::move(jsa), ws * t_fs, t_fs, wi * t_fs, t_fs);
    out.meta().signal_delay_fs -= t_fs;
    out.meta().idler_delay_fs -= t_fs;
    out.meta().pair_delay_fs += t_fs;
    return out;
}

/// exp(iω T) along one axis only.
inline JointSpectralAmplitude apply_single_arm_delay(JointSpectralAmplitude jsa, Arm arm, double t_fs) {
    if (t_fs == 0.0) return jsa;
    const auto& g = jsa.grid();
    if (arm == Arm::signal) return apply_spectral_phase(std::move(jsa), g.signal_center * t_fs, t_fs, 0.0, 0.0);
    return apply_spectral_phase(std::move(jsa), 0.0, 0.0, g.idler_center * t_fs, t_fs);
}

/// Dispersive single-arm delay: carrier follows the phase delay, the
/// envelope the group delay.
inline JointSpectralAmplitude apply_dispersive_arm_delay(JointSpectralAmplitude jsa, Arm arm, double phase_delay_fs,
                                                         double group_delay_fs) {
    const auto& g = jsa.grid();
    if (arm == Arm::signal) {
        return apply_spectral_phase(std::move(jsa), g.signal_center * phase_delay_fs, group_delay_fs, 0.0, 0.0);
    }
    return apply_spectral_phase(std::move(jsa), 0.0, 0.0, g.idler_center * phase_delay_fs, group_delay_fs);
}

/// Σ a*·b Δω_s Δω_i, row-wise reduction in index order.
inline cplx overlap(const JointSpectralAmplitude& a, const JointSpectralAmplitude& b) {
    if (!a.shares_grid_with(b)) throw GridMismatchError("overlap: amplitudes live on different grids");
    const auto& g = a.grid();
    cplx total{0.0, 0.0};
    for (std::size_t j = 0; j < g.ns(); ++j) {
        cplx row{0.0, 0.0};
        for (std::size_t k = 0; k < g.ni(); ++k) row += std::conj(a.at(j, k)) * b.at(j, k);
        total += row;
    }
    return total * g.cell();
}

struct AmplitudePair {
    JointSpectralAmplitude amp_a;
    JointSpectralAmplitude amp_b;
    double relative_phase_rad = 0.0;
};

inline void validate(const AmplitudePair& p) {
    if (!p.amp_a.shares_grid_with(p.amp_b)) throw GridMismatchError("amplitude pair: grids differ");
}

struct CoincidenceResult {
    double rate = 0.0;
    /// 2|⟨a|b⟩| / (N_a + N_b): the fringe visibility this pair can reach.
    double visibility_bound = 0.0;
    /// ∫∫|w_a A_a + w_b e^{iΔφ} A_b|² before normalization.
    double raw_rate = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    cplx overlap{0.0, 0.0};
};

/// Analyzer projection weights of the two amplitudes.
struct ArmWeights {
    double a = 1.0;
    double b = 1.0;
};

/// rate = ∫∫|w_a A_a + w_b e^{iΔφ} A_b|² / (N_a + N_b): equal, fully
/// overlapping amplitudes at unit weights give 1 + cos Δφ.
inline CoincidenceResult coincidence_rate(const AmplitudePair& pair, ArmWeights w = {}) {
    validate(pair);
    const auto& g = pair.amp_a.grid();
    const cplx ph = std::polar(w.b, pair.relative_phase_rad);
    double raw = 0.0;
    double na = 0.0;
    double nb = 0.0;
    cplx ov{0.0, 0.0};
    for (std::size_t j = 0; j < g.ns(); ++j) {
        double row = 0.0;
        double ra = 0.0;
        double rb = 0.0;
        cplx ro{0.0, 0.0};
        for (std::size_t k = 0; k < g.ni(); ++k) {
            const cplx a = pair.amp_a.at(j, k);
            const cplx b = pair.amp_b.at(j, k);
            row += std::norm(w.a * a + ph * b);
            ra += std::norm(a);
            rb += std::norm(b);
            ro += std::conj(a) * b;
        }
        raw += row;
        na += ra;
        nb += rb;
        ov += ro;
    }
    const double cell = g.cell();
    CoincidenceResult r;
    r.raw_rate = raw * cell;
    r.norm_a = na * cell;
    r.norm_b = nb * cell;
    r.overlap = ov * cell;
    const double denom = r.norm_a + r.norm_b;
    r.rate = denom > 0.0 ? r.raw_rate / denom : 0.0;
    r.visibility_bound = denom > 0.0 ? std::min(1.0, 2.0 * std::abs(r.overlap) / denom) : 0.0;
    return r;
}

}  // namespace bellsim::biphoton

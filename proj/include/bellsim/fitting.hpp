#pragma once

// Sinusoid fitting: y = c + a cos(2πf u) + b sin(2πf u), u = x − x_mid,
// reported as offset·(1 + V cos(2πx/Λ + φ)).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bellsim/errors.hpp"
#include "bellsim/units.hpp"

namespace bellsim::fitting {

struct FitOptions {
    int max_iterations = 200;
    double tolerance = 1e-10;
    /// Zero-padding factor of the initializing transform.
    int oversampling = 8;
};

struct FitResult {
    double offset = 0.0;
    double visibility = 0.0;
    double period = 0.0;
    double phase_rad = 0.0;
    double rms_residual = 0.0;
    bool converged = false;
    int iterations = 0;
    /// Flat input: the period is meaningless and echoes the initializer.
    bool degenerate = false;
    /// (max − min)/(max + min) of the raw samples.
    double raw_visibility = 0.0;
};

/// Poisson count variance floored at 1.
inline std::vector<double> poisson_variance(std::span<const double> counts) {
    std::vector<double> v(counts.size());
    std::transform(counts.begin(), counts.end(), v.begin(), [](double c) { return std::max(c, 1.0); });
    return v;
}

inline double wrap_phase(double phi) {
    double w = std::remainder(phi, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

namespace detail {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

struct Problem {
    std::vector<double> u;
    std::vector<double> y;
    std::vector<double> w;
};

inline double cost(const Problem& p, const Vec4& q) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.u.size(); ++k) {
        const double t = kTwoPi * q[3] * p.u[k];
        const double r = p.y[k] - (q[0] + q[1] * std::cos(t) + q[2] * std::sin(t));
        s += p.w[k] * r * r;
    }
    return s;
}

/// Weighted linear least squares for (c, a, b) at fixed frequency.
inline Vec4 linear_start(const Problem& p, double f) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < p.u.size(); ++k) {
        const double t = kTwoPi * f * p.u[k];
        const Eigen::Vector3d row(1.0, std::cos(t), std::sin(t));
        m += p.w[k] * row * row.transpose();
        rhs += p.w[k] * p.y[k] * row;
    }
    const Eigen::Vector3d sol = m.ldlt().solve(rhs);
    return Vec4(sol[0], sol[1], sol[2], f);
}

struct LmOutcome {
    Vec4 q;
    double cost;
    bool converged;
    int iterations;
};

inline LmOutcome levenberg_marquardt(const Problem& p, Vec4 q, const FitOptions& opt) {
    double current = cost(p, q);
    double lambda = 1e-3;
    const std::size_t n = p.u.size();
    for (int it = 1; it <= opt.max_iterations; ++it) {
        Mat4 jtj = Mat4::Zero();
        Vec4 jtr = Vec4::Zero();
        for (std::size_t k = 0; k < n; ++k) {
            const double t = kTwoPi * q[3] * p.u[k];
            const double ct = std::cos(t);
            const double st = std::sin(t);
            const double r = p.y[k] - (q[0] + q[1] * ct + q[2] * st);
            const Vec4 j(1.0, ct, st, kTwoPi * p.u[k] * (-q[1] * st + q[2] * ct));
            jtj += p.w[k] * j * j.transpose();
            jtr += p.w[k] * r * j;
        }
        const double floor = 1e-15 * jtj.trace();
        bool stepped = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Mat4 a = jtj;
            for (int d = 0; d < 4; ++d) a(d, d) += lambda * std::max(jtj(d, d), floor);
            const Vec4 delta = a.ldlt().solve(jtr);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Vec4 trial = q + delta;
            const double c = cost(p, trial);
            if (c <= current) {
                const double scale = std::max({std::abs(q[0]), std::abs(q[1]), std::abs(q[2])});
                const double ref[4] = {scale, scale, scale, std::abs(q[3])};
                bool small = true;
                for (int d = 0; d < 4; ++d) {
                    small = small && std::abs(delta[d]) <= opt.tolerance * std::max(ref[d], 1e-300);
                }
                q = trial;
                current = c;
                lambda = std::max(lambda / 10.0, 1e-12);
                stepped = true;
                if (small) return {q, current, true, it};
                break;
            }
            lambda *= 10.0;
        }
        // No downhill step at any damping: already at the numerical minimum.
        if (!stepped) return {q, current, true, it};
    }
    return {q, current, false, opt.max_iterations};
}

/// Power of the weighted, mean-subtracted data at frequency f.
inline double spectral_power(const Problem& p, double mean, double f) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < p.u.size(); ++k) {
        const double t = kTwoPi * f * p.u[k];
        re += (p.y[k] - mean) * std::cos(t);
        im += (p.y[k] - mean) * std::sin(t);
    }
    return re * re + im * im;
}

}  // namespace detail

/// Damped least-squares fringe fit. `variance` gives per-point variances
/// (inverse-variance weighting); omitted means uniform weights.
inline FitResult fit_fringe(std::span<const double> x, std::span<const double> y,
                            std::optional<std::span<const double>> variance = std::nullopt,
                            const FitOptions& opt = {}) {
    if (x.size() != y.size()) throw DataError("fit: axis and rate lengths differ");
    if (x.size() < 8) throw DataError("fit: need at least 8 points, got " + std::to_string(x.size()));
    if (variance && variance->size() != x.size()) throw DataError("fit: variance length differs from data");
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k]) || !std::isfinite(y[k])) throw DataError("fit: non-finite sample at row " + std::to_string(k));
    }
    const auto [xmin_it, xmax_it] = std::minmax_element(x.begin(), x.end());
    const double span = *xmax_it - *xmin_it;
    if (!(span > 0.0)) throw DataError("fit: axis has zero span");
    const double x_mid = 0.5 * (*xmin_it + *xmax_it);

    detail::Problem p;
    p.u.resize(x.size());
    p.y.assign(y.begin(), y.end());
    p.w.assign(x.size(), 1.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        p.u[k] = x[k] - x_mid;
        if (variance) {
            const double v = (*variance)[k];
            if (!(v > 0.0)) throw DataError("fit: variance must be positive at row " + std::to_string(k));
            p.w[k] = 1.0 / v;
        }
    }

    FitResult r;
    const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
    r.raw_visibility = (*ymax_it + *ymin_it) != 0.0 ? (*ymax_it - *ymin_it) / (*ymax_it + *ymin_it) : 0.0;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    // Initializer: dominant bin of a zero-padded transform, f ∈ [1/span, Nyquist].
    const double df = 1.0 / (opt.oversampling * span);
    const double f_max = 0.5 * static_cast<double>(x.size() - 1) / span;
    std::vector<double> freqs;
    std::vector<double> power;
    for (double f = 1.0 / span; f <= f_max + 0.5 * df; f += df) {
        freqs.push_back(f);
        power.push_back(detail::spectral_power(p, mean, f));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < power.size(); ++k) {
        if (power[k] > power[best]) best = k;
    }

    const double scale = std::max(std::abs(*ymax_it), std::abs(*ymin_it));
    if (*ymax_it - *ymin_it <= 1e-12 * scale || power[best] == 0.0) {
        r.offset = mean;
        r.visibility = 0.0;
        r.period = 1.0 / freqs[best];
        r.phase_rad = 0.0;
        double ss = 0.0;
        for (double v : y) ss += (v - mean) * (v - mean);
        r.rms_residual = std::sqrt(ss / static_cast<double>(y.size()));
        r.converged = true;
        r.degenerate = true;
        return r;
    }

    // Ambiguity: a second local maximum within 20% of the best bin's power.
    std::vector<double> starts{freqs[best]};
    std::size_t second = power.size();
    for (std::size_t k = 0; k < power.size(); ++k) {
        if (k == best) continue;
        const bool local = (k == 0 || power[k] >= power[k - 1]) && (k + 1 == power.size() || power[k] >= power[k + 1]);
        const bool near_best = k + 1 == best || k == best + 1;
        if (local && !near_best && (second == power.size() || power[k] > power[second])) second = k;
    }
    if (second < power.size() && power[second] >= 0.8 * power[best]) starts.push_back(freqs[second]);

    std::optional<detail::LmOutcome> chosen;
    for (double f0 : starts) {
        auto out = detail::levenberg_marquardt(p, detail::linear_start(p, f0), opt);
        if (!chosen || out.cost < chosen->cost) chosen = out;
    }
    const auto& q = chosen->q;
    const double freq = std::abs(q[3]);
    const double sign = q[3] < 0.0 ? -1.0 : 1.0;
    const double a = q[1];
    const double b = sign * q[2];
    r.offset = q[0];
    r.visibility = q[0] != 0.0 ? std::clamp(std::hypot(a, b) / std::abs(q[0]), 0.0, 1.0) : 0.0;
    r.period = 1.0 / freq;
    r.phase_rad = wrap_phase(std::atan2(-b, a) - kTwoPi * freq * x_mid);
    double wsum = 0.0;
    for (double w : p.w) wsum += w;
    r.rms_residual = std::sqrt(chosen->cost / wsum);
    r.converged = chosen->converged;
    r.iterations = chosen->iterations;
    if (freq * span < 1.5) {
        throw DataError("fit: scan spans " + std::to_string(freq * span) + " periods, need at least 1.5");
    }
    return r;
}

struct PeriodComparison {
    std::vector<double> deviations;
    std::vector<bool> pass;
    bool all_pass = true;
    double tolerance = 0.005;
};

/// Relative deviations |Λ_fit − Λ_expected| / Λ_expected against a tolerance.
inline PeriodComparison compare_periods(std::span<const FitResult> fits, std::span<const double> expected,
                                        double tolerance = 0.005) {
    if (fits.size() != expected.size()) throw DataError("compare_periods: list lengths differ");
    PeriodComparison c;
    c.tolerance = tolerance;
    for (std::size_t k = 0; k < fits.size(); ++k) {
        const double d = std::abs(fits[k].period - expected[k]) / expected[k];
        c.deviations.push_back(d);
        c.pass.push_back(d <= tolerance);
        c.all_pass = c.all_pass && d <= tolerance;
    }
    return c;
}

}  // namespace bellsim::fitting

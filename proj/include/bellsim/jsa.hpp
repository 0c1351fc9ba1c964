#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "bellsim/errors.hpp"

namespace bellsim {

using cplx = std::complex<double>;

/// Uniform (ω_s, ω_i) sampling, absolute angular frequencies in rad/fs.
struct FrequencyGrid {
    std::vector<double> signal_axis;
    std::vector<double> idler_axis;
    /// Nominal carrier frequencies that detunings are measured from.
    double signal_center = 0.0;
    double idler_center = 0.0;

    std::size_t ns() const { return signal_axis.size(); }
    std::size_t ni() const { return idler_axis.size(); }
    double signal_step() const { return signal_axis[1] - signal_axis[0]; }
    double idler_step() const { return idler_axis[1] - idler_axis[0]; }
    double cell() const { return signal_step() * idler_step(); }

    bool operator==(const FrequencyGrid&) const = default;
};

inline std::vector<double> uniform_axis(double center, double half_span, std::size_t points) {
    std::vector<double> axis(points);
    for (std::size_t k = 0; k < points; ++k) {
        axis[k] = center - half_span + 2.0 * half_span * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    return axis;
}

inline void validate(const FrequencyGrid& g) {
    auto check = [](const std::vector<double>& a, const char* which) {
        if (a.size() < 2) throw ConfigError(std::string("frequency grid: ") + which + " axis needs >= 2 points");
        const double step = a[1] - a[0];
        if (!(step > 0.0)) throw ConfigError(std::string("frequency grid: ") + which + " axis not increasing");
        for (std::size_t k = 1; k < a.size(); ++k) {
            const double d = a[k] - a[k - 1];
            if (!(d > 0.0) || std::abs(d - step) > 1e-9 * step) {
                throw ConfigError(std::string("frequency grid: ") + which + " axis not uniform");
            }
        }
    };
    check(g.signal_axis, "signal");
    check(g.idler_axis, "idler");
}

inline FrequencyGrid make_grid(double signal_center, double idler_center, double signal_half_span,
                               double idler_half_span, std::size_t points) {
    if (points < 2) throw ConfigError("frequency grid: need at least 2 points per axis");
    FrequencyGrid g;
    g.signal_axis = uniform_axis(signal_center, signal_half_span, points);
    g.idler_axis = uniform_axis(idler_center, idler_half_span, points);
    g.signal_center = signal_center;
    g.idler_center = idler_center;
    return g;
}

/// Where an amplitude came from and what has been done to it.
struct JsaProvenance {
    std::string crystal_label;
    std::string model_note;
    double pair_delay_fs = 0.0;
    double signal_delay_fs = 0.0;
    double idler_delay_fs = 0.0;
    bool normalized = true;
};

/// Joint spectral amplitude sampled on a grid, row-major with the signal
/// index outermost: values[j * ni + k] ↔ (ω_s[j], ω_i[k]).
class JointSpectralAmplitude {
public:
    JointSpectralAmplitude() = default;
    JointSpectralAmplitude(std::shared_ptr<const FrequencyGrid> grid, std::vector<cplx> values,
                           JsaProvenance meta = {})
        : grid_(std::move(grid)), values_(std::move(values)), meta_(std::move(meta)) {
        if (!grid_) throw ConfigError("amplitude without a grid");
        if (values_.size() != grid_->ns() * grid_->ni()) {
            throw GridMismatchError("amplitude size does not match its grid");
        }
    }

    const FrequencyGrid& grid() const { return *grid_; }
    const std::shared_ptr<const FrequencyGrid>& grid_ptr() const { return grid_; }
    const std::vector<cplx>& values() const { return values_; }
    std::vector<cplx>& mutable_values() { return values_; }
    const JsaProvenance& meta() const { return meta_; }
    JsaProvenance& meta() { return meta_; }

    const cplx& at(std::size_t js, std::size_t ki) const { return values_[js * grid_->ni() + ki]; }

    bool shares_grid_with(const JointSpectralAmplitude& other) const {
        return grid_ == other.grid_ || (grid_ && other.grid_ && *grid_ == *other.grid_);
    }

private:
    std::shared_ptr<const FrequencyGrid> grid_;
    std::vector<cplx> values_;
    JsaProvenance meta_;
};

/// Σ|values|² Δω_s Δω_i, summed row by row in index order.
inline double norm_squared(const JointSpectralAmplitude& a) {
    const auto& g = a.grid();
    double total = 0.0;
    for (std::size_t j = 0; j < g.ns(); ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < g.ni(); ++k) row += std::norm(a.at(j, k));
        total += row;
    }
    return total * g.cell();
}

inline JointSpectralAmplitude scaled(JointSpectralAmplitude a, double factor) {
    for (auto& v : a.mutable_values()) v *= factor;
    if (factor != 1.0) a.meta().normalized = false;
    return a;
}

}  // namespace bellsim

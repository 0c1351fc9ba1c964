#pragma once

// Command implementations behind tools/bellsim.cpp. Each command returns the
// process exit status and writes plain-text artifacts next to --output.

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "bellsim/errors.hpp"
#include "bellsim/fitting.hpp"
#include "bellsim/polarization.hpp"
#include "bellsim/scenario.hpp"
#include "bellsim/scenario_io.hpp"

#ifndef BELLSIM_VERSION
#define BELLSIM_VERSION "0.0.0"
#endif

namespace bellsim::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kInfeasible = 4 };

struct RunManifest {
    std::string config_path;
    std::string command;
    std::vector<std::string> output_paths;
    std::optional<std::uint64_t> seed;
    std::string tool_version = BELLSIM_VERSION;
    std::string timestamp;
};

struct CommonOptions {
    std::string config_path;
    std::string output = "bellsim_out.csv";
    std::optional<std::uint64_t> seed;
    bool reference = false;
    bool noise = false;
};

/// Shortest round-trip decimal form, independent of locale.
inline std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string fmt(bool b) { return b ? "true" : "false"; }

class KeyValue {
public:
    void add(const std::string& k, const std::string& v) { out_ << k << '=' << v << '\n'; }
    void add(const std::string& k, const char* v) { add(k, std::string(v)); }
    void add(const std::string& k, double v) { add(k, fmt(v)); }
    void add(const std::string& k, bool v) { add(k, fmt(v)); }
    void add(const std::string& k, int v) { add(k, std::to_string(v)); }
    void add(const std::string& k, std::size_t v) { add(k, std::to_string(v)); }
    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

/// foo/bar.csv -> foo/bar.<suffix>
inline std::filesystem::path sidecar(const std::filesystem::path& output, const std::string& suffix) {
    auto p = output;
    p.replace_extension();
    p += "." + suffix;
    return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
    if (!f) throw ConfigError("write failed for " + path.string());
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void write_manifest(const std::filesystem::path& path, RunManifest m) {
    m.timestamp = utc_timestamp();
    KeyValue kv;
    kv.add("command", m.command);
    kv.add("config_path", m.config_path);
    std::string outs;
    for (const auto& o : m.output_paths) outs += (outs.empty() ? "" : ";") + o;
    kv.add("output_paths", outs);
    kv.add("seed", m.seed ? std::to_string(*m.seed) : std::string("none"));
    kv.add("tool_version", m.tool_version);
    kv.add("timestamp", m.timestamp);
    write_file(path, kv.str());
}

struct CsvData {
    std::vector<double> x;
    std::vector<double> y;
};

inline std::string csv(const std::string& header, const std::vector<double>& x, const std::vector<double>& y) {
    std::string s = header + "\n";
    for (std::size_t k = 0; k < x.size(); ++k) s += fmt(x[k]) + "," + fmt(y[k]) + "\n";
    return s;
}

/// Two numeric columns after one header row. Errors name the file line.
inline CsvData parse_csv(std::istream& in) {
    CsvData d;
    std::string line;
    std::size_t row = 0;
    bool header = false;
    auto number = [&](std::string_view f, std::size_t r) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        double v = 0.0;
        const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
            throw DataError("csv row " + std::to_string(r) + ": '" + std::string(f) + "' is not a number");
        }
        return v;
    };
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header) {
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw DataError("csv row " + std::to_string(row) + ": expected 2 comma-separated columns");
        }
        const std::string_view sv(line);
        d.x.push_back(number(sv.substr(0, comma), row));
        d.y.push_back(number(sv.substr(comma + 1), row));
    }
    if (!header) throw DataError("csv: empty file");
    if (d.x.empty()) throw DataError("csv: header present but no data rows");
    return d;
}

inline void add_fit(KeyValue& kv, const fitting::FitResult& f) {
    kv.add("fitted_visibility", f.visibility);
    kv.add("raw_visibility", f.raw_visibility);
    kv.add("period", f.period);
    kv.add("phase_rad", f.phase_rad);
    kv.add("offset", f.offset);
    kv.add("rms_residual", f.rms_residual);
    kv.add("converged", f.converged);
    kv.add("degenerate_period", f.degenerate);
    kv.add("iterations", f.iterations);
}

inline void add_config(KeyValue& kv, const scenario::SourceConfig& c, const scenario::TimingReport& t) {
    kv.add("scheme", c.scheme == scenario::Scheme::mzi ? "mzi" : "collinear");
    kv.add("duration_convention", c.duration_convention);
    kv.add("pump_sigma_t_fs", c.pump.sigma_t());
    kv.add("cross_dispersion_enabled", c.cross_dispersion_enabled);
    kv.add("pump_amplitude_ratio", c.pump_amplitude_ratio);
    kv.add("timing_signal_offset_fs", t.signal_offset_fs);
    kv.add("timing_idler_offset_fs", t.idler_offset_fs);
    kv.add("timing_required_fs", t.required_fs);
    kv.add("timing_residual_signal_fs", t.residual_signal_fs);
    kv.add("timing_residual_idler_fs", t.residual_idler_fs);
    kv.add("crystal_compensation_fs", t.crystal_compensation_fs);
    kv.add("compensator_sized_thickness_mm", t.sized_thickness_mm);
    std::string rec;
    for (const auto& r : c.reconstructed) rec += (rec.empty() ? "" : ";") + r;
    kv.add("reconstructed", rec.empty() ? std::string("none") : rec);
}

inline scenario::SourceConfig load(const CommonOptions& o) {
    if (o.config_path.empty()) throw ConfigError("--config is required");
    auto c = scenario::load_config(o.config_path);
    if (o.noise) c.noise.enabled = true;
    if (o.seed) c.noise.seed = *o.seed;
    return c;
}

inline RunManifest manifest_for(const CommonOptions& o, const std::string& command, const scenario::SourceConfig* c) {
    RunManifest m;
    m.config_path = o.config_path;
    m.command = command;
    if (c && c->noise.enabled) {
        m.seed = c->noise.seed;
    } else if (o.seed) {
        m.seed = o.seed;
    }
    return m;
}

struct ScanArgs {
    std::optional<std::string> axis;
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<int> steps;
};

inline int cmd_scan(const CommonOptions& o, const ScanArgs& a) {
    auto c = load(o);
    if (a.axis) c.scan.axis = scenario::parse_axis_kind(*a.axis);
    if (a.start) c.scan.start = *a.start;
    if (a.stop) c.scan.stop = *a.stop;
    if (a.steps) c.scan.steps = *a.steps;
    scenario::ScanOptions so;
    so.reference = o.reference;
    const auto s = scenario::scan(c, so);

    const std::filesystem::path out = o.output;
    const auto report = sidecar(out, "report.txt");
    auto m = manifest_for(o, "scan", &c);
    m.output_paths = {out.string(), report.string()};
    write_file(out, csv("axis_value,rate", s.axis, s.rates));

    KeyValue kv;
    kv.add("command", "scan");
    kv.add("axis", scenario::to_string(s.axis_kind));
    kv.add("axis_unit", s.axis_unit);
    kv.add("steps", s.axis.size());
    kv.add("grid_points", s.grid_points);
    kv.add("noise_enabled", c.noise.enabled);
    if (c.noise.enabled) kv.add("noise_mean_counts", c.noise.mean_counts);
    if (!s.signal_tilts_deg.empty()) {
        kv.add("signal_tilt_deg_first", s.signal_tilts_deg.front());
        kv.add("signal_tilt_deg_last", s.signal_tilts_deg.back());
        kv.add("idler_tilt_deg_first", s.idler_tilts_deg.front());
        kv.add("idler_tilt_deg_last", s.idler_tilts_deg.back());
    }
    add_config(kv, s.config, s.timing);
    int status = kOk;
    try {
        std::optional<std::vector<double>> var;
        if (c.noise.enabled) {
            var = fitting::poisson_variance(s.counts);
            for (auto& v : *var) v /= c.noise.mean_counts * c.noise.mean_counts;
        }
        const auto f = var ? fitting::fit_fringe(s.axis, s.rates, std::span<const double>(*var))
                           : fitting::fit_fringe(s.axis, s.rates);
        add_fit(kv, f);
    } catch (const DataError& e) {
        kv.add("fit_error", e.what());
        std::cerr << "bellsim: data error: " << e.what() << '\n';
        status = kData;
    }
    write_file(report, kv.str());
    write_manifest(sidecar(out, "manifest.txt"), m);
    return status;
}

enum class SweepParameter { crystal_length, filter_fwhm, compensation_error_fs, pump_ratio };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
    if (s == "crystal_length") return SweepParameter::crystal_length;
    if (s == "filter_fwhm") return SweepParameter::filter_fwhm;
    if (s == "compensation_error_fs") return SweepParameter::compensation_error_fs;
    if (s == "pump_ratio") return SweepParameter::pump_ratio;
    throw ConfigError("unknown sweep parameter '" + s + "'");
}

/// One sweep point; nullopt stands for "none" (filters off).
using SweepValue = std::optional<double>;

/// "a:b:n" for n evenly spaced values, or a comma list that may contain "none".
inline std::vector<SweepValue> parse_grid(const std::string& text) {
    auto num = [&](std::string_view f) {
        double v = 0.0;
        const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || r.ec != std::errc{} || r.ptr != f.data() + f.size() || !std::isfinite(v)) {
            throw ConfigError("sweep grid: '" + std::string(f) + "' is not a number");
        }
        return v;
    };
    std::vector<SweepValue> out;
    const std::string_view sv(text);
    if (sv.find(':') != std::string_view::npos) {
        const auto p1 = sv.find(':');
        const auto p2 = sv.find(':', p1 + 1);
        if (p2 == std::string_view::npos) throw ConfigError("sweep grid: expected start:stop:count");
        const double a = num(sv.substr(0, p1));
        const double b = num(sv.substr(p1 + 1, p2 - p1 - 1));
        const double n = num(sv.substr(p2 + 1));
        if (n < 1 || n != std::floor(n)) throw ConfigError("sweep grid: count must be a positive integer");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t k = 0; k < count; ++k) {
            out.emplace_back(count == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
        }
    } else {
        std::size_t pos = 0;
        while (pos <= sv.size()) {
            const auto next = std::min(sv.find(',', pos), sv.size());
            const auto f = sv.substr(pos, next - pos);
            if (f == "none") {
                out.emplace_back(std::nullopt);
            } else {
                out.emplace_back(num(f));
            }
            pos = next + 1;
        }
    }
    if (out.empty()) throw ConfigError("sweep grid is empty");
    return out;
}

inline scenario::SourceConfig apply_sweep(scenario::SourceConfig c, SweepParameter p, SweepValue v) {
    if (!v && p != SweepParameter::filter_fwhm) throw ConfigError("sweep grid: 'none' only applies to filter_fwhm");
    switch (p) {
        case SweepParameter::crystal_length:
            for (auto& cr : c.crystals) cr.element.thickness_mm = *v;
            c.compensator.auto_size = !c.compensator.elements.empty();
            break;
        case SweepParameter::filter_fwhm:
            for (auto& f : c.filters) {
                if (v) {
                    f.fwhm_nm = *v;
                    if (f.shape == spectral::FilterShape::none) f.shape = spectral::FilterShape::gaussian;
                } else {
                    f.shape = spectral::FilterShape::none;
                }
            }
            break;
        case SweepParameter::compensation_error_fs:
            c.compensator.error_fs = *v;
            break;
        case SweepParameter::pump_ratio:
            c.pump_amplitude_ratio = *v;
            break;
    }
    return c;
}

inline int cmd_sweep(const CommonOptions& o, const std::string& parameter, const std::string& grid) {
    const auto c = load(o);
    const auto p = parse_sweep_parameter(parameter);
    const auto values = parse_grid(grid);
    std::string text = "parameter_value,visibility\n";
    for (const auto& v : values) {
        const auto base = scenario::build_base(apply_sweep(c, p, v));
        text += (v ? fmt(*v) : std::string("none")) + "," + fmt(scenario::visibility(base)) + "\n";
    }
    const std::filesystem::path out = o.output;
    const auto report = sidecar(out, "report.txt");
    write_file(out, text);
    KeyValue kv;
    kv.add("command", "sweep");
    kv.add("parameter", parameter);
    kv.add("points", values.size());
    kv.add("visibility_source", "overlap");
    const auto [rc, rt] = scenario::resolve_timing(c);
    add_config(kv, rc, rt);
    write_file(report, kv.str());
    auto m = manifest_for(o, "sweep", &c);
    m.output_paths = {out.string(), report.string()};
    write_manifest(sidecar(out, "manifest.txt"), m);
    return kOk;
}

inline int cmd_fit(const CommonOptions& o, const std::string& input) {
    std::ifstream f(input, std::ios::binary);
    if (!f) throw DataError("cannot read " + input);
    const auto d = parse_csv(f);
    const auto r = fitting::fit_fringe(d.x, d.y);
    KeyValue kv;
    kv.add("command", "fit");
    kv.add("input", input);
    kv.add("rows", d.x.size());
    add_fit(kv, r);
    const std::filesystem::path out = o.output;
    write_file(out, kv.str());
    auto m = manifest_for(o, "fit", nullptr);
    m.config_path = input;
    m.output_paths = {out.string()};
    write_manifest(sidecar(out, "manifest.txt"), m);
    return kOk;
}

inline polarization::StateKind parse_target(const std::string& t) {
    if (t == "phi+") return polarization::StateKind::phi_plus;
    if (t == "phi-") return polarization::StateKind::phi_minus;
    if (t == "psi+") return polarization::StateKind::psi_plus;
    if (t == "psi-") return polarization::StateKind::psi_minus;
    throw ConfigError("unknown target '" + t + "' (phi+, phi-, psi+, psi-)");
}

struct Preparation {
    scenario::PreparedKnobs knobs;
    polarization::PolarizationState state;
    double fidelity_pure = 0.0;
    double fidelity = 0.0;
    bool hwp_inserted = false;
};

/// Φ± from the pump knob; Ψ± by adding the half-wave plate on one output port.
inline Preparation prepare(const scenario::SourceConfig& c, polarization::StateKind target) {
    using polarization::StateKind;
    const bool psi = target == StateKind::psi_plus || target == StateKind::psi_minus;
    const bool minus = target == StateKind::phi_minus || target == StateKind::psi_minus;
    Preparation p;
    p.knobs = scenario::prepare_bell(c, minus ? scenario::BellTarget::phi_minus : scenario::BellTarget::phi_plus);
    const auto eff = scenario::effective_polarization_state(c, p.knobs.knobs);
    p.state = eff.state;
    if (psi) {
        p.state = polarization::half_wave_plate(p.state, c.hwp.port, c.hwp.axis_deg);
        p.hwp_inserted = true;
    }
    const auto goal = polarization::make_state(target);
    p.fidelity_pure = polarization::fidelity(p.state, goal);
    p.fidelity = polarization::fidelity_with_coherence(p.state, eff.visibility, goal);
    return p;
}

inline int cmd_prepare(const CommonOptions& o, const std::string& target) {
    const auto c = load(o);
    const auto kind = parse_target(target);
    const auto p = prepare(c, kind);
    KeyValue kv;
    kv.add("command", "prepare");
    kv.add("target", target);
    kv.add("pump_delta_x_nm", p.knobs.knobs.pump_delta_x_nm);
    kv.add("signal_tilt_deg", p.knobs.knobs.signal_tilt_deg);
    kv.add("idler_tilt_deg", p.knobs.knobs.idler_tilt_deg);
    kv.add("hwp_inserted", p.hwp_inserted);
    if (p.hwp_inserted) {
        kv.add("hwp_port", c.hwp.port);
        kv.add("hwp_axis_deg", c.hwp.axis_deg);
    }
    kv.add("visibility", p.knobs.visibility);
    kv.add("rate", p.knobs.rate);
    kv.add("fidelity", p.fidelity);
    kv.add("fidelity_pure_state", p.fidelity_pure);
    const auto [rc, rt] = scenario::resolve_timing(c);
    add_config(kv, rc, rt);
    const std::filesystem::path out = o.output;
    write_file(out, kv.str());
    auto m = manifest_for(o, "prepare", &c);
    m.output_paths = {out.string()};
    write_manifest(sidecar(out, "manifest.txt"), m);
    return kOk;
}

/// Maps library exceptions to exit codes with a one-line diagnostic.
template <class F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::cerr << "bellsim: config error: " << e.what() << '\n';
        return kConfig;
    } catch (const RangeError& e) {
        std::cerr << "bellsim: config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "bellsim: data error: " << e.what() << '\n';
        return kData;
    } catch (const InfeasibleError& e) {
        std::cerr << "bellsim: infeasible: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "bellsim: config error: " << e.what() << '\n';
        return kConfig;
    }
}

}  // namespace bellsim::cli

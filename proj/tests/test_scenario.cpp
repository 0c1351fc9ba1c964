#include <gtest/gtest.h>

#include <cmath>

#include "bellsim/fitting.hpp"
#include "bellsim/scenario.hpp"
#include "support.hpp"

using namespace bellsim;
using namespace bellsim::scenario;
using testing_support::default_config;

namespace {

SourceConfig uncompensated() {
    auto c = default_config();
    c.compensator.elements.clear();
    c.compensator.auto_size = false;
    return c;
}

SourceConfig no_filters() {
    auto c = default_config();
    c.filters[0].shape = spectral::FilterShape::none;
    c.filters[1].shape = spectral::FilterShape::none;
    return c;
}

fitting::FitResult fit(const FringeScan& s) { return fitting::fit_fringe(s.axis, s.rates); }

FringeScan run(const SourceConfig& c, AxisKind k, double start, double stop, int steps = 128) {
    return scan(c, k, start, stop, steps, c.analyzers, ScanOptions{true, 1});
}

}  // namespace

TEST(Config, DefaultLoadsAndFlagsReconstructedValues) {
    const auto c = default_config();
    EXPECT_EQ(c.scheme, Scheme::collinear);
    EXPECT_EQ(c.crystals[0].element.axis, AxisOrientation::horizontal);
    EXPECT_EQ(c.crystals[1].element.axis, AxisOrientation::vertical);
    EXPECT_FALSE(c.reconstructed.empty());
    EXPECT_FALSE(c.cross_dispersion_enabled);
    EXPECT_EQ(c.duration_convention, "intensity_fwhm");
}

TEST(Config, RejectsParallelCrystals) {
    auto c = default_config();
    c.crystals[1].element.axis = AxisOrientation::horizontal;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Config, RejectsBadDocument) {
    auto doc = scenario::read_json_file(testing_support::default_config_path());
    const auto dir = std::filesystem::path(testing_support::default_config_path()).parent_path();
    auto bad = doc;
    bad["scheme"] = "sagnac";
    EXPECT_THROW(parse_config(bad, dir), ConfigError);
    bad = doc;
    bad["crystals"].erase(1);
    EXPECT_THROW(parse_config(bad, dir), ConfigError);
    bad = doc;
    bad["pump"]["duration_fs"] = -1.0;
    EXPECT_THROW(parse_config(bad, dir), ConfigError);
    bad = doc;
    bad["crystals"][0]["material"] = "unobtainium";
    EXPECT_THROW(parse_config(bad, dir), ConfigError);
    bad = doc;
    bad["scan"]["axis"] = "mirror_tilt";
    EXPECT_THROW(parse_config(bad, dir), ConfigError);
}

TEST(Timing, CompensatorIsSizedToRequiredDelay) {
    const auto [c, t] = resolve_timing(default_config());
    EXPECT_NEAR(t.required_fs, 1460.825, 0.01);
    EXPECT_GE(t.crystal_compensation_fs, 1050.0);
    EXPECT_LE(t.crystal_compensation_fs, 1950.0);
    EXPECT_GT(t.sized_thickness_mm, 0.0);
    EXPECT_NEAR(0.5 * (t.residual_signal_fs + t.residual_idler_fs), 0.0, 1e-9);
    EXPECT_NEAR(c.compensator.elements[0].thickness_mm, t.sized_thickness_mm, 0.0);
}

TEST(Timing, VerticalQuartzAxesCannotCompensate) {
    auto c = default_config();
    for (auto& el : c.compensator.elements) el.axis = AxisOrientation::vertical;
    EXPECT_THROW(resolve_timing(c), ConfigError);
}

TEST(BuildAmplitudes, PerfectCompensationOverlaps) {
    const auto pair = build_amplitudes(default_config(), {});
    EXPECT_GT(std::abs(biphoton::overlap(pair.amp_a, pair.amp_b)), 0.999);
}

TEST(BuildAmplitudes, NoCompensatorDistinguishable) {
    const auto pair = build_amplitudes(uncompensated(), {});
    EXPECT_LT(std::abs(biphoton::overlap(pair.amp_a, pair.amp_b)), 0.05);
}

TEST(BuildAmplitudes, ZeroPumpRatioKillsInterference) {
    auto c = default_config();
    c.pump_amplitude_ratio = 0.0;
    const auto pair = build_amplitudes(c, {});
    EXPECT_EQ(norm_squared(pair.amp_b), 0.0);
    EXPECT_EQ(biphoton::coincidence_rate(pair).visibility_bound, 0.0);
}

TEST(BuildAmplitudes, PumpKnobIsPumpWavenumberPhase) {
    PhaseKnobs k;
    k.pump_delta_x_nm = 123.0;
    const auto pair = build_amplitudes(default_config(), k);
    EXPECT_NEAR(pair.relative_phase_rad, kTwoPi * 123.0 / 400.0, 1e-12);
}

TEST(BuildAmplitudes, FiltersOffStillCoherent) {
    EXPECT_GT(visibility(build_base(no_filters())), 0.99);
}

TEST(BuildAmplitudes, MziMatchesCollinearWithoutCrossDispersion) {
    auto mzi = default_config();
    mzi.scheme = Scheme::mzi;
    mzi.compensator.elements.clear();
    mzi.compensator.auto_size = false;
    auto col = default_config();
    col.compensator.error_fs = 120.0;
    mzi.compensator.error_fs = 120.0;
    EXPECT_NEAR(visibility(build_base(mzi)), visibility(build_base(col)), 1e-6);
}

TEST(BuildAmplitudes, MziPostCompensationVariant) {
    auto mzi = default_config();
    mzi.scheme = Scheme::mzi;
    mzi.mzi_arm_imbalance_fs = 400.0;
    mzi.compensator.stage = CompensationStage::post;
    mzi.compensator.elements.resize(1);
    mzi.compensator.elements[0].axis = AxisOrientation::vertical;
    const auto base = build_base(mzi);
    EXPECT_GT(base.timing.sized_thickness_mm, 0.0);
    EXPECT_GT(visibility(base), 0.99);
    auto col = default_config();
    col.compensator.stage = CompensationStage::post;
    EXPECT_THROW(build_base(col), ConfigError);
}

TEST(BuildAmplitudes, CompensationErrorReducesVisibilityMonotonically) {
    double prev = 1.1;
    for (double e : {0.0, 100.0, 300.0, 1000.0, 3000.0}) {
        auto c = no_filters();
        c.compensator.error_fs = e;
        const double v = visibility(build_base(c));
        EXPECT_LT(v, prev) << e;
        prev = v;
    }
    EXPECT_LT(prev, 0.01);
}

TEST(BuildAmplitudes, GridRefinementStability) {
    auto c = default_config();
    c.compensator.error_fs = 80.0;
    c.grid.points = 128;
    const double coarse = visibility(build_base(c));
    c.grid.points = 256;
    const double fine = visibility(build_base(c));
    EXPECT_LT(std::abs(coarse - fine), 1e-4);
    EXPECT_LT(coarse, 0.99);
}

TEST(CrossDispersion, OffLeavesVisibilityUnchangedAndNarrowFiltersHideIt) {
    auto c = default_config();
    c.cross_dispersion_enabled = false;
    const double off = visibility(build_base(c));
    EXPECT_GT(off, 0.999);
    for (double fwhm : {0.5, 1.0}) {
        c.filters[0].fwhm_nm = c.filters[1].fwhm_nm = fwhm;
        c.cross_dispersion_enabled = false;
        const double v0 = visibility(build_base(c));
        c.cross_dispersion_enabled = true;
        const double v1 = visibility(build_base(c));
        EXPECT_LT(std::abs(v0 - v1), 0.02) << fwhm;
    }
}

TEST(CrossDispersion, DifferentialDelayIsHalfTheSignalIdlerOffsetGap) {
    const auto [c, t] = resolve_timing(default_config());
    // Signal and idler cross the second crystal as e-waves with different group velocities.
    EXPECT_NEAR(t.idler_offset_fs - t.signal_offset_fs, 103.57, 0.05);
}

TEST(Scan, PumpDelayPeriodIsPumpWavelength) {
    const auto c = default_config();
    const auto s = run(c, AxisKind::pump_delay, 0.0, 1600.0);
    EXPECT_NEAR(fit(s).period / 400.0, 1.0, 0.005);
    EXPECT_GT(fit(s).visibility, 0.999);
}

TEST(Scan, SignalAndIdlerPeriods) {
    const auto c = default_config();
    const auto sig = run(c, AxisKind::signal_tilt, 0.0, 4 * 730.0);
    const auto idl = run(c, AxisKind::idler_tilt, 0.0, 4 * 885.0);
    EXPECT_NEAR(fit(sig).period / 730.0, 1.0, 0.005);
    EXPECT_NEAR(fit(idl).period / 885.0, 1.0, 0.005);
    EXPECT_EQ(sig.signal_tilts_deg.size(), sig.axis.size());
    EXPECT_GT(sig.signal_tilts_deg.back(), 0.0);
    EXPECT_EQ(sig.idler_tilts_deg.back(), 0.0);
}

TEST(Scan, BothTiltsFollowPumpWavelength) {
    const auto s = run(default_config(), AxisKind::both_tilts, 0.0, 1600.0);
    EXPECT_NEAR(fit(s).period / 400.0, 1.0, 0.005);
}

TEST(Scan, CommonDelayOnBothArmsFollowsPumpWavelength) {
    const auto base = build_base(default_config());
    std::vector<double> x;
    std::vector<double> r;
    for (int k = 0; k < 96; ++k) {
        const double path = 1600.0 * k / 95.0;
        auto pair = base.pair;
        pair.amp_a = biphoton::apply_pair_delay(pair.amp_a, path / kSpeedOfLightNmPerFs);
        x.push_back(path);
        r.push_back(biphoton::coincidence_rate(pair).rate);
    }
    EXPECT_NEAR(fitting::fit_fringe(x, r).period / 400.0, 1.0, 0.005);
}

TEST(Scan, AnalyzerFollowsCosineSquared) {
    const auto c = default_config();
    const auto s = run(c, AxisKind::analyzer2_angle, 0.0, 180.0, 91);
    double mx = 0.0;
    double mn = 1e9;
    for (std::size_t k = 0; k < s.axis.size(); ++k) {
        const double expect = 2.0 * std::pow(std::cos(deg_to_rad(45.0 - s.axis[k])), 2);
        EXPECT_NEAR(s.rates[k], expect, 1e-3);
        mx = std::max(mx, s.rates[k]);
        mn = std::min(mn, s.rates[k]);
    }
    EXPECT_GT((mx - mn) / (mx + mn), 0.999);
    EXPECT_EQ(s.axis_unit, "deg");
}

TEST(Scan, PhasesAddUpAtPreparedKnobs) {
    auto c = default_config();
    c.knobs = prepare_bell(c, BellTarget::phi_plus).knobs;
    const double phi_p = fit(run(c, AxisKind::pump_delay, 0.0, 800.0, 64)).phase_rad;
    const double phi_s = fit(run(c, AxisKind::signal_tilt, 0.0, 2 * 730.0, 64)).phase_rad;
    const double phi_i = fit(run(c, AxisKind::idler_tilt, 0.0, 2 * 885.0, 64)).phase_rad;
    EXPECT_LT(std::abs(fitting::wrap_phase(phi_p + phi_s + phi_i)), 1e-3);
    // Away from the prepared point each arm fringe runs opposite to the pump fringe.
    c.knobs.pump_delta_x_nm += 70.0;
    const double q_p = fit(run(c, AxisKind::pump_delay, 0.0, 800.0, 64)).phase_rad;
    const double q_s = fit(run(c, AxisKind::signal_tilt, 0.0, 2 * 730.0, 64)).phase_rad;
    EXPECT_LT(std::abs(fitting::wrap_phase(q_p + q_s)), 1e-3);
}

TEST(Scan, ReferenceModeIsBitIdenticalAndMatchesThreads) {
    const auto c = default_config();
    const auto a = run(c, AxisKind::signal_tilt, 0.0, 1460.0, 48);
    const auto b = run(c, AxisKind::signal_tilt, 0.0, 1460.0, 48);
    const auto t = scan(c, AxisKind::signal_tilt, 0.0, 1460.0, 48, c.analyzers, ScanOptions{false, 4});
    EXPECT_EQ(a.rates, b.rates);
    EXPECT_EQ(a.rates, t.rates);
    EXPECT_EQ(a.axis, t.axis);
}

TEST(Scan, InvalidRequests) {
    const auto c = default_config();
    EXPECT_THROW(run(c, AxisKind::pump_delay, 10.0, 10.0), ConfigError);
    EXPECT_THROW(run(c, AxisKind::pump_delay, 0.0, 100.0, 1), ConfigError);
    EXPECT_THROW(run(c, AxisKind::signal_tilt, 0.0, 1e6), ConfigError);
    EXPECT_THROW(run(c, AxisKind::idler_tilt, -100.0, 100.0), ConfigError);
    EXPECT_THROW(parse_axis_kind("mirror"), ConfigError);
}

TEST(Scan, SeededNoiseIsReproducible) {
    auto c = default_config();
    c.noise.enabled = true;
    c.noise.seed = 99;
    const auto a = run(c, AxisKind::pump_delay, 0.0, 1600.0);
    const auto b = run(c, AxisKind::pump_delay, 0.0, 1600.0);
    EXPECT_EQ(a.counts, b.counts);
    ASSERT_EQ(a.counts.size(), a.axis.size());
    for (double r : a.rates) EXPECT_GE(r, 0.0);
    const auto f = fit(a);
    EXPECT_NEAR(f.visibility, 1.0, 0.03);
}

TEST(Prepare, PhiPlusSitsAtFringeMaximum) {
    const auto c = default_config();
    const auto p = prepare_bell(c, BellTarget::phi_plus);
    const auto s = run(c, AxisKind::pump_delay, 0.0, 800.0, 256);
    const double mx = *std::max_element(s.rates.begin(), s.rates.end());
    EXPECT_GE(p.rate, mx - 1e-6);
    EXPECT_NEAR(p.rate, 1.0 + p.visibility, 1e-9);
}

TEST(Prepare, PhiMinusSitsAtFringeMinimum) {
    const auto c = default_config();
    const auto p = prepare_bell(c, BellTarget::phi_minus);
    const auto s = run(c, AxisKind::pump_delay, 0.0, 800.0, 256);
    const double mn = *std::min_element(s.rates.begin(), s.rates.end());
    EXPECT_LE(p.rate, mn + 1e-6);
    EXPECT_LT(p.rate, 1e-6);
}

TEST(Prepare, FidelityWithCoherence) {
    const auto c = default_config();
    const auto p = prepare_bell(c, BellTarget::phi_plus);
    const auto e = effective_polarization_state(c, p.knobs);
    const double f = polarization::fidelity_with_coherence(e.state, e.visibility,
                                                            polarization::make_state(polarization::StateKind::phi_plus));
    EXPECT_GT(f, 0.999);
}

TEST(Prepare, UncompensatedIsInfeasible) {
    EXPECT_THROW(prepare_bell(uncompensated(), BellTarget::phi_plus), InfeasibleError);
}

TEST(EffectiveState, IdealIsPhiPlus) {
    const auto e = effective_polarization_state(default_config(), {});
    EXPECT_GT(e.visibility, 0.999);
    EXPECT_GT(polarization::fidelity(e.state, polarization::make_state(polarization::StateKind::phi_plus)), 0.999);
    EXPECT_EQ(e.label, "coherent");
}

TEST(EffectiveState, UncompensatedIsIncoherent) {
    const auto e = effective_polarization_state(uncompensated(), {});
    EXPECT_LT(e.visibility, 0.05);
    EXPECT_EQ(e.label, "incoherent-mixture-equivalent");
}

TEST(EffectiveState, PumpRatioTwo) {
    auto c = default_config();
    c.pump_amplitude_ratio = 2.0;
    const auto e = effective_polarization_state(c, {});
    EXPECT_NEAR(std::abs(e.state.c[polarization::HH]), 2.0 / std::sqrt(5.0), 1e-9);
    EXPECT_NEAR(std::abs(e.state.c[polarization::VV]), 1.0 / std::sqrt(5.0), 1e-9);
    EXPECT_NEAR(std::abs(e.state.c[polarization::HV]), 0.0, 1e-15);
    const auto target = polarization::make_state(polarization::StateKind::custom, -e.phase_rad, 2.0);
    EXPECT_NEAR(polarization::fidelity(e.state, target), 1.0, 1e-12);
}

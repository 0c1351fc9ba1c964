#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bellsim/biphoton.hpp"
#include "bellsim/fitting.hpp"
#include "bellsim/spectral.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace bellsim;
using namespace bellsim::biphoton;

namespace {

spectral::PumpPulse pump() {
    spectral::PumpPulse p;
    p.center_wavelength_nm = 400;
    p.duration_fs = 80;
    return p;
}

spectral::PhaseMatchingSpec spec(double length = 3.4,
                                 spectral::PhaseMatchingShape shape = spectral::PhaseMatchingShape::sinc) {
    const auto& m = testing_support::bbo();
    const double th = dispersion::type1_phase_matching_angle(m, 400, 730, 885);
    spectral::PhaseMatchingSpec s;
    s.crystal_length_mm = length;
    s.pump_center_nm = 400;
    s.signal_center_nm = 730;
    s.idler_center_nm = 885;
    s.inverse_group_velocity_pump_fs_per_mm = dispersion::inverse_group_velocity(m, dispersion::Pol::e, 400, th);
    s.inverse_group_velocity_signal_fs_per_mm = dispersion::inverse_group_velocity(m, dispersion::Pol::o, 730);
    s.inverse_group_velocity_idler_fs_per_mm = dispersion::inverse_group_velocity(m, dispersion::Pol::o, 885);
    s.shape = shape;
    return s;
}

JointSpectralAmplitude make_jsa(std::size_t points = 128, double filter_nm = 0.0, double length = 3.4,
                                spectral::PhaseMatchingShape shape = spectral::PhaseMatchingShape::sinc) {
    const auto p = pump();
    const auto s = spec(length, shape);
    spectral::SpectralFilter fs;
    spectral::SpectralFilter fi;
    if (filter_nm > 0) {
        fs = {730, filter_nm, spectral::FilterShape::gaussian};
        fi = {885, filter_nm, spectral::FilterShape::gaussian};
    }
    spectral::GridSettings g;
    g.points = points;
    auto grid = std::make_shared<const FrequencyGrid>(spectral::auto_grid(p, s, fs, fi, g));
    return spectral::build_jsa(p, s, fs, fi, grid);
}

cplx direct_inner(const JointSpectralAmplitude& a, const JointSpectralAmplitude& b) {
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < a.values().size(); ++k) acc += std::conj(a.values()[k]) * b.values()[k];
    return acc * a.grid().cell();
}

}  // namespace

TEST(PairDelay, ZeroIsIdentity) {
    const auto a = make_jsa();
    const auto b = apply_pair_delay(a, 0.0);
    EXPECT_EQ(a.values(), b.values());
}

TEST(PairDelay, PreservesNorm) {
    const auto a = make_jsa();
    for (double t : {-500.0, 0.37, 123.0, 1800.0}) {
        EXPECT_NEAR(norm_squared(apply_pair_delay(a, t)), norm_squared(a), 1e-12);
        EXPECT_NEAR(norm_squared(apply_single_arm_delay(a, Arm::idler, t)), norm_squared(a), 1e-12);
    }
}

TEST(PairDelay, MultipliesByAbsoluteFrequencyPhase) {
    const auto a = make_jsa(64);
    const double t = 17.3;
    const auto b = apply_pair_delay(a, t);
    const auto& g = a.grid();
    for (std::size_t j = 0; j < g.ns(); j += 7) {
        for (std::size_t k = 0; k < g.ni(); k += 5) {
            const cplx expect = a.at(j, k) * std::polar(1.0, (g.signal_axis[j] + g.idler_axis[k]) * t);
            EXPECT_NEAR(std::abs(b.at(j, k) - expect), 0.0, 1e-12 * std::abs(a.at(32, 32)));
        }
    }
    EXPECT_EQ(b.meta().pair_delay_fs, t);
}

TEST(PairDelay, HalfPumpCycleFlipsSign) {
    const auto a = make_jsa(128, 0.1);
    const double t = kPi / wavelength_to_omega(400.0);
    const auto b = apply_pair_delay(a, t);
    const cplx ov = overlap(a, b);
    const cplx ref = direct_inner(a, b);
    EXPECT_NEAR(ov.real(), ref.real(), 1e-6);
    EXPECT_NEAR(ov.imag(), ref.imag(), 1e-6);
    EXPECT_LT(ov.real(), -0.999);
}

TEST(SingleArmDelay, ZeroIsIdentity) {
    const auto a = make_jsa();
    EXPECT_EQ(apply_single_arm_delay(a, Arm::signal, 0.0).values(), a.values());
}

TEST(SingleArmDelay, SignalThenIdlerEqualsPairDelay) {
    const auto a = make_jsa(64);
    const double t = 42.0;
    const auto both = apply_single_arm_delay(apply_single_arm_delay(a, Arm::signal, t), Arm::idler, t);
    const auto pair = apply_pair_delay(a, t);
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        EXPECT_NEAR(std::abs(both.values()[k] - pair.values()[k]), 0.0, 1e-13);
    }
}

TEST(SingleArmDelay, IdlerSweepFringePeriodIsIdlerWavelength) {
    const auto a = make_jsa(128, 10.0);
    std::vector<double> x;
    std::vector<double> rate;
    for (int k = 0; k < 128; ++k) {
        const double path_nm = 4.0 * 885.0 * k / 127.0;
        AmplitudePair p{a, apply_single_arm_delay(a, Arm::idler, path_nm / kSpeedOfLightNmPerFs), 0.0};
        x.push_back(path_nm);
        rate.push_back(coincidence_rate(p).rate);
    }
    const auto fit = fitting::fit_fringe(x, rate);
    EXPECT_NEAR(fit.period / 885.0, 1.0, 0.005);
}

TEST(Overlap, SelfIsOne) {
    const auto a = make_jsa();
    const cplx ov = overlap(a, a);
    EXPECT_NEAR(ov.real(), 1.0, 1e-12);
    EXPECT_NEAR(ov.imag(), 0.0, 1e-12);
}

TEST(Overlap, DisjointAmplitudesAreOrthogonal) {
    const auto a = make_jsa(256);
    EXPECT_LT(std::abs(overlap(a, apply_pair_delay(a, 2000.0))), 1e-3);
}

TEST(Overlap, GaussianModelMatchesClosedForm) {
    const auto a = make_jsa(256, 0.0, 3.4, spectral::PhaseMatchingShape::gaussian);
    const double s = pump().sigma_omega();
    for (double t : {0.0, 20.0, 50.0, 80.0, 120.0, 200.0}) {
        const double expect = std::exp(-t * t * s * s / 2.0);
        EXPECT_NEAR(std::abs(overlap(a, apply_pair_delay(a, t))), expect, 1e-4) << t;
    }
}

TEST(Overlap, GridMismatchIsStructuralError) {
    const auto a = make_jsa(64);
    const auto b = make_jsa(65);
    EXPECT_THROW(overlap(a, b), GridMismatchError);
    EXPECT_THROW(coincidence_rate(AmplitudePair{a, b, 0.0}), GridMismatchError);
}

TEST(CoincidenceRate, ConstructiveAndDestructive) {
    const auto a = make_jsa();
    EXPECT_NEAR(coincidence_rate(AmplitudePair{a, a, 0.0}).rate, 2.0, 1e-12);
    EXPECT_NEAR(coincidence_rate(AmplitudePair{a, a, kPi}).rate, 0.0, 1e-9);
    EXPECT_NEAR(coincidence_rate(AmplitudePair{a, a, 0.0}).visibility_bound, 1.0, 1e-12);
}

TEST(CoincidenceRate, DisjointIsIncoherentSum) {
    const auto a = make_jsa(256);
    const auto b = apply_pair_delay(a, 2000.0);
    for (double phi : {0.0, 1.0, kPi}) {
        EXPECT_NEAR(coincidence_rate(AmplitudePair{a, b, phi}).rate, 1.0, 1e-3);
    }
}

TEST(CoincidenceRate, CompensatedVersusThreePicosecondMismatch) {
    // Narrow filters keep the 64-point grid's time window wide enough for 3 ps.
    const auto a = make_jsa(64, 2.0);
    const AmplitudePair matched{a, a, 0.0};
    const AmplitudePair mismatched{a, apply_pair_delay(a, 3000.0), 0.0};
    const double v_matched = coincidence_rate(matched).visibility_bound;
    const double v_mismatched = coincidence_rate(mismatched).visibility_bound;
    EXPECT_GT(v_matched, 0.999);
    EXPECT_LT(v_mismatched, 0.01);
    EXPECT_NEAR(oracle::time_domain_visibility(matched), v_matched, 1e-6);
    EXPECT_NEAR(oracle::time_domain_visibility(mismatched), v_mismatched, 1e-6);
}

TEST(CoincidenceRate, ParsevalAgainstTimeDomain) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = make_jsa(64, 3.0 + 10.0 * u(rng), 1.0 + 3.0 * u(rng));
        const auto b = apply_single_arm_delay(apply_pair_delay(a, 300.0 * u(rng)), Arm::signal, 50.0 * u(rng));
        const AmplitudePair p{a, scaled(b, 0.5 + u(rng)), kTwoPi * u(rng)};
        const ArmWeights w{2.0 * u(rng), 2.0 * u(rng)};
        const double f = coincidence_rate(p, w).rate;
        EXPECT_NEAR(oracle::time_domain_rate(p, w), f, 1e-6 * f);
    }
}

TEST(CoincidenceRate, FringeLawMatchesOverlap) {
    const auto a = make_jsa(128, 10.0);
    const auto b = apply_single_arm_delay(apply_pair_delay(a, 60.0), Arm::idler, 25.0);
    const double v = std::abs(overlap(a, b));
    std::vector<double> phi;
    std::vector<double> rate;
    for (int k = 0; k < 64; ++k) {
        phi.push_back(kTwoPi * k / 64.0);
        rate.push_back(coincidence_rate(AmplitudePair{a, b, phi.back()}).rate);
    }
    // Linear least squares at the known unit frequency.
    Eigen::MatrixXd m(64, 3);
    Eigen::VectorXd y(64);
    for (int k = 0; k < 64; ++k) {
        m(k, 0) = 1.0;
        m(k, 1) = std::cos(phi[k]);
        m(k, 2) = std::sin(phi[k]);
        y(k) = rate[k];
    }
    const Eigen::Vector3d c = m.colPivHouseholderQr().solve(y);
    const double resid = std::sqrt((m * c - y).squaredNorm() / 64.0);
    EXPECT_LT(resid, 1e-6);
    EXPECT_NEAR(c(0), 1.0, 1e-6);
    EXPECT_NEAR(std::hypot(c(1), c(2)), v, 1e-6);
}

TEST(CoincidenceRate, VisibilityBoundInUnitInterval) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    auto grid = std::make_shared<const FrequencyGrid>(make_grid(2.58, 2.13, 0.05, 0.05, 16));
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<cplx> va(256);
        std::vector<cplx> vb(256);
        for (auto& v : va) v = {nd(rng), nd(rng)};
        for (auto& v : vb) v = {nd(rng), nd(rng)};
        const JointSpectralAmplitude a(grid, va);
        const JointSpectralAmplitude b(grid, vb);
        const double vis = coincidence_rate(AmplitudePair{a, b, 0.0}).visibility_bound;
        EXPECT_GE(vis, 0.0);
        EXPECT_LE(vis, 1.0);
        EXPECT_GE(coincidence_rate(AmplitudePair{a, b, nd(rng)}).rate, 0.0);
        auto global = va;
        for (auto& v : global) v *= std::polar(1.0, 0.7);
        const JointSpectralAmplitude g(grid, global);
        EXPECT_NEAR(coincidence_rate(AmplitudePair{a, g, 0.0}).visibility_bound, 1.0, 1e-12);
    }
}

TEST(CoincidenceRate, ZeroSecondAmplitudeGivesNoVisibility) {
    const auto a = make_jsa();
    const auto r = coincidence_rate(AmplitudePair{a, scaled(a, 0.0), 0.3});
    EXPECT_EQ(r.visibility_bound, 0.0);
    EXPECT_NEAR(r.rate, 1.0, 1e-12);
}

TEST(PhaseOperations, PreserveNorm) {
    const auto a = make_jsa();
    const auto b = apply_dispersive_arm_delay(a, Arm::signal, 13.0, 14.5);
    const auto c = apply_spectral_phase(a, 0.3, -200.0, 1.1, 80.0);
    EXPECT_NEAR(norm_squared(b), 1.0, 1e-12);
    EXPECT_NEAR(norm_squared(c), 1.0, 1e-12);
}

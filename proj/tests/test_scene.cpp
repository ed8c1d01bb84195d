#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "isac_coop/errors.hpp"
#include "isac_coop/rng.hpp"
#include "isac_coop/scene.hpp"

#include "oracles.hpp"

using namespace isac;

namespace {

OtfsParams table1_params() { return OtfsParams(96, 50, 1e6, 1e-6, 60e9, 16, 16, 1.0, 4e-20); }

OtfsParams small_params(int m = 16, int n = 8, int n_rx = 4) {
    return OtfsParams(m, n, 1e6, 1e-6, 60e9, 16, n_rx, 1.0, 4e-20);
}

} // namespace

TEST_CASE("to_local: origin, identity rotation, quarter turn") {
    const BsSite site(3.0, -2.0, 1.234, 1);
    const LocalPoint at_origin = to_local(3.0, -2.0, site);
    CHECK(at_origin.x == doctest::Approx(0.0));
    CHECK(at_origin.y == doctest::Approx(0.0));

    const BsSite plain(3.0, -2.0, 0.0, 1);
    const LocalPoint shifted = to_local(4.0, 0.0, plain);
    CHECK(shifted.x == doctest::Approx(1.0));
    CHECK(shifted.y == doctest::Approx(2.0));

    // quarter-turn case evaluated by hand: x_i = cos + sin, y_i = -sin + cos
    const BsSite rotated(0.0, 0.0, M_PI / 4.0, 1);
    const LocalPoint diag = to_local(1.0, 1.0, rotated);
    CHECK(diag.x == doctest::Approx(1.4142135623730951).epsilon(1e-12));
    CHECK(std::abs(diag.y) < 1e-12);
}

TEST_CASE("to_local round trip over random sites and points") {
    RandomStream stream(5u);
    for (int i = 0; i < 10000; ++i) {
        const BsSite site(200.0 * stream.next_uniform() - 100.0,
                          200.0 * stream.next_uniform() - 100.0,
                          2.0 * M_PI * stream.next_uniform(), 1);
        const double px = 200.0 * stream.next_uniform() - 100.0;
        const double py = 200.0 * stream.next_uniform() - 100.0;
        const LocalPoint local = to_local(px, py, site);
        double bx = 0.0, by = 0.0;
        to_common(local, site, bx, by);
        CHECK(std::abs(bx - px) < 1e-12 * std::max(1.0, std::abs(px)));
        CHECK(std::abs(by - py) < 1e-12 * std::max(1.0, std::abs(py)));
    }
}

TEST_CASE("to_polar: boresight, 3-4-5 triangle, symmetry and errors") {
    const PolarParams boresight = to_polar({kSpeedOfLight / 2.0, 0.0});
    CHECK(boresight.tau == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(boresight.phi == doctest::Approx(0.0));

    const PolarParams triangle = to_polar({3.0, 4.0});
    CHECK(triangle.tau == doctest::Approx(3.3356409519815205e-08).epsilon(1e-12));
    CHECK(triangle.phi == doctest::Approx(0.92729521800161219).epsilon(1e-12));

    const PolarParams mirrored = to_polar({1.0, -1.0});
    CHECK(mirrored.phi == doctest::Approx(-M_PI / 4.0).epsilon(1e-12));

    CHECK_THROWS_AS(to_polar({0.0, 0.0}), GeometryError);
    CHECK_THROWS_AS(to_polar({-1.0, 1.0}), GeometryError); // behind the array
    CHECK_THROWS_AS(to_polar({0.0, 2.0}), GeometryError);  // |phi| = pi/2
}

TEST_CASE("radial_params: doppler from the radial velocity component") {
    const OtfsParams p = table1_params();
    const BsSite site(0.0, 0.0, 0.0, 1);

    // motion perpendicular to the line of sight
    const TargetState crossing(10.0, 0.0, 0.0, 7.0, 1.0);
    CHECK(radial_params(crossing, site, p).f_d == doctest::Approx(0.0));

    // 10 m/s straight away, due east: f_D = 2 v f_c / c
    const TargetState receding(10.0, 0.0, 10.0, 0.0, 1.0);
    const RadialParams rp = radial_params(receding, site, p);
    CHECK(rp.f_d == doctest::Approx(4002.7691423778247).epsilon(1e-12));
    CHECK(rp.range == doctest::Approx(10.0));

    const TargetState still(10.0, 5.0, 0.0, 0.0, 1.0);
    CHECK(radial_params(still, site, p).f_d == doctest::Approx(0.0));

    // agrees with to_polar for a static target
    const PolarParams pol = to_polar(to_local(still.x, still.y, site));
    const RadialParams rp2 = radial_params(still, site, p);
    CHECK(rp2.tau == doctest::Approx(pol.tau).epsilon(1e-14));
    CHECK(rp2.phi == doctest::Approx(pol.phi).epsilon(1e-14));
}

TEST_CASE("link budget: radar equation value and r^-4 scaling") {
    // Independent evaluation of |alpha|^2 = G^2 sigma c^2 / ((4pi)^3 f_c^2 r^4)
    // at G = 1, sigma = 1 m^2, f_c = 60 GHz, r = 30 m.
    const double a = LinkBudget::alpha_mag_for(1.0, 1.0, 60e9, 30.0);
    CHECK(a * a == doctest::Approx(1.5531889571570023e-14).epsilon(1e-12));

    RandomStream stream(9u);
    for (int i = 0; i < 50; ++i) {
        const double r = 5.0 + 120.0 * stream.next_uniform();
        const double a1 = LinkBudget::alpha_mag_for(1.0, 1.0, 60e9, r);
        const double a2 = LinkBudget::alpha_mag_for(1.0, 1.0, 60e9, 2.0 * r);
        CHECK(a1 * a1 / (a2 * a2) == doctest::Approx(16.0).epsilon(1e-12));
    }
}

TEST_CASE("link budget: h composition") {
    const OtfsParams p = table1_params();
    const cplx gamma(0.8, -0.3);
    const double f_d = 4000.0, tau = 2e-7, phase = 1.1;
    const LinkBudget lb = LinkBudget::make(p, 1.0, 1.0, 30.0, gamma, f_d, tau, phase);
    const cplx expect = std::sqrt(p.avg_power()) * gamma *
                        (lb.alpha_mag * std::polar(1.0, phase)) *
                        std::polar(1.0, 2.0 * M_PI * f_d * tau);
    CHECK(std::abs(lb.h - expect) < 1e-14 * std::abs(expect));
}

TEST_CASE("sector beamformer: unit norm, matched narrow limit, gain bracket") {
    const OtfsParams p = table1_params();

    const Beamformer narrow = design_sector_beamformer(p, 0.0, 0.002);
    double norm_sq = 0.0;
    for (const cplx& w : narrow.weights) norm_sq += std::norm(w);
    CHECK(std::abs(norm_sq - 1.0) < 1e-12);
    // narrow sector converges to the matched steering vector: gain -> N_T
    CHECK(std::norm(narrow.gain_at(0.0)) == doctest::Approx(16.0).epsilon(1e-3));

    const Beamformer sector = design_sector_beamformer(p, 0.0, 40.0 * M_PI / 180.0);
    double norm_sq2 = 0.0;
    for (const cplx& w : sector.weights) norm_sq2 += std::norm(w);
    CHECK(std::abs(norm_sq2 - 1.0) < 1e-12);
    const double mean_db = 10.0 * std::log10(sector.mean_gain);
    CHECK(mean_db > 3.1);
    CHECK(mean_db < 5.1);
    CHECK(sector.min_gain > 0.0);
    CHECK(sector.max_gain >= sector.mean_gain);

    CHECK_THROWS_AS(design_sector_beamformer(p, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(design_sector_beamformer(p, 0.0, 3.2), ConfigError);
}

TEST_CASE("synthesize_rx: noiseless output is h G x") {
    const OtfsParams noiseless(16, 8, 1e6, 1e-6, 60e9, 16, 4, 1.0, 0.0);
    const BsSite site(0.0, 0.0, M_PI / 4.0, 1);
    const TargetState target(20.0, 20.0, 5.0, -3.0, 1.0);
    const Beamformer bf = design_sector_beamformer(noiseless, 0.0, 40.0 * M_PI / 180.0);
    const DelayDopplerFrame x = oracle::random_frame(16, 8, 123u);

    const RxSynthesis rx = synthesize_rx(noiseless, site, target, 1.0, bf, x, 42u);
    const ChannelOperator op(noiseless, rx.radial.f_d, rx.radial.tau, rx.radial.phi);
    const std::vector<cplx> gx = apply_G(op, x);
    REQUIRE(rx.y.size() == gx.size());
    for (size_t i = 0; i < gx.size(); ++i)
        CHECK(std::abs(rx.y[i] - rx.h * gx[i]) < 1e-15);
}

TEST_CASE("synthesize_rx: pure-noise variance matches N0 delta_f") {
    const OtfsParams p(32, 16, 1e6, 1e-6, 60e9, 16, 8, 1.0, 4e-20);
    const BsSite site(0.0, 0.0, M_PI / 4.0, 1);
    const TargetState target(20.0, 20.0, 0.0, 0.0, 1.0);
    const Beamformer bf = design_sector_beamformer(p, 0.0, 40.0 * M_PI / 180.0);
    DelayDopplerFrame zero(32, 16);

    const RxSynthesis rx = synthesize_rx(p, site, target, 1.0, bf, zero, 7u);
    double acc = 0.0;
    for (const cplx& v : rx.y) acc += std::norm(v);
    const double variance = acc / rx.y.size();
    CHECK(std::abs(variance - p.noise_var()) < 0.05 * p.noise_var());
}

TEST_CASE("synthesize_rx: bit-identical under the same seed") {
    const OtfsParams p = small_params();
    const BsSite site(0.0, 0.0, M_PI / 4.0, 1);
    const TargetState target(25.0, 25.0, 3.0, 1.0, 1.0);
    const Beamformer bf = design_sector_beamformer(p, 0.0, 40.0 * M_PI / 180.0);
    const DelayDopplerFrame x = oracle::random_frame(16, 8, 5u);

    const RxSynthesis a = synthesize_rx(p, site, target, 1.0, bf, x, 99u);
    const RxSynthesis b = synthesize_rx(p, site, target, 1.0, bf, x, 99u);
    REQUIRE(a.y.size() == b.y.size());
    for (size_t i = 0; i < a.y.size(); ++i) {
        CHECK(a.y[i].real() == b.y[i].real());
        CHECK(a.y[i].imag() == b.y[i].imag());
    }
    CHECK(a.h == b.h);

    const RxSynthesis c = synthesize_rx(p, site, target, 1.0, bf, x, 100u);
    double diff = 0.0;
    for (size_t i = 0; i < a.y.size(); ++i) diff += std::abs(a.y[i] - c.y[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("synthesize_rx: received energy decreases with range") {
    const OtfsParams noiseless(16, 8, 1e6, 1e-6, 60e9, 16, 4, 1.0, 0.0);
    const BsSite site(0.0, 0.0, 0.0, 1);
    const Beamformer bf = design_sector_beamformer(noiseless, 0.0, 40.0 * M_PI / 180.0);
    const DelayDopplerFrame x = oracle::random_frame(16, 8, 6u);

    double previous = std::numeric_limits<double>::infinity();
    for (double r : {20.0, 30.0, 45.0, 70.0, 110.0}) {
        const TargetState target(r, 0.0, 0.0, 0.0, 1.0);
        const RxSynthesis rx = synthesize_rx(noiseless, site, target, 1.0, bf, x, 1u);
        double energy = 0.0;
        for (const cplx& v : rx.y) energy += std::norm(v);
        CHECK(energy < previous);
        previous = energy;
    }
}

TEST_CASE("payload frame energy sits near one for unit-modulus data") {
    DelayDopplerFrame x(16, 8);
    for (cplx& v : x.data()) v = std::polar(1.0, 0.25);
    CHECK(std::abs(x.mean_energy() - 1.0) < 0.05);
}

TEST_CASE("target state validation and rotation normalization") {
    CHECK_THROWS_AS(TargetState(0.0, 0.0, 0.0, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(TargetState(0.0, 0.0, 0.0, 0.0, -1.0), ConfigError);
    const BsSite wrapped(0.0, 0.0, -M_PI / 2.0, 1);
    CHECK(wrapped.rotation == doctest::Approx(1.5 * M_PI));
}

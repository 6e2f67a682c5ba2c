#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "ccotdr/channel.hpp"

using namespace ccotdr;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("zero-length fibre with one reflector is a single-tap model") {
    FiberConfig cfg;
    cfg.length_m = 0.0;
    cfg.rayleigh_coeff_db_per_m.reset();
    cfg.reflectors = {{0.0, -55.0}};
    auto fiber = build_fiber(cfg, 2e9, 1);
    REQUIRE(fiber.n_taps() == 1);
    CHECK(std::abs(fiber.taps[0]) ==
          Catch::Approx(std::sqrt(std::pow(10.0, -55.0 / 10.0))).epsilon(1e-12));
    CHECK(fiber.taps[0].imag() == 0.0);
}

TEST_CASE("scatter tap power matches the configured Rayleigh coefficient") {
    FiberConfig cfg;
    cfg.length_m = 5110.0; // ~1e5 taps at 2 GS/s
    cfg.rayleigh_coeff_db_per_m = -82.0;
    cfg.attenuation_db_per_km = 0.0;
    auto fiber = build_fiber(cfg, 2e9, 99);
    REQUIRE(fiber.n_taps() >= 100'000);

    double mean = 0.0;
    for (const auto& t : fiber.taps) mean += std::norm(t);
    mean /= static_cast<double>(fiber.n_taps());

    double expected = std::pow(10.0, -82.0 / 10.0) * fiber.tap_spacing_m;
    CHECK(mean == Catch::Approx(expected).epsilon(0.02));
}

TEST_CASE("reflector placement is validated") {
    FiberConfig cfg;
    cfg.length_m = 100.0;
    cfg.reflectors = {{150.0, -40.0}};
    CHECK_THROWS_WITH(build_fiber(cfg, 2e9, 1),
                      Catch::Matchers::ContainsSubstring("beyond fibre end"));

    cfg.reflectors = {{50.0, -40.0}, {50.001, -45.0}}; // closer than one tap
    auto fiber = build_fiber(cfg, 2e9, 1);
    REQUIRE_FALSE(fiber.warnings.empty());
    CHECK(fiber.warnings[0] == "reflectors unresolvable at this sample rate");
}

TEST_CASE("fibre realization is deterministic in the seed") {
    FiberConfig cfg;
    cfg.length_m = 500.0;
    auto a = build_fiber(cfg, 2e9, 1234);
    auto b = build_fiber(cfg, 2e9, 1234);
    auto c = build_fiber(cfg, 2e9, 1235);
    REQUIRE(a.taps == b.taps);
    CHECK(a.taps != c.taps);
}

TEST_CASE("static channel: no stimuli, laser off -> time-independent taps") {
    FiberConfig cfg;
    cfg.length_m = 50.0;
    auto fiber = build_fiber(cfg, 2e9, 7);
    LaserModel laser{0.0, false};
    auto h0 = channel_response(fiber, {}, laser, 0.0, 0);
    auto h1 = channel_response(fiber, {}, laser, 0.1234, 0);
    CHECK(h0 == h1);
}

TEST_CASE("tap beyond the stimulus span advances by exactly twice the amplitude") {
    FiberConfig cfg;
    cfg.length_m = 10.0;
    cfg.rayleigh_coeff_db_per_m.reset();
    cfg.reflectors = {{10.0, -20.0}};
    auto fiber = build_fiber(cfg, 2e9, 7);
    const std::size_t bin = fiber.reflector_bins[0];

    AcousticStimulus stim;
    stim.span_start_m = 2.0;
    stim.span_end_m = 4.0;
    stim.frequency_hz = 100.0;
    stim.amplitude_rad = 0.35;
    stim.phase_offset_rad = kPi / 2.0; // sin == 1 at t = 0

    LaserModel laser{0.0, false};
    AcousticStimulus stims[] = {stim};
    auto h = channel_response(fiber, stims, laser, 0.0, 0);
    CHECK(std::arg(h[bin]) == Catch::Approx(2.0 * 0.35).margin(1e-12));

    // halfway into the span: linear ramp -> half the phase
    AcousticStimulus mid = stim;
    mid.span_start_m = 8.0;
    mid.span_end_m = 12.0;
    AcousticStimulus stims2[] = {mid};
    auto h2 = channel_response(fiber, stims2, laser, 0.0, 0);
    double ramp = (fiber.tap_distance(bin) - 8.0) / 4.0;
    CHECK(std::arg(h2[bin]) == Catch::Approx(2.0 * 0.35 * ramp).margin(1e-9));
}

TEST_CASE("round-trip attenuation at 50 km and 0.19 dB/km is 19 dB in power") {
    FiberConfig cfg;
    cfg.length_m = 50e3;
    cfg.attenuation_db_per_km = 0.19;
    cfg.rayleigh_coeff_db_per_m.reset();
    cfg.reflectors = {{50e3, -30.0}};
    auto fiber = build_fiber(cfg, 500e6, 7);
    const std::size_t bin = fiber.reflector_bins[0];

    LaserModel laser{0.0, false};
    auto h = channel_response(fiber, {}, laser, 0.0, 0);
    double ratio = std::abs(h[bin]) / std::abs(fiber.taps[bin]);
    // exact at the discretized tap position, 19 dB round trip at 50 km
    double z_km = fiber.tap_distance(bin) / 1000.0;
    CHECK(ratio == Catch::Approx(std::pow(10.0, -0.19 * z_km / 10.0)).epsilon(1e-12));
    CHECK(ratio == Catch::Approx(std::pow(10.0, -9.5 / 10.0)).epsilon(1e-4));
}

TEST_CASE("laser phase noise is a Wiener path over round-trip delay") {
    FiberModel fiber;
    fiber.length_m = 100.0;
    fiber.sample_rate = 2e9;
    fiber.tap_spacing_m = speed_of_light_mps / (2.0 * 1.468 * 2e9);
    fiber.taps.assign(100'000, cplx(1.0, 0.0));
    fiber.attenuation.assign(100'000, 1.0);

    LaserModel laser{100.0, true};
    auto h = channel_response(fiber, {}, laser, 0.0, derive_seed(5, Stream::Laser, 0));

    // unwrap arg(h) and check the increment variance against 2*pi*dv/fs
    double var = 0.0;
    double prev = std::arg(h[0]);
    double prev_unwrapped = prev;
    std::vector<double> incs;
    for (std::size_t i = 1; i < h.size(); ++i) {
        double a = std::arg(h[i]);
        double d = std::remainder(a - prev, 2.0 * kPi);
        incs.push_back(d);
        prev = a;
        prev_unwrapped += d;
    }
    double mean = 0.0;
    for (double d : incs) mean += d;
    mean /= static_cast<double>(incs.size());
    for (double d : incs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(incs.size());
    CHECK(var == Catch::Approx(two_pi * 100.0 / 2e9).epsilon(0.05));
}

TEST_CASE("propagate: identity and shifted taps") {
    std::vector<double> s{1, -1, 1, 1, -1, 0, 0, 0, 0, 0, 0, 0};
    std::vector<cplx> h1{cplx(1, 0)};
    auto r1 = propagate(s, h1);
    REQUIRE(r1.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(r1[i] - cplx(s[i], 0)) < 1e-12);

    std::vector<cplx> h2(4, cplx(0, 0));
    h2[3] = cplx(1, 0);
    auto r2 = propagate(s, h2);
    for (std::size_t i = 3; i < s.size(); ++i)
        CHECK(std::abs(r2[i] - cplx(s[i - 3], 0)) < 1e-12);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r2[i]) < 1e-12);
}

TEST_CASE("propagate: FFT path equals the direct sum") {
    std::vector<double> s(4096);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = std::sin(0.37 * static_cast<double>(i)) > 0 ? 1.0 : -1.0;
    std::vector<cplx> h(257, cplx(0, 0));
    h[10] = cplx(0.5, -0.25);
    h[200] = cplx(-0.125, 1.0);
    for (std::size_t i = 0; i < h.size(); i += 7)
        h[i] += cplx(std::cos(double(i)), std::sin(double(i) * 0.5)) * 1e-3;

    auto fft_path = propagate(s, h);
    auto direct = propagate_direct(s, h);
    double scale = 0, err = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        scale = std::max(scale, std::abs(direct[i]));
        err = std::max(err, std::abs(fft_path[i] - direct[i]));
    }
    CHECK(err / scale < 1e-9);
}

TEST_CASE("propagate: zero channel and oversized channel") {
    std::vector<double> s(64, 1.0);
    std::vector<cplx> h0(8, cplx(0, 0));
    auto r = propagate(s, h0);
    for (const auto& v : r) CHECK(v == cplx(0, 0));

    std::vector<cplx> too_long(65, cplx(0, 0));
    CHECK_THROWS_WITH(propagate(s, too_long),
                      Catch::Matchers::ContainsSubstring("round-trip exceeds frame"));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ccotdr/probe.hpp"

using namespace ccotdr;

TEST_CASE("400 MBaud, 5 samples/symbol, 540.5 us frame") {
    ProbeConfig cfg;
    cfg.symbol_rate = 400e6;
    cfg.samples_per_symbol = 5;
    cfg.frame_duration = 540.5e-6;
    auto frame = build_frame(cfg);

    CHECK(frame.waveform.size() == 1'081'000);
    CHECK(frame.code_samples() == 40'960);

    // NRZ hold over each symbol, exact zero over the fill
    for (std::size_t i : {std::size_t{0}, std::size_t{137}, std::size_t{8191}})
        for (std::size_t k = 0; k < 5; ++k)
            CHECK(frame.waveform[i * 5 + k] == frame.code[i]);
    for (std::size_t n = frame.code_samples(); n < frame.waveform.size(); n += 997)
        REQUIRE(frame.waveform[n] == 0.0);
    REQUIRE(frame.waveform[frame.waveform.size() - 1] == 0.0);
}

TEST_CASE("250 MBaud, 4 samples/symbol, 632.8 us frame") {
    ProbeConfig cfg;
    cfg.symbol_rate = 250e6;
    cfg.samples_per_symbol = 4;
    cfg.frame_duration = 632.8e-6;
    auto frame = build_frame(cfg);
    CHECK(frame.waveform.size() == 632'800);
    CHECK(frame.code_samples() == 32'768);
}

TEST_CASE("zero fill: waveform is exactly the upsampled code") {
    ProbeConfig cfg;
    cfg.symbol_rate = 8e6;
    cfg.samples_per_symbol = 1;
    cfg.prbs_order = 3;
    cfg.prbs_seed = 0b111;
    cfg.frame_duration = 1e-6; // 8 samples = 8 symbols
    auto frame = build_frame(cfg);
    REQUIRE(frame.waveform.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(frame.waveform[i] == frame.code[i]);
}

TEST_CASE("frame shorter than the code is rejected") {
    ProbeConfig cfg;
    cfg.symbol_rate = 400e6;
    cfg.samples_per_symbol = 5;
    cfg.frame_duration = 10e-6; // code needs 20.48 us
    CHECK_THROWS_AS(build_frame(cfg), config_error);
}

TEST_CASE("non-integer sample count is rejected") {
    ProbeConfig cfg;
    cfg.symbol_rate = 1e6;
    cfg.samples_per_symbol = 1;
    cfg.prbs_order = 3;
    cfg.frame_duration = 10.5e-6; // 10.5 samples
    CHECK_THROWS_WITH(build_frame(cfg),
                      Catch::Matchers::ContainsSubstring("not sample-aligned"));
}

TEST_CASE("frame timing reproduces the reported maximum detectable frequencies") {
    ProbeConfig cfg;
    cfg.symbol_rate = 400e6;
    cfg.samples_per_symbol = 5;

    cfg.frame_duration = 540.5e-6;
    CHECK(std::llround(timing(cfg).f_max) == 925);

    cfg.symbol_rate = 250e6;
    cfg.samples_per_symbol = 4;
    cfg.frame_duration = 632.8e-6;
    CHECK(std::llround(timing(cfg).f_max) == 790);

    cfg.frame_duration = 753e-6;
    CHECK(std::llround(timing(cfg).f_max) == 664);
}

TEST_CASE("79 frames of 632.8 us give 20 Hz resolution") {
    ProbeConfig cfg;
    cfg.symbol_rate = 250e6;
    cfg.samples_per_symbol = 4;
    cfg.frame_duration = 632.8e-6;
    cfg.n_frames = 79;
    auto t = timing(cfg);
    CHECK(t.delta_f == Catch::Approx(20.0).epsilon(0.005));
}

TEST_CASE("timing identity: f_max * 2 * frame_duration == 1") {
    for (double T : {540.5e-6, 632.8e-6, 753e-6, 25e-6}) {
        ProbeConfig cfg;
        cfg.symbol_rate = 2e9;
        cfg.samples_per_symbol = 1;
        cfg.frame_duration = T;
        auto t = timing(cfg);
        CHECK(t.f_max * 2.0 * T == Catch::Approx(1.0).margin(1e-15));
    }
}

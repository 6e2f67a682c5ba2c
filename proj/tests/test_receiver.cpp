#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>

#include "ccotdr/capture_io.hpp"
#include "ccotdr/receiver.hpp"

using namespace ccotdr;

TEST_CASE("noise-free detection reproduces the field exactly") {
    std::vector<cplx> r{{1.0, 0.0}, {-1.0, 0.5}, {0.25, -0.75}, {0.0, 0.0}};
    ReceiverConfig cfg; // sigma 0, pol_leak 0
    auto cap = detect(r, cfg, 1, 0, 2e9, 1e-6);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(cap.ch[0][i] == static_cast<float>(r[i].real()));
        CHECK(cap.ch[1][i] == static_cast<float>(r[i].imag()));
        CHECK(cap.ch[2][i] == 0.0f);
        CHECK(cap.ch[3][i] == 0.0f);
    }
}

TEST_CASE("zero input gives pure Gaussian noise of the configured variance") {
    std::vector<cplx> r(100'000, cplx(0, 0));
    ReceiverConfig cfg;
    cfg.noise_sigma = 0.1;
    auto cap = detect(r, cfg, 42, 0, 2e9, 1e-6);
    for (const auto& ch : cap.ch) {
        double mean = 0, var = 0;
        for (float v : ch) mean += v;
        mean /= static_cast<double>(ch.size());
        for (float v : ch) var += (v - mean) * (v - mean);
        var /= static_cast<double>(ch.size());
        CHECK(var == Catch::Approx(0.01).epsilon(0.05));
    }
}

TEST_CASE("full polarization leak moves the signal to the Y channels") {
    std::vector<cplx> r{{0.5, -0.5}, {1.0, 0.25}};
    ReceiverConfig cfg;
    cfg.pol_leak = 1.0;
    auto cap = detect(r, cfg, 1, 0, 2e9, 1e-6);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(cap.ch[0][i] == 0.0f);
        CHECK(cap.ch[1][i] == 0.0f);
        CHECK(cap.ch[2][i] == static_cast<float>(r[i].real()));
        CHECK(cap.ch[3][i] == static_cast<float>(r[i].imag()));
    }
}

TEST_CASE("power splits across polarizations without loss") {
    std::vector<cplx> r{{0.3, 0.7}, {-0.2, 0.1}, {0.9, -0.4}};
    ReceiverConfig cfg;
    cfg.pol_leak = 0.6;
    auto cap = detect(r, cfg, 1, 0, 2e9, 1e-6);
    for (std::size_t i = 0; i < r.size(); ++i) {
        double px = std::norm(x_field(cap, i));
        double py = std::norm(y_field(cap, i));
        CHECK(px + py == Catch::Approx(std::norm(r[i])).epsilon(1e-6));
    }
}

TEST_CASE("capture file round trip and header layout") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "ccotdr_test_capture.bin").string();

    std::vector<cplx> r{{1.0, -1.0}, {0.5, 0.25}, {-0.125, 0.0}};
    ReceiverConfig cfg;
    cfg.noise_sigma = 0.01;
    auto cap0 = detect(r, cfg, 5, 0, 1e9, 2e-6);
    auto cap1 = detect(r, cfg, 5, 1, 1e9, 2e-6);
    {
        CaptureWriter w(path, 1e9, 2, 3);
        w.write_frame(cap0);
        w.write_frame(cap1);
    }

    // header golden layout
    std::ifstream in(path, std::ios::binary);
    char buf[64];
    in.read(buf, 64);
    REQUIRE(in.gcount() == 64);
    CHECK(std::string(buf, 4) == "CCOT");
    uint32_t version, n_frames, frame_len, n_channels;
    double fs_hz;
    std::memcpy(&version, buf + 4, 4);
    std::memcpy(&fs_hz, buf + 8, 8);
    std::memcpy(&n_frames, buf + 16, 4);
    std::memcpy(&frame_len, buf + 20, 4);
    std::memcpy(&n_channels, buf + 24, 4);
    CHECK(version == 1);
    CHECK(fs_hz == 1e9);
    CHECK(n_frames == 2);
    CHECK(frame_len == 3);
    CHECK(n_channels == 4);
    for (int i = 28; i < 64; ++i) CHECK(buf[i] == 0);

    CaptureReader reader(path);
    CHECK(reader.header().n_frames == 2);
    auto back1 = reader.read_frame(1, 2e-6);
    CHECK(back1.ch == cap1.ch);
    auto back0 = reader.read_frame(0, 2e-6);
    CHECK(back0.ch == cap0.ch);
    CHECK(back0.timestamp == 0.0);
    CHECK(back1.timestamp == 2e-6);
    CHECK_THROWS_AS(reader.read_frame(2, 2e-6), config_error);

    fs::remove(path);
}

TEST_CASE("per-frame noise streams are independent and reproducible") {
    std::vector<cplx> r(64, cplx(0, 0));
    ReceiverConfig cfg;
    cfg.noise_sigma = 1.0;
    auto a0 = detect(r, cfg, 9, 0, 1e9, 1e-6);
    auto a0_again = detect(r, cfg, 9, 0, 1e9, 1e-6);
    auto a1 = detect(r, cfg, 9, 1, 1e9, 1e-6);
    CHECK(a0.ch == a0_again.ch);
    CHECK(a0.ch != a1.ch);
}

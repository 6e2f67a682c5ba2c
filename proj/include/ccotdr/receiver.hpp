#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "ccotdr/errors.hpp"
#include "ccotdr/rng.hpp"

namespace ccotdr {

using cplx = std::complex<double>;

struct ReceiverConfig {
    double noise_sigma = 0.0; // per-sample std dev, each real channel
    double pol_leak = 0.0;    // field amplitude fraction coupled into y-pol

    void validate() const {
        if (noise_sigma < 0) throw config_error("receiver.noise_sigma must be >= 0");
        if (pol_leak < 0 || pol_leak > 1)
            throw config_error("receiver.pol_leak must be in [0, 1]");
    }
};

// One frame as the oscilloscope records it: four real channels, stored as
// 32-bit floats to match the capture file format bit for bit.
struct FrameCapture {
    std::array<std::vector<float>, 4> ch; // XI, XQ, YI, YQ
    double sample_rate = 0.0;
    uint32_t frame_index = 0;
    double timestamp = 0.0;

    std::size_t frame_len() const { return ch[0].size(); }
};

inline FrameCapture detect(std::span<const cplx> received, const ReceiverConfig& cfg,
                           uint64_t master_seed, uint32_t frame_index, double sample_rate,
                           double frame_duration) {
    cfg.validate();
    const std::size_t n = received.size();
    const double gx = std::sqrt(1.0 - cfg.pol_leak * cfg.pol_leak);
    const double gy = cfg.pol_leak;

    FrameCapture cap;
    cap.sample_rate = sample_rate;
    cap.frame_index = frame_index;
    cap.timestamp = frame_index * frame_duration;
    for (auto& c : cap.ch) c.resize(n);

    const Stream streams[4] = {Stream::NoiseXI, Stream::NoiseXQ, Stream::NoiseYI,
                               Stream::NoiseYQ};
    const double gains[4] = {gx, gx, gy, gy};
    for (int c = 0; c < 4; ++c) {
        RandomStream rng(derive_seed(master_seed, streams[c], frame_index));
        const bool imag_part = (c % 2) == 1;
        for (std::size_t i = 0; i < n; ++i) {
            double v = gains[c] * (imag_part ? received[i].imag() : received[i].real());
            if (cfg.noise_sigma > 0) v += cfg.noise_sigma * rng.gaussian();
            cap.ch[c][i] = static_cast<float>(v);
        }
    }
    return cap;
}

inline cplx x_field(const FrameCapture& cap, std::size_t i) {
    return cplx(cap.ch[0][i], cap.ch[1][i]);
}
inline cplx y_field(const FrameCapture& cap, std::size_t i) {
    return cplx(cap.ch[2][i], cap.ch[3][i]);
}

} // namespace ccotdr

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ccotdr/errors.hpp"
#include "ccotdr/prbs.hpp"

namespace ccotdr {

struct ProbeConfig {
    double symbol_rate = 400e6;      // Baud
    int samples_per_symbol = 5;
    int prbs_order = 13;
    // Code rotation with an aperiodic autocorrelation sidelobe peak 37.8 dB
    // below the mainlobe; rotations of the same m-sequence vary from about
    // 35 to 37.8 dB.
    uint32_t prbs_seed = 0x0223;
    std::vector<int> prbs_taps;      // empty -> default_taps(prbs_order)
    double frame_duration = 540.5e-6; // seconds
    int n_frames = 1;

    double sample_rate() const { return symbol_rate * samples_per_symbol; }

    std::size_t code_symbols() const { return std::size_t{1} << prbs_order; }

    double code_duration() const {
        return static_cast<double>(code_symbols()) / symbol_rate;
    }

    // Frame length in samples; frame_duration must be an integer number of
    // samples at sample_rate.
    std::size_t frame_samples() const {
        double exact = frame_duration * sample_rate();
        double rounded = std::round(exact);
        if (rounded < 1.0 || std::abs(exact - rounded) > 1e-6 * std::max(1.0, rounded))
            throw config_error("frame duration not sample-aligned");
        return static_cast<std::size_t>(rounded);
    }

    void validate() const {
        if (symbol_rate <= 0) throw config_error("probe.symbol_rate_baud must be > 0");
        if (samples_per_symbol < 1)
            throw config_error("probe.samples_per_symbol must be >= 1");
        if (n_frames < 1) throw config_error("probe.n_frames must be >= 1");
        if (frame_duration < code_duration())
            throw config_error("probe.frame_duration_s shorter than code duration");
        frame_samples();
    }
};

struct FrameTiming {
    double f_max;       // Hz, max detectable acoustic frequency
    double delta_f;     // Hz, spectral resolution over n_frames
    double sample_rate; // Hz
};

struct ProbeFrame {
    std::vector<double> code;      // 2^order symbols in {+1, -1}
    std::vector<double> waveform;  // code upsampled NRZ, then zero fill
    FrameTiming timing{};
    double frame_duration = 0.0;
    int samples_per_symbol = 1;

    std::size_t code_samples() const { return code.size() * samples_per_symbol; }

    // The correlation reference: the code portion of the waveform.
    std::vector<double> reference() const {
        return {waveform.begin(),
                waveform.begin() + static_cast<std::ptrdiff_t>(code_samples())};
    }
};

// The frame repetition rate sets the acoustic Nyquist limit; the total
// observation time sets the spectral bin width.
inline FrameTiming timing(const ProbeConfig& cfg) {
    cfg.validate();
    return FrameTiming{
        1.0 / (2.0 * cfg.frame_duration),
        1.0 / (cfg.n_frames * cfg.frame_duration),
        cfg.sample_rate(),
    };
}

inline ProbeFrame build_frame(const std::vector<double>& code, const ProbeConfig& cfg) {
    cfg.validate();
    if (code.size() != cfg.code_symbols())
        throw config_error("code length does not match probe.prbs_order");

    ProbeFrame f;
    f.code = code;
    f.samples_per_symbol = cfg.samples_per_symbol;
    f.frame_duration = cfg.frame_duration;
    f.timing = timing(cfg);

    const std::size_t n = cfg.frame_samples();
    const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    if (code.size() * sps > n)
        throw config_error("probe.frame_duration_s shorter than code duration");

    f.waveform.assign(n, 0.0);
    for (std::size_t i = 0; i < code.size(); ++i)
        for (std::size_t k = 0; k < sps; ++k)
            f.waveform[i * sps + k] = code[i];
    return f;
}

inline ProbeFrame build_frame(const ProbeConfig& cfg) {
    const auto& taps = cfg.prbs_taps.empty() ? default_taps(cfg.prbs_order) : cfg.prbs_taps;
    return build_frame(generate_code(cfg.prbs_order, cfg.prbs_seed, taps), cfg);
}

} // namespace ccotdr

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccotdr/errors.hpp"
#include "ccotdr/fft.hpp"
#include "ccotdr/rng.hpp"

namespace ccotdr {

constexpr double speed_of_light_mps = 299792458.0;
constexpr double two_pi = 6.283185307179586476925286766559;

struct Reflector {
    double position_m = 0.0;
    double reflectance_db = -55.0; // power, one reflection
};

struct FiberConfig {
    double length_m = 50e3;
    double attenuation_db_per_km = 0.19; // one-way
    double group_index = 1.468;
    // Backscattered power captured per metre of fibre; disabled when unset.
    std::optional<double> rayleigh_coeff_db_per_m = -82.0;
    std::vector<Reflector> reflectors;
};

struct AcousticStimulus {
    double span_start_m = 0.0;
    double span_end_m = 0.0;
    double frequency_hz = 0.0;
    double amplitude_rad = 0.0; // peak one-way phase across the full span
    double phase_offset_rad = 0.0;

    // Spatial coupling: 0 below the span, linear ramp inside, 1 beyond.
    double ramp(double z) const {
        if (z <= span_start_m) return 0.0;
        if (z >= span_end_m) return 1.0;
        return (z - span_start_m) / (span_end_m - span_start_m);
    }

    void validate() const {
        if (!(span_start_m < span_end_m))
            throw config_error("stimulus.span_m must satisfy z0 < z1");
        if (amplitude_rad < 0) throw config_error("stimulus.amplitude_rad must be >= 0");
        if (frequency_hz < 0) throw config_error("stimulus.frequency_hz must be >= 0");
    }
};

struct LaserModel {
    double linewidth_hz = 100.0; // Lorentzian
    bool enabled = true;

    void validate() const {
        if (linewidth_hz < 0) throw config_error("laser.linewidth_hz must be >= 0");
    }
};

// Discretized fibre: one complex reflectivity tap per receiver sample
// interval. Tap i sits at z = i * tap_spacing; its echo arrives with a
// round-trip delay of exactly i samples.
struct FiberModel {
    double length_m = 0.0;
    double group_index = 1.468;
    double attenuation_db_per_km = 0.19;
    double tap_spacing_m = 0.0;
    double sample_rate = 0.0;
    std::vector<cplx> taps;          // reflectivity (scatter + reflectors)
    std::vector<double> attenuation; // round-trip amplitude factor per tap
    std::vector<Reflector> reflectors;
    std::vector<std::size_t> reflector_bins;
    std::vector<std::string> warnings;

    std::size_t n_taps() const { return taps.size(); }
    double tap_distance(std::size_t i) const { return static_cast<double>(i) * tap_spacing_m; }
    double round_trip_seconds() const {
        return 2.0 * group_index * length_m / speed_of_light_mps;
    }
};

inline FiberModel build_fiber(const FiberConfig& cfg, double sample_rate, uint64_t seed) {
    if (cfg.length_m < 0) throw config_error("fiber.length_m must be >= 0");
    if (cfg.group_index <= 0) throw config_error("fiber.group_index must be > 0");
    if (sample_rate <= 0) throw config_error("sample rate must be > 0");

    FiberModel m;
    m.length_m = cfg.length_m;
    m.group_index = cfg.group_index;
    m.attenuation_db_per_km = cfg.attenuation_db_per_km;
    m.sample_rate = sample_rate;
    m.tap_spacing_m = speed_of_light_mps / (2.0 * cfg.group_index * sample_rate);
    m.reflectors = cfg.reflectors;

    const std::size_t n_taps =
        static_cast<std::size_t>(std::floor(cfg.length_m / m.tap_spacing_m)) + 1;
    m.taps.assign(n_taps, cplx(0.0, 0.0));

    if (cfg.rayleigh_coeff_db_per_m) {
        // E|a|^2 per tap = captured backscatter power of one tap_spacing of fibre
        double var = std::pow(10.0, *cfg.rayleigh_coeff_db_per_m / 10.0) * m.tap_spacing_m;
        double s = std::sqrt(var / 2.0);
        RandomStream rng(derive_seed(seed, Stream::FiberTaps));
        for (auto& tap : m.taps)
            tap = cplx(s * rng.gaussian(), s * rng.gaussian());
    }

    for (const auto& r : cfg.reflectors) {
        if (r.position_m < 0 || r.position_m > cfg.length_m)
            throw config_error("fiber.reflectors: position " + std::to_string(r.position_m) +
                               " m beyond fibre end");
        if (r.reflectance_db > 0)
            throw config_error("fiber.reflectors: reflectance_db must be <= 0");
        std::size_t bin = static_cast<std::size_t>(std::llround(r.position_m / m.tap_spacing_m));
        bin = std::min(bin, n_taps - 1);
        m.taps[bin] += cplx(std::sqrt(std::pow(10.0, r.reflectance_db / 10.0)), 0.0);
        m.reflector_bins.push_back(bin);
    }

    bool unresolvable = false;
    for (std::size_t i = 0; i + 1 < cfg.reflectors.size() && !unresolvable; ++i)
        for (std::size_t j = i + 1; j < cfg.reflectors.size(); ++j)
            if (std::abs(cfg.reflectors[i].position_m - cfg.reflectors[j].position_m) <
                m.tap_spacing_m) {
                unresolvable = true;
                break;
            }
    if (unresolvable) m.warnings.push_back("reflectors unresolvable at this sample rate");

    m.attenuation.resize(n_taps);
    for (std::size_t i = 0; i < n_taps; ++i) {
        double z_km = m.tap_distance(i) / 1000.0;
        m.attenuation[i] = std::pow(10.0, -cfg.attenuation_db_per_km * z_km / 10.0);
    }
    return m;
}

// Channel tap vector at frame timestamp t. Acoustic phase enters doubled
// (probe passes the perturbed span twice); laser phase noise is a Wiener
// path over round-trip delay, one fresh path per frame.
inline void channel_response(const FiberModel& fiber, std::span<const AcousticStimulus> stimuli,
                             const LaserModel& laser, double t, uint64_t laser_stream_seed,
                             std::vector<cplx>& h) {
    const std::size_t n = fiber.n_taps();
    h.resize(n);

    thread_local std::vector<double> phase;
    phase.assign(n, 0.0);
    bool any_phase = false;
    for (const auto& s : stimuli) {
        if (s.amplitude_rad == 0.0) continue;
        double drive = s.amplitude_rad * std::sin(two_pi * s.frequency_hz * t + s.phase_offset_rad);
        if (drive == 0.0) continue;
        any_phase = true;
        std::size_t i0 = static_cast<std::size_t>(
            std::max(0.0, std::ceil(s.span_start_m / fiber.tap_spacing_m)));
        for (std::size_t i = i0; i < n; ++i)
            phase[i] += drive * s.ramp(fiber.tap_distance(i));
    }

    if (laser.enabled && laser.linewidth_hz > 0.0) {
        RandomStream rng(laser_stream_seed);
        const double inc_sigma = std::sqrt(two_pi * laser.linewidth_hz / fiber.sample_rate);
        double theta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            theta += inc_sigma * rng.gaussian();
            double a = 2.0 * phase[i] + theta;
            h[i] = fiber.taps[i] * fiber.attenuation[i] * cplx(std::cos(a), std::sin(a));
        }
    } else if (any_phase) {
        for (std::size_t i = 0; i < n; ++i) {
            double a = 2.0 * phase[i];
            h[i] = fiber.taps[i] * fiber.attenuation[i] *
                   (a == 0.0 ? cplx(1.0, 0.0) : cplx(std::cos(a), std::sin(a)));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) h[i] = fiber.taps[i] * fiber.attenuation[i];
    }
}

inline std::vector<cplx> channel_response(const FiberModel& fiber,
                                          std::span<const AcousticStimulus> stimuli,
                                          const LaserModel& laser, double t,
                                          uint64_t laser_stream_seed) {
    std::vector<cplx> h;
    channel_response(fiber, stimuli, laser, t, laser_stream_seed, h);
    return h;
}

// Received complex baseband waveform: linear convolution of the probe
// waveform with the tap vector, truncated to the frame length.
inline std::vector<cplx> propagate(std::span<const double> waveform, std::span<const cplx> h) {
    if (h.size() > waveform.size()) throw config_error("round-trip exceeds frame");
    ConvolutionPlan plan(waveform, h.size(), waveform.size());
    std::vector<cplx> out, scratch;
    plan.run(h, out, scratch);
    return out;
}

inline std::vector<cplx> propagate_direct(std::span<const double> waveform,
                                          std::span<const cplx> h) {
    if (h.size() > waveform.size()) throw config_error("round-trip exceeds frame");
    return convolve_direct(waveform, h, waveform.size());
}

} // namespace ccotdr

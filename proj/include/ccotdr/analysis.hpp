#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccotdr/correlator.hpp"
#include "ccotdr/errors.hpp"
#include "ccotdr/fft.hpp"

namespace ccotdr {

struct Peak {
    std::size_t bin = 0;
    double distance_m = 0.0;
    double power_db = 0.0;
    enum class Kind { Reflector, Rayleigh } kind = Kind::Rayleigh;
};

inline const char* to_string(Peak::Kind k) {
    return k == Peak::Kind::Reflector ? "reflector" : "rayleigh";
}

// Peaks ordered by power, strongest first.
struct PeakSet {
    std::vector<Peak> peaks;

    std::size_t size() const { return peaks.size(); }
    const Peak& operator[](std::size_t i) const { return peaks[i]; }
};

struct PeakSearch {
    int n = 8;
    double min_separation_m = 0.5;
    double floor_margin_db = 6.0;
    std::optional<std::pair<double, double>> range_m; // restrict the search
};

inline PeakSet find_peaks(const Fingerprint& fp, const PeakSearch& search,
                          std::span<const std::size_t> reflector_bins = {}) {
    if (search.n < 1) throw analysis_error("peak count must be >= 1");
    std::size_t k0 = 1, k1 = fp.n_bins() > 1 ? fp.n_bins() - 1 : 0;
    if (search.range_m) {
        k0 = std::max<std::size_t>(
            k0, static_cast<std::size_t>(
                    std::max(0.0, std::ceil(search.range_m->first / fp.bin_spacing_m))));
        k1 = std::min<std::size_t>(
            k1, static_cast<std::size_t>(
                    std::floor(search.range_m->second / fp.bin_spacing_m)) + 1);
    }
    if (k0 >= k1) return {};

    std::vector<double> window(fp.power_db.begin() + static_cast<std::ptrdiff_t>(k0),
                               fp.power_db.begin() + static_cast<std::ptrdiff_t>(k1));
    const double threshold = detail::median(std::move(window)) + search.floor_margin_db;

    std::vector<std::size_t> candidates;
    for (std::size_t k = k0; k < k1; ++k) {
        if (fp.power_db[k] <= threshold) continue;
        if (fp.power_db[k] >= fp.power_db[k - 1] && fp.power_db[k] > fp.power_db[k + 1])
            candidates.push_back(k);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return fp.power_db[a] > fp.power_db[b];
    });

    PeakSet out;
    for (std::size_t k : candidates) {
        if (out.peaks.size() >= static_cast<std::size_t>(search.n)) break;
        bool separated = true;
        for (const auto& p : out.peaks)
            if (std::abs(fp.distance_m(k) - p.distance_m) < search.min_separation_m) {
                separated = false;
                break;
            }
        if (!separated) continue;
        Peak p;
        p.bin = k;
        p.distance_m = fp.distance_m(k);
        p.power_db = fp.power_db[k];
        p.kind = Peak::Kind::Rayleigh;
        for (std::size_t rb : reflector_bins)
            if (std::llabs(static_cast<long long>(k) - static_cast<long long>(rb)) <= 1)
                p.kind = Peak::Kind::Reflector;
        out.peaks.push_back(p);
    }
    return out;
}

struct AttenuationFit {
    double roundtrip_db_per_km = 0.0;
    double one_way_db_per_km = 0.0;
};

// Least-squares line through the block-maximum envelope of the trace
// (Rayleigh speckle peaks, not the fading floor), dB versus km.
inline AttenuationFit fit_attenuation(const Fingerprint& fp,
                                      std::pair<double, double> z_range_m,
                                      std::span<const std::size_t> reflector_bins = {},
                                      double block_m = 10.0) {
    if (z_range_m.second - z_range_m.first < 1000.0)
        throw analysis_error("fit range must span at least 1 km");
    for (std::size_t rb : reflector_bins) {
        double z = fp.distance_m(rb);
        if (z >= z_range_m.first && z <= z_range_m.second)
            throw analysis_error("contaminated fit range");
    }

    std::vector<double> xs, ys;
    for (double z = z_range_m.first; z + block_m <= z_range_m.second + 1e-9; z += block_m) {
        std::size_t b0 = static_cast<std::size_t>(std::ceil(z / fp.bin_spacing_m));
        std::size_t b1 = std::min<std::size_t>(
            fp.n_bins(), static_cast<std::size_t>(std::floor((z + block_m) / fp.bin_spacing_m)));
        if (b0 >= b1) continue;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t k = b0; k < b1; ++k) peak = std::max(peak, fp.power_db[k]);
        xs.push_back((z + block_m / 2.0) / 1000.0);
        ys.push_back(peak);
    }
    if (xs.size() < 2) throw analysis_error("fit range too short for envelope blocks");

    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    AttenuationFit fit;
    fit.roundtrip_db_per_km = -slope;
    fit.one_way_db_per_km = fit.roundtrip_db_per_km / 2.0;
    return fit;
}

namespace detail {

// Gauge phase uses whichever polarization carries more average power at the
// probed bin.
inline bool prefer_y_pol(double mean_px, double mean_py) { return mean_py > mean_px; }

inline double wrap_pi(double x) {
    double r = std::remainder(x, two_pi);
    if (r <= -3.141592653589793238462643383279502884) r = 3.141592653589793238462643383279502884;
    return r;
}

} // namespace detail

inline std::vector<double> extract_phase(std::span<const CorrelationProfile> profiles,
                                         std::size_t bin) {
    if (profiles.empty()) return {};
    double px = 0.0, py = 0.0;
    for (const auto& p : profiles) {
        if (bin >= p.n_lags()) throw analysis_error("gauge bin out of range");
        px += std::norm(p.rx[bin]);
        py += std::norm(p.ry[bin]);
    }
    const bool use_y = detail::prefer_y_pol(px, py);
    std::vector<double> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) out.push_back(std::arg(use_y ? p.ry[bin] : p.rx[bin]));
    return out;
}

struct PhaseSeries {
    std::vector<double> values; // radians, unwrapped, mean-removed
    double frame_rate = 0.0;    // Hz
    std::size_t bin_a = 0, bin_b = 0;
    double gauge_length_m = 0.0;
};

// Differential phase over the gauge: wrapped difference per frame, unwrapped
// across frames, mean removed.
inline PhaseSeries diff_phase(std::span<const double> a, std::span<const double> b,
                              double frame_rate, std::size_t bin_a = 0, std::size_t bin_b = 0,
                              double gauge_length_m = 0.0) {
    if (a.size() != b.size()) throw analysis_error("phase series length mismatch");
    PhaseSeries s;
    s.frame_rate = frame_rate;
    s.bin_a = bin_a;
    s.bin_b = bin_b;
    s.gauge_length_m = gauge_length_m;
    s.values.resize(a.size());
    if (a.empty()) return s;

    double prev = detail::wrap_pi(b[0] - a[0]);
    s.values[0] = prev;
    for (std::size_t m = 1; m < a.size(); ++m) {
        double d = detail::wrap_pi(b[m] - a[m]);
        prev += detail::wrap_pi(d - prev);
        s.values[m] = prev;
    }
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(s.values.size());
    for (double& v : s.values) v -= mean;
    return s;
}

enum class Window { Hann, Rectangular };

inline Window parse_window(const std::string& name) {
    if (name == "hann") return Window::Hann;
    if (name == "rect" || name == "rectangular") return Window::Rectangular;
    throw config_error("unknown window: " + name);
}

inline const char* to_string(Window w) {
    return w == Window::Hann ? "hann" : "rectangular";
}

struct PhaseSpectrum {
    std::vector<double> freqs;     // Hz, bins 1..N/2
    std::vector<double> magnitude; // unit max over reported bins (if nonzero)
    Window window = Window::Hann;
    bool normalized = false;
    double delta_f = 0.0;
};

inline PhaseSpectrum spectrum(const PhaseSeries& series, Window window = Window::Hann) {
    const std::size_t n = series.values.size();
    if (n < 8) throw analysis_error("phase series too short for a spectrum");

    double mean = 0.0;
    for (double v : series.values) mean += v;
    mean /= static_cast<double>(n);

    std::vector<cplx> buf(n);
    for (std::size_t m = 0; m < n; ++m) {
        double w = 1.0;
        if (window == Window::Hann)
            w = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(m) / static_cast<double>(n)));
        buf[m] = cplx((series.values[m] - mean) * w, 0.0);
    }
    fft_any(buf, false);

    PhaseSpectrum spec;
    spec.window = window;
    spec.delta_f = series.frame_rate / static_cast<double>(n);
    const std::size_t n_bins = n / 2;
    spec.freqs.resize(n_bins);
    spec.magnitude.resize(n_bins);
    double peak = 0.0;
    for (std::size_t m = 1; m <= n_bins; ++m) {
        spec.freqs[m - 1] = static_cast<double>(m) * spec.delta_f;
        spec.magnitude[m - 1] = std::abs(buf[m]);
        peak = std::max(peak, spec.magnitude[m - 1]);
    }
    if (peak > 0.0) {
        for (auto& v : spec.magnitude) v /= peak;
        spec.normalized = true;
    }
    return spec;
}

struct ToneDetection {
    double frequency_hz = 0.0;
    double peak_snr_db = 0.0;
    std::size_t bin = 0; // index into the spectrum arrays
};

inline ToneDetection detect_tone(const PhaseSpectrum& spec, double exclude_below_hz) {
    std::size_t best = spec.freqs.size();
    std::vector<double> considered_power;
    for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
        if (spec.freqs[i] <= exclude_below_hz) continue;
        considered_power.push_back(spec.magnitude[i] * spec.magnitude[i]);
        if (best == spec.freqs.size() || spec.magnitude[i] > spec.magnitude[best]) best = i;
    }
    if (best == spec.freqs.size()) throw analysis_error("no spectral bins above exclusion band");
    if (spec.magnitude[best] <= 0.0) throw analysis_error("degenerate (all-zero) spectrum");

    double peak_power = spec.magnitude[best] * spec.magnitude[best];
    std::vector<double> rest;
    rest.reserve(considered_power.size());
    for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
        if (spec.freqs[i] <= exclude_below_hz || i == best) continue;
        rest.push_back(spec.magnitude[i] * spec.magnitude[i]);
    }
    double med = detail::median(std::move(rest));

    ToneDetection det;
    det.frequency_hz = spec.freqs[best];
    det.bin = best;
    det.peak_snr_db = 10.0 * std::log10(peak_power / std::max(med, 1e-30));
    return det;
}

} // namespace ccotdr

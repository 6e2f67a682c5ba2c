#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ccotdr/channel.hpp"
#include "ccotdr/errors.hpp"
#include "ccotdr/fft.hpp"
#include "ccotdr/receiver.hpp"

namespace ccotdr {

// Complex correlation of one frame against the transmitted code waveform,
// one profile per polarization, over the valid (non-wraparound) lag range.
struct CorrelationProfile {
    std::vector<cplx> rx;
    std::vector<cplx> ry;
    uint32_t frame_index = 0;
    double sample_rate = 0.0;
    double group_index = 1.468;

    std::size_t n_lags() const { return rx.size(); }
    double bin_spacing_m() const {
        return speed_of_light_mps / (2.0 * group_index * sample_rate);
    }
};

// Reference spectrum precomputed once; the plan is immutable and shared
// across worker threads.
class CorrelationPlan {
public:
    CorrelationPlan(std::span<const double> reference, std::size_t frame_len)
        : ref_len_(reference.size()),
          frame_len_(frame_len),
          nfft_(Fft::next_pow2(frame_len)),
          fft_(Fft::next_pow2(frame_len)) {
        if (ref_len_ > frame_len_) throw config_error("reference longer than frame");
        std::vector<cplx> s(nfft_, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < ref_len_; ++i) s[i] = cplx(reference[i], 0.0);
        fft_.forward(s.data());
        ref_spectrum_conj_.resize(nfft_);
        for (std::size_t k = 0; k < nfft_; ++k) ref_spectrum_conj_[k] = std::conj(s[k]);
    }

    std::size_t n_lags() const { return frame_len_ - ref_len_ + 1; }
    std::size_t ref_len() const { return ref_len_; }

    // r[k] = sum_n x[n+k] * s[n] for k in [0, frame_len - ref_len].
    void correlate(std::span<const float> re, std::span<const float> im,
                   std::vector<cplx>& out, std::vector<cplx>& scratch) const {
        if (re.size() != frame_len_ || im.size() != frame_len_)
            throw config_error("capture / reference length mismatch");
        scratch.assign(nfft_, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < frame_len_; ++i)
            scratch[i] = cplx(re[i], im[i]);
        fft_.forward(scratch.data());
        for (std::size_t k = 0; k < nfft_; ++k) scratch[k] *= ref_spectrum_conj_[k];
        fft_.inverse(scratch.data());
        out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n_lags()));
    }

    CorrelationProfile run(const FrameCapture& cap, double group_index,
                           std::vector<cplx>& scratch) const {
        CorrelationProfile p;
        p.frame_index = cap.frame_index;
        p.sample_rate = cap.sample_rate;
        p.group_index = group_index;
        correlate(cap.ch[0], cap.ch[1], p.rx, scratch);
        if (all_zero(cap.ch[2]) && all_zero(cap.ch[3]))
            p.ry.assign(n_lags(), cplx(0.0, 0.0));
        else
            correlate(cap.ch[2], cap.ch[3], p.ry, scratch);
        return p;
    }

private:
    static bool all_zero(const std::vector<float>& v) {
        for (float x : v)
            if (x != 0.0f) return false;
        return true;
    }

    std::size_t ref_len_;
    std::size_t frame_len_;
    std::size_t nfft_;
    Fft fft_;
    std::vector<cplx> ref_spectrum_conj_;
};

inline CorrelationProfile correlate_frame(const FrameCapture& cap,
                                          std::span<const double> reference,
                                          double group_index = 1.468) {
    CorrelationPlan plan(reference, cap.frame_len());
    std::vector<cplx> scratch;
    return plan.run(cap, group_index, scratch);
}

// Direct-sum path, selectable from the CLI for cross-checking the FFT route.
inline CorrelationProfile correlate_frame_direct(const FrameCapture& cap,
                                                 std::span<const double> reference,
                                                 double group_index = 1.468) {
    if (reference.size() > cap.frame_len())
        throw config_error("reference longer than frame");
    const std::size_t n_lags = cap.frame_len() - reference.size() + 1;
    CorrelationProfile p;
    p.frame_index = cap.frame_index;
    p.sample_rate = cap.sample_rate;
    p.group_index = group_index;
    p.rx.assign(n_lags, cplx(0.0, 0.0));
    p.ry.assign(n_lags, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n_lags; ++k) {
        cplx ax(0.0, 0.0), ay(0.0, 0.0);
        for (std::size_t n = 0; n < reference.size(); ++n) {
            ax += cplx(cap.ch[0][n + k], cap.ch[1][n + k]) * reference[n];
            ay += cplx(cap.ch[2][n + k], cap.ch[3][n + k]) * reference[n];
        }
        p.rx[k] = ax;
        p.ry[k] = ay;
    }
    return p;
}

// Reflected power vs lag: squared sum of the correlations of all four
// channels, i.e. |rx|^2 + |ry|^2.
inline std::vector<double> power_trace(const CorrelationProfile& p) {
    std::vector<double> out(p.n_lags());
    for (std::size_t k = 0; k < p.n_lags(); ++k)
        out[k] = std::norm(p.rx[k]) + std::norm(p.ry[k]);
    return out;
}

// Streaming mean of per-frame power traces (and per-polarization powers,
// used later for gauge polarization selection).
struct PowerAccumulator {
    std::vector<double> sum_px;
    std::vector<double> sum_py;
    int n_frames = 0;

    void add(const CorrelationProfile& p) {
        if (sum_px.empty()) {
            sum_px.assign(p.n_lags(), 0.0);
            sum_py.assign(p.n_lags(), 0.0);
        }
        if (sum_px.size() != p.n_lags())
            throw config_error("profile length mismatch in accumulation");
        for (std::size_t k = 0; k < p.n_lags(); ++k) {
            sum_px[k] += std::norm(p.rx[k]);
            sum_py[k] += std::norm(p.ry[k]);
        }
        ++n_frames;
    }

    std::vector<double> mean_power() const {
        std::vector<double> m(sum_px.size());
        for (std::size_t k = 0; k < m.size(); ++k)
            m[k] = (sum_px[k] + sum_py[k]) / std::max(1, n_frames);
        return m;
    }
};

struct CalibrationSpec {
    double reference_db = -55.0; // value the strongest reference peak reads
    double floor_margin_db = 10.0;
    std::optional<std::pair<double, double>> search_range_m; // default: whole trace
};

struct Fingerprint {
    std::vector<double> power_db;
    double bin_spacing_m = 0.0;
    double calibration_offset_db = 0.0;
    int n_frames_averaged = 0;

    double distance_m(std::size_t k) const { return static_cast<double>(k) * bin_spacing_m; }
    std::size_t n_bins() const { return power_db.size(); }
};

namespace detail {
inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}
} // namespace detail

inline Fingerprint make_fingerprint(const PowerAccumulator& acc, const CalibrationSpec& calib,
                                    double bin_spacing_m) {
    if (acc.n_frames < 1) throw analysis_error("fingerprint needs at least one frame");
    Fingerprint fp;
    fp.bin_spacing_m = bin_spacing_m;
    fp.n_frames_averaged = acc.n_frames;

    auto mean = acc.mean_power();
    fp.power_db.resize(mean.size());
    for (std::size_t k = 0; k < mean.size(); ++k)
        fp.power_db[k] = 10.0 * std::log10(std::max(mean[k], 1e-30));

    std::size_t k0 = 0, k1 = mean.size();
    if (calib.search_range_m) {
        k0 = static_cast<std::size_t>(
            std::max(0.0, std::ceil(calib.search_range_m->first / bin_spacing_m)));
        k1 = std::min<std::size_t>(
            mean.size(),
            static_cast<std::size_t>(std::floor(calib.search_range_m->second / bin_spacing_m)) + 1);
    }
    if (k0 >= k1) throw analysis_error("calibration search range is empty");

    std::size_t peak = k0;
    for (std::size_t k = k0; k < k1; ++k)
        if (fp.power_db[k] > fp.power_db[peak]) peak = k;

    double floor_db = detail::median(fp.power_db);
    if (fp.power_db[peak] < floor_db + calib.floor_margin_db)
        throw analysis_error("calibration reference peak not found above floor");

    fp.calibration_offset_db = calib.reference_db - fp.power_db[peak];
    for (auto& v : fp.power_db) v += fp.calibration_offset_db;
    return fp;
}

inline Fingerprint fingerprint(std::span<const CorrelationProfile> profiles,
                               const CalibrationSpec& calib) {
    if (profiles.empty()) throw analysis_error("fingerprint needs at least one profile");
    PowerAccumulator acc;
    for (const auto& p : profiles) acc.add(p);
    return make_fingerprint(acc, calib, profiles[0].bin_spacing_m());
}

// Mainlobe-to-max-sidelobe power ratio in dB. The sidelobe field of a code
// of length W samples spans +-W around the mainlobe, so the search covers
// that range, minus the mainlobe triangle itself and minus +-W around every
// other physical peak (whose own sidelobe fields would contaminate the
// reading).
inline double sidelobe_metric(const Fingerprint& fp, std::size_t mainlobe_bin,
                              std::size_t code_len_samples, std::size_t mainlobe_halfwidth,
                              std::span<const std::size_t> other_peak_bins = {}) {
    if (mainlobe_bin >= fp.n_bins()) throw analysis_error("mainlobe bin out of range");
    const std::ptrdiff_t W = static_cast<std::ptrdiff_t>(code_len_samples);
    const std::ptrdiff_t lo =
        std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(mainlobe_bin) - W + 1);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(fp.n_bins()), static_cast<std::ptrdiff_t>(mainlobe_bin) + W);
    double max_side = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t k = lo; k < hi; ++k) {
        auto dist = [&](std::size_t c) {
            return std::abs(k - static_cast<std::ptrdiff_t>(c));
        };
        if (dist(mainlobe_bin) <= static_cast<std::ptrdiff_t>(mainlobe_halfwidth)) continue;
        bool near_other = false;
        for (std::size_t o : other_peak_bins)
            if (dist(o) < W) { near_other = true; break; }
        if (near_other) continue;
        max_side = std::max(max_side, fp.power_db[static_cast<std::size_t>(k)]);
    }
    if (!std::isfinite(max_side)) throw analysis_error("sidelobe region empty");
    return fp.power_db[mainlobe_bin] - max_side;
}

} // namespace ccotdr

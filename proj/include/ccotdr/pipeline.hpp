#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "ccotdr/analysis.hpp"
#include "ccotdr/capture_io.hpp"
#include "ccotdr/channel.hpp"
#include "ccotdr/correlator.hpp"
#include "ccotdr/errors.hpp"
#include "ccotdr/probe.hpp"
#include "ccotdr/receiver.hpp"
#include "ccotdr/scenario.hpp"

namespace ccotdr {

// Run `work(m)` for m in [0, n_frames) on `threads` workers and hand results
// to `consume(m, result)` strictly in frame order. Per-frame randomness is
// derived from (seed, m), so together with the ordered reduction every
// downstream number is independent of the thread count.
template <typename Work, typename Consume>
void ordered_parallel_frames(uint32_t n_frames, int threads, Work&& work, Consume&& consume) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n_frames <= 1) {
        for (uint32_t m = 0; m < n_frames; ++m) consume(m, work(m));
        return;
    }
    std::atomic<uint32_t> next{0};
    std::mutex mu;
    std::condition_variable cv;
    uint32_t turn = 0;
    std::exception_ptr error;

    auto runner = [&] {
        for (;;) {
            uint32_t m = next.fetch_add(1, std::memory_order_relaxed);
            if (m >= n_frames) return;
            try {
                auto r = work(m);
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return turn == m || error; });
                if (error) return;
                consume(m, std::move(r));
                ++turn;
                cv.notify_all();
            } catch (...) {
                std::lock_guard lk(mu);
                if (!error) error = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct FrameScratch {
    std::vector<cplx> h;
    std::vector<cplx> received;
    std::vector<cplx> fft;
};

// One simulation: immutable probe frame, fibre realization and FFT plans,
// shared across worker threads. Frame synthesis and correlation are pure
// functions of the frame index.
class Engine {
public:
    Engine(Scenario sc, int threads = 1, bool direct_correlation = false)
        : sc_(std::move(sc)), threads_(threads), direct_(direct_correlation) {
        sc_.validate();
        if (sc_.target_floor_db)
            throw config_error(
                "receiver.target_floor_db not resolved; call resolve_noise_sigma first");
        frame_ = build_frame(sc_.probe);
        fiber_ = build_fiber(sc_.fiber, sc_.probe.sample_rate(), sc_.seed);
        if (fiber_.n_taps() > frame_.waveform.size())
            throw config_error("round-trip exceeds frame");
        conv_ = std::make_unique<ConvolutionPlan>(frame_.waveform, fiber_.n_taps(),
                                                  frame_.waveform.size());
        reference_ = frame_.reference();
        corr_ = std::make_unique<CorrelationPlan>(reference_, frame_.waveform.size());
    }

    const Scenario& scenario() const { return sc_; }
    const ProbeFrame& probe() const { return frame_; }
    const FiberModel& fiber() const { return fiber_; }
    int threads() const { return threads_; }
    std::size_t n_lags() const { return corr_->n_lags(); }
    uint32_t n_frames() const { return static_cast<uint32_t>(sc_.probe.n_frames); }

    FrameCapture simulate_frame(uint32_t m, FrameScratch& s) const {
        const double t = m * sc_.probe.frame_duration;
        channel_response(fiber_, sc_.stimuli, sc_.laser, t,
                         derive_seed(sc_.seed, Stream::Laser, m), s.h);
        conv_->run(s.h, s.received, s.fft);
        return detect(s.received, sc_.receiver, sc_.seed, m, sc_.probe.sample_rate(),
                      sc_.probe.frame_duration);
    }

    CorrelationProfile correlate(const FrameCapture& cap, std::vector<cplx>& scratch) const {
        if (direct_) return correlate_frame_direct(cap, reference_, fiber_.group_index);
        return corr_->run(cap, fiber_.group_index, scratch);
    }

    // Thread-safe frame producers.
    std::function<FrameCapture(uint32_t)> simulated_frames() const {
        return [this](uint32_t m) {
            thread_local FrameScratch scratch;
            return simulate_frame(m, scratch);
        };
    }

    std::function<FrameCapture(uint32_t)> file_frames(std::shared_ptr<CaptureReader> reader) const {
        if (reader->header().frame_len != frame_.waveform.size())
            throw config_error("capture frame length does not match scenario");
        if (reader->header().n_frames < n_frames())
            throw config_error("capture holds fewer frames than scenario n_frames");
        auto mu = std::make_shared<std::mutex>();
        double T = sc_.probe.frame_duration;
        return [reader, mu, T](uint32_t m) {
            std::lock_guard lk(*mu);
            return reader->read_frame(m, T);
        };
    }

    // cmd_simulate: frames written in index order, bit-identical for any
    // thread count.
    void write_capture(const std::string& path) const {
        CaptureWriter writer(path, sc_.probe.sample_rate(), n_frames(),
                             static_cast<uint32_t>(frame_.waveform.size()));
        auto source = simulated_frames();
        ordered_parallel_frames(
            n_frames(), threads_, [&](uint32_t m) { return source(m); },
            [&](uint32_t, FrameCapture&& cap) { writer.write_frame(cap); });
    }

    // Pass 1: mean correlation power over all frames.
    PowerAccumulator accumulate_power(const std::function<FrameCapture(uint32_t)>& source,
                                      std::optional<uint32_t> max_frames = std::nullopt) const {
        PowerAccumulator acc;
        uint32_t n = max_frames ? std::min(*max_frames, n_frames()) : n_frames();
        ordered_parallel_frames(
            n, threads_,
            [&](uint32_t m) {
                thread_local std::vector<cplx> scratch;
                return correlate(source(m), scratch);
            },
            [&](uint32_t, CorrelationProfile&& p) { acc.add(p); });
        return acc;
    }

    Fingerprint fingerprint_of(const PowerAccumulator& acc) const {
        CalibrationSpec calib;
        calib.reference_db = sc_.analysis.reference_db;
        return make_fingerprint(acc, calib, fiber_.tap_spacing_m);
    }

    // Pass 2: per-frame complex correlation samples at selected bins, plus
    // per-polarization mean powers for the polarization choice.
    struct BinSeries {
        std::vector<cplx> x, y;
        double sum_px = 0.0, sum_py = 0.0;

        std::vector<double> phases() const {
            const bool use_y = detail::prefer_y_pol(sum_px, sum_py);
            std::vector<double> out;
            out.reserve(x.size());
            for (std::size_t m = 0; m < x.size(); ++m)
                out.push_back(std::arg(use_y ? y[m] : x[m]));
            return out;
        }
    };

    std::vector<BinSeries> sample_bins(const std::function<FrameCapture(uint32_t)>& source,
                                       std::span<const std::size_t> bins) const {
        for (std::size_t b : bins)
            if (b >= n_lags()) throw analysis_error("gauge bin out of range");
        std::vector<BinSeries> series(bins.size());
        for (auto& s : series) {
            s.x.resize(n_frames());
            s.y.resize(n_frames());
        }
        std::vector<std::size_t> bin_list(bins.begin(), bins.end());
        ordered_parallel_frames(
            n_frames(), threads_,
            [&](uint32_t m) {
                thread_local std::vector<cplx> scratch;
                CorrelationProfile p = correlate(source(m), scratch);
                std::vector<std::pair<cplx, cplx>> vals(bin_list.size());
                for (std::size_t i = 0; i < bin_list.size(); ++i)
                    vals[i] = {p.rx[bin_list[i]], p.ry[bin_list[i]]};
                return vals;
            },
            [&](uint32_t m, std::vector<std::pair<cplx, cplx>>&& vals) {
                for (std::size_t i = 0; i < vals.size(); ++i) {
                    series[i].x[m] = vals[i].first;
                    series[i].y[m] = vals[i].second;
                    series[i].sum_px += std::norm(vals[i].first);
                    series[i].sum_py += std::norm(vals[i].second);
                }
            });
        return series;
    }

private:
    Scenario sc_;
    int threads_;
    bool direct_;
    ProbeFrame frame_;
    FiberModel fiber_;
    std::vector<double> reference_;
    std::unique_ptr<ConvolutionPlan> conv_;
    std::unique_ptr<CorrelationPlan> corr_;
};

struct GaugeSelection {
    std::size_t bin_a = 0, bin_b = 0;
    double gauge_length_m = 0.0;
};

inline GaugeSelection select_gauge(const Fingerprint& fp, const AnalysisConfig& cfg,
                                   std::span<const std::size_t> reflector_bins,
                                   std::optional<std::size_t> cli_peak_a = std::nullopt,
                                   std::optional<std::size_t> cli_peak_b = std::nullopt) {
    auto strongest_in = [&](const std::pair<double, double>& range) {
        std::size_t k0 = static_cast<std::size_t>(
            std::max(0.0, std::ceil(range.first / fp.bin_spacing_m)));
        std::size_t k1 = std::min<std::size_t>(
            fp.n_bins(),
            static_cast<std::size_t>(std::floor(range.second / fp.bin_spacing_m)) + 1);
        if (k0 >= k1) throw analysis_error("gauge window selects no fingerprint bins");
        std::size_t best = k0;
        for (std::size_t k = k0; k < k1; ++k)
            if (fp.power_db[k] > fp.power_db[best]) best = k;
        return best;
    };

    GaugeSelection g;
    if (cfg.gauge_bin_a && cfg.gauge_bin_b && !cli_peak_a && !cli_peak_b) {
        g.bin_a = *cfg.gauge_bin_a;
        g.bin_b = *cfg.gauge_bin_b;
    } else if (cfg.gauge_window_a_m && cfg.gauge_window_b_m && !cli_peak_a && !cli_peak_b) {
        g.bin_a = strongest_in(*cfg.gauge_window_a_m);
        g.bin_b = strongest_in(*cfg.gauge_window_b_m);
    } else {
        PeakSearch search;
        search.n = cfg.n_peaks;
        search.min_separation_m = cfg.min_separation_m;
        search.floor_margin_db = cfg.floor_margin_db;
        search.range_m = cfg.peak_range_m;
        PeakSet all = find_peaks(fp, search, reflector_bins);
        PeakSet filtered;
        for (const auto& p : all.peaks) {
            if (cfg.peak_kind == AnalysisConfig::PeakKind::Rayleigh &&
                p.kind != Peak::Kind::Rayleigh)
                continue;
            if (cfg.peak_kind == AnalysisConfig::PeakKind::Reflector &&
                p.kind != Peak::Kind::Reflector)
                continue;
            filtered.peaks.push_back(p);
        }
        auto pick = [&](std::optional<std::size_t> cli, std::optional<int> conf,
                        const char* which) -> std::size_t {
            long long idx = -1;
            if (cli) idx = static_cast<long long>(*cli);
            else if (conf) idx = *conf;
            if (idx < 1 || static_cast<std::size_t>(idx) > filtered.size())
                throw analysis_error(std::string("invalid peak index for gauge point ") + which +
                                     " (have " + std::to_string(filtered.size()) + " peaks)");
            return filtered[static_cast<std::size_t>(idx) - 1].bin;
        };
        g.bin_a = pick(cli_peak_a, cfg.peak_a, "a");
        g.bin_b = pick(cli_peak_b, cfg.peak_b, "b");
    }
    if (g.bin_a == g.bin_b) throw analysis_error("gauge bins must differ");
    g.gauge_length_m = std::abs(fp.distance_m(g.bin_b) - fp.distance_m(g.bin_a));
    return g;
}

// Full phase pipeline at a chosen gauge, from an arbitrary frame source.
struct SpectrumResult {
    GaugeSelection gauge;
    PhaseSeries series;
    PhaseSpectrum spec;
    ToneDetection tone;
};

inline SpectrumResult run_spectrum(const Engine& eng,
                                   const std::function<FrameCapture(uint32_t)>& source,
                                   const Fingerprint& fp,
                                   std::optional<std::size_t> cli_peak_a = std::nullopt,
                                   std::optional<std::size_t> cli_peak_b = std::nullopt) {
    const auto& cfg = eng.scenario().analysis;
    GaugeSelection gauge =
        select_gauge(fp, cfg, eng.fiber().reflector_bins, cli_peak_a, cli_peak_b);

    std::size_t bins[2] = {gauge.bin_a, gauge.bin_b};
    auto series = eng.sample_bins(source, bins);
    PhaseSeries diff =
        diff_phase(series[0].phases(), series[1].phases(), 1.0 / eng.scenario().probe.frame_duration,
                   gauge.bin_a, gauge.bin_b, gauge.gauge_length_m);

    SpectrumResult out;
    out.gauge = gauge;
    out.series = std::move(diff);
    out.spec = spectrum(out.series, cfg.window);
    double exclude = cfg.exclude_below_hz ? *cfg.exclude_below_hz : 2.0 * out.spec.delta_f;
    out.tone = detect_tone(out.spec, exclude);
    return out;
}

// Noise floor of a signal-free run at the scenario's dB calibration: one
// noiseless run pins the reference offset, then the mean correlation power of
// noise-only frames is read against it.
inline double measure_noise_floor_db(const Scenario& scenario, double sigma, int threads = 1,
                                     uint32_t floor_frames = 4) {
    Scenario clean = scenario;
    clean.target_floor_db.reset();
    clean.receiver.noise_sigma = 0.0;
    clean.probe.n_frames = 1;
    Engine eng(clean, threads);
    Fingerprint fp = eng.fingerprint_of(eng.accumulate_power(eng.simulated_frames()));

    Scenario noise_only = scenario;
    noise_only.target_floor_db.reset();
    noise_only.receiver.noise_sigma = sigma;
    noise_only.fiber.rayleigh_coeff_db_per_m.reset();
    noise_only.fiber.reflectors.clear();
    noise_only.stimuli.clear();
    noise_only.laser.enabled = false;
    noise_only.probe.n_frames = static_cast<int>(floor_frames);
    Engine neng(noise_only, threads);
    auto mean = neng.accumulate_power(neng.simulated_frames()).mean_power();

    double sum = 0.0;
    for (double v : mean) sum += v;
    double floor_raw_db = 10.0 * std::log10(sum / static_cast<double>(mean.size()));
    return floor_raw_db + fp.calibration_offset_db;
}

// Post-correlation floor power scales as sigma^2, so one unit-sigma probe run
// determines the sigma that lands on the target.
inline double calibrate_noise_floor(const Scenario& scenario, double target_floor_db,
                                    int threads = 1, uint32_t floor_frames = 4) {
    if (target_floor_db >= scenario.analysis.reference_db)
        throw config_error("receiver.target_floor_db above the calibrated peak level");
    double floor_db = measure_noise_floor_db(scenario, 1.0, threads, floor_frames);
    return std::pow(10.0, (target_floor_db - floor_db) / 20.0);
}

// Resolve receiver.target_floor_db into a concrete noise_sigma.
inline Scenario resolve_noise(Scenario sc, int threads = 1) {
    if (sc.target_floor_db) {
        double target = *sc.target_floor_db;
        sc.target_floor_db.reset();
        sc.receiver.noise_sigma = calibrate_noise_floor(sc, target, threads);
    }
    return sc;
}

// End-to-end regression summary (cmd_report). Deterministic given
// (scenario, seed); composes from exactly the same passes as the individual
// commands.
struct Report {
    FrameTiming timing{};
    double noise_sigma = 0.0;
    double noise_floor_db = 0.0; // median of the calibrated fingerprint
    Fingerprint fp;
    PeakSet peaks;
    std::optional<double> sidelobe_db;
    std::optional<AttenuationFit> attenuation;
    std::optional<SpectrumResult> tone;
    std::optional<std::string> tone_note; // why no tone was reported
};

inline Report run_report(const Scenario& raw, int threads = 1, bool direct = false) {
    Scenario sc = resolve_noise(raw, threads);
    Engine eng(sc, threads, direct);
    auto source = eng.simulated_frames();

    Report rep;
    rep.timing = timing(sc.probe);
    rep.noise_sigma = sc.receiver.noise_sigma;
    rep.fp = eng.fingerprint_of(eng.accumulate_power(source));
    rep.noise_floor_db = detail::median(rep.fp.power_db);

    PeakSearch search;
    search.n = sc.analysis.n_peaks;
    search.min_separation_m = sc.analysis.min_separation_m;
    search.floor_margin_db = sc.analysis.floor_margin_db;
    search.range_m = sc.analysis.peak_range_m;
    rep.peaks = find_peaks(rep.fp, search, eng.fiber().reflector_bins);

    if (!eng.fiber().reflector_bins.empty()) {
        // strongest reflector first; fall back if its sidelobe field is
        // entirely shadowed by other peaks
        std::vector<std::size_t> rb = eng.fiber().reflector_bins;
        std::sort(rb.begin(), rb.end(), [&](std::size_t a, std::size_t b) {
            return rep.fp.power_db[a] > rep.fp.power_db[b];
        });
        std::size_t halfwidth = 2 * static_cast<std::size_t>(sc.probe.samples_per_symbol);
        for (std::size_t mainlobe : rb) {
            std::vector<std::size_t> others;
            for (std::size_t b : rb)
                if (b != mainlobe) others.push_back(b);
            try {
                rep.sidelobe_db = sidelobe_metric(rep.fp, mainlobe, eng.probe().code_samples(),
                                                  halfwidth, others);
                break;
            } catch (const analysis_error&) {
            }
        }
    }

    if (sc.analysis.fit_range_m)
        rep.attenuation = fit_attenuation(rep.fp, *sc.analysis.fit_range_m,
                                          eng.fiber().reflector_bins,
                                          sc.analysis.envelope_block_m);

    const bool gauge_configured =
        (sc.analysis.gauge_bin_a && sc.analysis.gauge_bin_b) ||
        (sc.analysis.gauge_window_a_m && sc.analysis.gauge_window_b_m) ||
        (sc.analysis.peak_a && sc.analysis.peak_b);
    if (gauge_configured) {
        try {
            rep.tone = run_spectrum(eng, source, rep.fp);
        } catch (const analysis_error& e) {
            rep.tone_note = e.what();
        }
    }
    return rep;
}

} // namespace ccotdr

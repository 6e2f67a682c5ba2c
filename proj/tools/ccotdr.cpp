// ccotdr - desk-scale CC-OTDR fibre sensing simulator
//
// Subcommands:
//   simulate     scenario -> binary capture file
//   fingerprint  capture + scenario -> distance_m,power_db CSV
//   spectrum     capture + scenario -> freq_hz,norm_magnitude CSV + tone line
//   report       scenario -> end-to-end summary table
//
// Exit codes: 0 ok, 2 config error, 3 analysis error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ccotdr/csv.hpp"
#include "ccotdr/pipeline.hpp"

using namespace ccotdr;

namespace {

struct CommonOpts {
    std::string config;
    std::optional<uint64_t> seed;
    int threads = 0;
    bool direct_correlation = false;
};

int effective_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

Scenario load(const CommonOpts& opts) {
    Scenario sc = load_scenario(opts.config);
    if (opts.seed) sc.seed = *opts.seed;
    return sc;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "scenario file (JSON)")->required();
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
    cmd->add_option("--threads", opts.threads, "worker threads (default: hardware)");
    cmd->add_flag("--direct-correlation", opts.direct_correlation,
                  "use the direct-sum correlation oracle instead of the FFT path");
}

void print_timing(const Scenario& sc) {
    auto t = timing(sc.probe);
    std::printf("frames            : %d x %.6g us\n", sc.probe.n_frames,
                sc.probe.frame_duration * 1e6);
    std::printf("sample rate       : %.6g GS/s\n", t.sample_rate / 1e9);
    std::printf("f_max             : %.6g Hz\n", t.f_max);
    std::printf("delta_f           : %.6g Hz\n", t.delta_f);
}

int cmd_simulate(const CommonOpts& opts, const std::string& out) {
    Scenario sc = resolve_noise(load(opts), effective_threads(opts.threads));
    Engine eng(sc, effective_threads(opts.threads), opts.direct_correlation);
    for (const auto& w : eng.fiber().warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    print_timing(sc);
    std::printf("noise sigma       : %.6g\n", sc.receiver.noise_sigma);
    eng.write_capture(out);
    std::printf("capture           : %s (%u frames x %zu samples)\n", out.c_str(),
                eng.n_frames(), eng.probe().waveform.size());
    return 0;
}

int cmd_fingerprint(const CommonOpts& opts, const std::string& capture, const std::string& out) {
    Scenario sc = resolve_noise(load(opts), effective_threads(opts.threads));
    Engine eng(sc, effective_threads(opts.threads), opts.direct_correlation);
    auto reader = std::make_shared<CaptureReader>(capture);
    auto fp = eng.fingerprint_of(eng.accumulate_power(eng.file_frames(reader)));

    std::ofstream os(out);
    if (!os) throw config_error("cannot open output file: " + out);
    write_fingerprint_csv(os, fp);
    std::printf("fingerprint       : %s (%zu bins, %d frames averaged)\n", out.c_str(),
                fp.n_bins(), fp.n_frames_averaged);
    std::printf("calibration offset: %.3f dB\n", fp.calibration_offset_db);
    std::printf("median level      : %.2f dB\n", detail::median(fp.power_db));
    return 0;
}

int cmd_spectrum(const CommonOpts& opts, const std::string& capture, const std::string& out,
                 std::optional<std::size_t> peak_a, std::optional<std::size_t> peak_b,
                 std::optional<std::string> window) {
    Scenario sc = resolve_noise(load(opts), effective_threads(opts.threads));
    if (window) sc.analysis.window = parse_window(*window);
    Engine eng(sc, effective_threads(opts.threads), opts.direct_correlation);
    auto reader = std::make_shared<CaptureReader>(capture);
    auto source = eng.file_frames(reader);
    auto fp = eng.fingerprint_of(eng.accumulate_power(source));
    auto result = run_spectrum(eng, source, fp, peak_a, peak_b);

    std::ofstream os(out);
    if (!os) throw config_error("cannot open output file: " + out);
    write_spectrum_csv(os, result.spec);
    std::printf("gauge             : bins %zu / %zu (%.2f m apart)\n", result.gauge.bin_a,
                result.gauge.bin_b, result.gauge.gauge_length_m);
    std::printf("tone              : %.6g Hz\n", result.tone.frequency_hz);
    std::printf("peak SNR          : %.2f dB\n", result.tone.peak_snr_db);
    return 0;
}

int cmd_report(const CommonOpts& opts) {
    Scenario sc = load(opts);
    Report rep = run_report(sc, effective_threads(opts.threads), opts.direct_correlation);

    print_timing(sc);
    std::printf("noise sigma       : %.6g\n", rep.noise_sigma);
    std::printf("noise floor       : %.2f dB (median trace level)\n", rep.noise_floor_db);
    if (rep.sidelobe_db)
        std::printf("sidelobe distance : %.2f dB\n", *rep.sidelobe_db);
    if (rep.attenuation)
        std::printf("attenuation fit   : %.4g dB/km round-trip, %.4g dB/km one-way\n",
                    rep.attenuation->roundtrip_db_per_km, rep.attenuation->one_way_db_per_km);
    std::printf("peaks             : %zu\n", rep.peaks.size());
    for (std::size_t i = 0; i < rep.peaks.size(); ++i) {
        const auto& p = rep.peaks[i];
        std::printf("  %2zu. %12.3f m  %8.2f dB  %s\n", i + 1, p.distance_m, p.power_db,
                    to_string(p.kind));
    }
    if (rep.tone) {
        std::printf("gauge             : bins %zu / %zu (%.2f m apart)\n", rep.tone->gauge.bin_a,
                    rep.tone->gauge.bin_b, rep.tone->gauge.gauge_length_m);
        std::printf("detected tone     : %.6g Hz (peak SNR %.2f dB)\n",
                    rep.tone->tone.frequency_hz, rep.tone->tone.peak_snr_db);
    } else if (rep.tone_note) {
        std::printf("detected tones    : none (%s)\n", rep.tone_note->c_str());
    } else {
        std::printf("detected tones    : none (no gauge configured)\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coherent-correlation OTDR fibre sensing simulator"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string out, capture;
    std::optional<std::size_t> peak_a, peak_b;
    std::optional<std::string> window;

    auto* sim = app.add_subcommand("simulate", "synthesize frames and write a capture file");
    add_common(sim, opts);
    sim->add_option("--out", out, "output capture file")->required();

    auto* fpr = app.add_subcommand("fingerprint", "averaged power-vs-distance trace (CSV)");
    add_common(fpr, opts);
    fpr->add_option("--capture", capture, "input capture file")->required();
    fpr->add_option("--out", out, "output CSV")->required();

    auto* spec = app.add_subcommand("spectrum", "differential phase spectrum at a gauge (CSV)");
    add_common(spec, opts);
    spec->add_option("--capture", capture, "input capture file")->required();
    spec->add_option("--out", out, "output CSV")->required();
    spec->add_option("--peak-a", peak_a, "gauge point a: 1-based index into the peak set");
    spec->add_option("--peak-b", peak_b, "gauge point b: 1-based index into the peak set");
    spec->add_option("--window", window, "spectral window: hann | rect");

    auto* rep = app.add_subcommand("report", "end-to-end summary of a scenario");
    add_common(rep, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(opts, out);
        if (fpr->parsed()) return cmd_fingerprint(opts, capture, out);
        if (spec->parsed()) return cmd_spectrum(opts, capture, out, peak_a, peak_b, window);
        if (rep->parsed()) return cmd_report(opts);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const analysis_error& e) {
        std::fprintf(stderr, "analysis error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

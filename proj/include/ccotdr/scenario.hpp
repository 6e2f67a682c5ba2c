#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccotdr/analysis.hpp"
#include "ccotdr/channel.hpp"
#include "ccotdr/errors.hpp"
#include "ccotdr/probe.hpp"
#include "ccotdr/receiver.hpp"

namespace ccotdr {

struct AnalysisConfig {
    double reference_db = -55.0;
    int n_peaks = 8;
    double min_separation_m = 0.5;
    double floor_margin_db = 6.0;
    std::optional<std::pair<double, double>> peak_range_m;
    std::optional<std::pair<double, double>> fit_range_m;
    enum class PeakKind { Any, Rayleigh, Reflector } peak_kind = PeakKind::Any;
    std::optional<int> peak_a; // 1-based indices into the power-ordered PeakSet
    std::optional<int> peak_b;
    std::optional<std::size_t> gauge_bin_a; // explicit bins override everything
    std::optional<std::size_t> gauge_bin_b;
    // strongest-bin-in-range selection, between explicit bins and peak indices
    std::optional<std::pair<double, double>> gauge_window_a_m;
    std::optional<std::pair<double, double>> gauge_window_b_m;
    Window window = Window::Hann;
    std::optional<double> exclude_below_hz; // default: 2 * delta_f
    double envelope_block_m = 10.0;
};

struct Scenario {
    ProbeConfig probe;
    FiberConfig fiber;
    std::vector<AcousticStimulus> stimuli;
    LaserModel laser;
    ReceiverConfig receiver;
    std::optional<double> target_floor_db; // resolves noise_sigma when set
    AnalysisConfig analysis;
    uint64_t seed = 1;

    double round_trip_seconds() const {
        return 2.0 * fiber.group_index * fiber.length_m / speed_of_light_mps;
    }

    // Echo of the farthest tap must end inside the frame, so every fibre
    // position falls in the valid correlation lag range.
    void validate() const {
        probe.validate();
        laser.validate();
        receiver.validate();
        for (const auto& s : stimuli) s.validate();
        if (fiber.length_m < 0) throw config_error("fiber.length_m must be >= 0");
        double needed = round_trip_seconds() + probe.code_duration();
        if (probe.frame_duration < needed)
            throw config_error(
                "probe.frame_duration_s too short for fiber.length_m: round-trip + code "
                "duration = " +
                std::to_string(needed * 1e6) + " us exceeds frame of " +
                std::to_string(probe.frame_duration * 1e6) + " us");
        if (target_floor_db && receiver.noise_sigma > 0)
            throw config_error(
                "receiver.noise_sigma and receiver.target_floor_db are mutually exclusive");
        for (const auto& s : stimuli)
            if (s.span_start_m >= fiber.length_m)
                throw config_error("stimulus.span_m starts beyond fiber.length_m");
    }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const char* section,
                       std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw config_error(std::string("unknown config key: ") +
                               (section[0] ? std::string(section) + "." : "") + it.key());
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return it->get<T>();
}

inline std::optional<std::pair<double, double>> get_range(const json& obj, const char* key,
                                                          const char* section) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_array() || it->size() != 2)
        throw config_error(std::string(section) + "." + key + " must be [min, max]");
    return std::make_pair((*it)[0].get<double>(), (*it)[1].get<double>());
}

inline AcousticStimulus parse_stimulus(const json& j) {
    check_keys(j, "stimulus", {"span_m", "frequency_hz", "amplitude_rad", "phase_offset_rad"});
    AcousticStimulus s;
    auto span = j.find("span_m");
    if (span == j.end() || !span->is_array() || span->size() != 2)
        throw config_error("stimulus.span_m must be [z0, z1]");
    s.span_start_m = (*span)[0].get<double>();
    s.span_end_m = (*span)[1].get<double>();
    s.frequency_hz = get_or(j, "frequency_hz", 0.0);
    s.amplitude_rad = get_or(j, "amplitude_rad", 0.0);
    s.phase_offset_rad = get_or(j, "phase_offset_rad", 0.0);
    return s;
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_or;
    using detail::get_range;

    check_keys(j, "",
               {"probe", "fiber", "stimuli", "stimulus", "laser", "receiver", "analysis", "seed"});
    Scenario sc;
    sc.seed = get_or<uint64_t>(j, "seed", 1);

    if (auto p = j.find("probe"); p != j.end()) {
        check_keys(*p, "probe",
                   {"symbol_rate_baud", "samples_per_symbol", "prbs_order", "prbs_seed",
                    "frame_duration_s", "n_frames"});
        sc.probe.symbol_rate = get_or(*p, "symbol_rate_baud", sc.probe.symbol_rate);
        sc.probe.samples_per_symbol = get_or(*p, "samples_per_symbol", sc.probe.samples_per_symbol);
        sc.probe.prbs_order = get_or(*p, "prbs_order", sc.probe.prbs_order);
        sc.probe.prbs_seed = get_or<uint32_t>(*p, "prbs_seed", sc.probe.prbs_seed);
        sc.probe.frame_duration = get_or(*p, "frame_duration_s", sc.probe.frame_duration);
        sc.probe.n_frames = get_or(*p, "n_frames", sc.probe.n_frames);
    }

    if (auto f = j.find("fiber"); f != j.end()) {
        check_keys(*f, "fiber",
                   {"length_m", "attenuation_db_per_km", "group_index", "rayleigh_coeff_db_per_m",
                    "reflectors"});
        sc.fiber.length_m = get_or(*f, "length_m", sc.fiber.length_m);
        sc.fiber.attenuation_db_per_km =
            get_or(*f, "attenuation_db_per_km", sc.fiber.attenuation_db_per_km);
        sc.fiber.group_index = get_or(*f, "group_index", sc.fiber.group_index);
        if (auto r = f->find("rayleigh_coeff_db_per_m"); r != f->end()) {
            if (r->is_null()) sc.fiber.rayleigh_coeff_db_per_m.reset();
            else sc.fiber.rayleigh_coeff_db_per_m = r->get<double>();
        }
        if (auto refl = f->find("reflectors"); refl != f->end() && !refl->is_null()) {
            sc.fiber.reflectors.clear();
            for (const auto& rj : *refl) {
                check_keys(rj, "fiber.reflectors", {"position_m", "reflectance_db"});
                Reflector r;
                r.position_m = rj.at("position_m").get<double>();
                r.reflectance_db = rj.at("reflectance_db").get<double>();
                sc.fiber.reflectors.push_back(r);
            }
        }
    }

    if (auto s = j.find("stimuli"); s != j.end() && !s->is_null())
        for (const auto& sj : *s) sc.stimuli.push_back(detail::parse_stimulus(sj));
    if (auto s = j.find("stimulus"); s != j.end() && !s->is_null())
        sc.stimuli.push_back(detail::parse_stimulus(*s));

    if (auto l = j.find("laser"); l != j.end()) {
        check_keys(*l, "laser", {"linewidth_hz", "enabled"});
        sc.laser.linewidth_hz = get_or(*l, "linewidth_hz", sc.laser.linewidth_hz);
        sc.laser.enabled = get_or(*l, "enabled", sc.laser.linewidth_hz > 0.0);
    }

    if (auto r = j.find("receiver"); r != j.end()) {
        check_keys(*r, "receiver", {"noise_sigma", "target_floor_db", "pol_leak"});
        sc.receiver.noise_sigma = get_or(*r, "noise_sigma", 0.0);
        sc.receiver.pol_leak = get_or(*r, "pol_leak", 0.0);
        if (auto t = r->find("target_floor_db"); t != r->end() && !t->is_null())
            sc.target_floor_db = t->get<double>();
    }

    if (auto a = j.find("analysis"); a != j.end()) {
        check_keys(*a, "analysis",
                   {"reference_db", "n_peaks", "min_separation_m", "floor_margin_db",
                    "peak_range_m", "fit_range_m", "peak_kind", "peak_a", "peak_b", "gauge_bin_a",
                    "gauge_bin_b", "gauge_window_a_m", "gauge_window_b_m", "window",
                    "exclude_below_hz", "envelope_block_m"});
        sc.analysis.reference_db = get_or(*a, "reference_db", sc.analysis.reference_db);
        sc.analysis.n_peaks = get_or(*a, "n_peaks", sc.analysis.n_peaks);
        sc.analysis.min_separation_m =
            get_or(*a, "min_separation_m", sc.analysis.min_separation_m);
        sc.analysis.floor_margin_db = get_or(*a, "floor_margin_db", sc.analysis.floor_margin_db);
        sc.analysis.peak_range_m = get_range(*a, "peak_range_m", "analysis");
        sc.analysis.fit_range_m = get_range(*a, "fit_range_m", "analysis");
        if (auto k = a->find("peak_kind"); k != a->end() && !k->is_null()) {
            std::string v = k->get<std::string>();
            if (v == "any") sc.analysis.peak_kind = AnalysisConfig::PeakKind::Any;
            else if (v == "rayleigh") sc.analysis.peak_kind = AnalysisConfig::PeakKind::Rayleigh;
            else if (v == "reflector") sc.analysis.peak_kind = AnalysisConfig::PeakKind::Reflector;
            else throw config_error("analysis.peak_kind must be any|rayleigh|reflector");
        }
        if (auto v = a->find("peak_a"); v != a->end() && !v->is_null()) sc.analysis.peak_a = v->get<int>();
        if (auto v = a->find("peak_b"); v != a->end() && !v->is_null()) sc.analysis.peak_b = v->get<int>();
        if (auto v = a->find("gauge_bin_a"); v != a->end() && !v->is_null())
            sc.analysis.gauge_bin_a = v->get<std::size_t>();
        if (auto v = a->find("gauge_bin_b"); v != a->end() && !v->is_null())
            sc.analysis.gauge_bin_b = v->get<std::size_t>();
        sc.analysis.gauge_window_a_m = get_range(*a, "gauge_window_a_m", "analysis");
        sc.analysis.gauge_window_b_m = get_range(*a, "gauge_window_b_m", "analysis");
        if (auto v = a->find("window"); v != a->end() && !v->is_null())
            sc.analysis.window = parse_window(v->get<std::string>());
        if (auto v = a->find("exclude_below_hz"); v != a->end() && !v->is_null())
            sc.analysis.exclude_below_hz = v->get<double>();
        sc.analysis.envelope_block_m = get_or(*a, "envelope_block_m", sc.analysis.envelope_block_m);
    }

    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("scenario parse error in " + path + ": " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error("scenario error in " + path + ": " + e.what());
    }
}

} // namespace ccotdr

#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <system_error>

#include "ccotdr/analysis.hpp"
#include "ccotdr/correlator.hpp"

namespace ccotdr {

// CSV values go through std::to_chars: locale-independent decimal points.
inline std::string format_double(double v, int precision = 10) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

inline void write_fingerprint_csv(std::ostream& out, const Fingerprint& fp) {
    out << "distance_m,power_db\n";
    for (std::size_t k = 0; k < fp.n_bins(); ++k)
        out << format_double(fp.distance_m(k)) << ',' << format_double(fp.power_db[k]) << '\n';
}

inline void write_spectrum_csv(std::ostream& out, const PhaseSpectrum& spec) {
    out << "freq_hz,norm_magnitude\n";
    for (std::size_t i = 0; i < spec.freqs.size(); ++i)
        out << format_double(spec.freqs[i]) << ',' << format_double(spec.magnitude[i]) << '\n';
}

inline void write_peaks_csv(std::ostream& out, const PeakSet& peaks) {
    out << "bin,distance_m,power_db,kind\n";
    for (const auto& p : peaks.peaks)
        out << p.bin << ',' << format_double(p.distance_m) << ',' << format_double(p.power_db)
            << ',' << to_string(p.kind) << '\n';
}

} // namespace ccotdr

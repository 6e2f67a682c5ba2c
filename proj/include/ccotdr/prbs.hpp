#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccotdr/errors.hpp"

namespace ccotdr {

// Maximal-length PRBS generation.
//
// Fibonacci LFSR, left-shift form: feedback = XOR of the register bits at the
// tap positions (polynomial exponents, highest = order), new bit shifted in
// at the bottom, output taken from the top bit. Any primitive polynomial
// gives the m-sequence autocorrelation properties; the table below is
// verified maximal for orders 3..16.
//
// Symbol mapping: bit 1 -> +1, bit 0 -> -1, one trailing -1 appended. An
// m-sequence of length 2^n - 1 contains 2^(n-1) ones, so the full 2^n-symbol
// code sums to exactly zero (balanced drive for the modulator).

inline const std::vector<int>& default_taps(int order) {
    static const std::vector<int> table[] = {
        {},           // 0
        {},           // 1
        {},           // 2
        {3, 2},       // 3
        {4, 3},       // 4
        {5, 3},       // 5
        {6, 5},       // 6
        {7, 6},       // 7
        {8, 6, 5, 4}, // 8
        {9, 5},       // 9
        {10, 7},      // 10
        {11, 9},      // 11
        {12, 6, 4, 1},    // 12
        {13, 12, 11, 8},  // 13
        {14, 13, 12, 2},  // 14
        {15, 14},         // 15
        {16, 15, 13, 4},  // 16
    };
    if (order < 3 || order > 16)
        throw config_error("prbs_order " + std::to_string(order) +
                           " outside tap table range [3, 16]");
    return table[order];
}

inline std::vector<double> generate_code(int order, uint32_t seed, std::span<const int> taps) {
    if (order < 2) throw config_error("prbs_order must be >= 2");
    const uint32_t mask = (order >= 32) ? ~0u : ((1u << order) - 1u);
    if ((seed & mask) == 0) throw config_error("degenerate LFSR state");
    for (int t : taps)
        if (t < 1 || t > order) throw config_error("LFSR tap exponent out of range");

    const std::size_t period = (std::size_t{1} << order) - 1;
    std::vector<double> code;
    code.reserve(period + 1);

    uint32_t state = seed & mask;
    const uint32_t start = state;
    for (std::size_t i = 0; i < period; ++i) {
        code.push_back((state >> (order - 1)) & 1u ? 1.0 : -1.0);
        uint32_t fb = 0;
        for (int t : taps) fb ^= (state >> (t - 1)) & 1u;
        state = ((state << 1) | fb) & mask;
        if (state == start && i + 1 < period)
            throw config_error("not maximal-length");
    }
    if (state != start) throw config_error("not maximal-length");

    code.push_back(-1.0);
    return code;
}

inline std::vector<double> generate_code(int order, uint32_t seed) {
    return generate_code(order, seed, default_taps(order));
}

} // namespace ccotdr

#pragma once

#include <cmath>
#include <cstdint>

namespace ccotdr {

// Deterministic, schedule-independent randomness.
//
// Every consumer derives its own stream from (master seed, purpose tag,
// frame index, channel index), so results do not depend on thread count or
// evaluation order. The generator is a fixed algorithm (splitmix64 +
// Box-Muller) rather than std::normal_distribution, whose output is
// implementation-defined.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

enum class Stream : uint64_t {
    FiberTaps = 1,
    Laser = 2,
    NoiseXI = 3,
    NoiseXQ = 4,
    NoiseYI = 5,
    NoiseYQ = 6,
};

// Mix (seed, stream, frame) into an independent substream seed.
inline uint64_t derive_seed(uint64_t master, Stream stream, uint64_t frame = 0) {
    uint64_t s = master;
    splitmix64(s);
    s ^= 0xD6E8FEB86659FD93ull * static_cast<uint64_t>(stream);
    splitmix64(s);
    s ^= 0xA5A5A5A5DEADBEEFull ^ (frame * 0xC2B2AE3D27D4EB4Full);
    splitmix64(s);
    return s;
}

class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : state_(seed) {}

    // Uniform in (0, 1].
    double uniform() {
        uint64_t u = splitmix64(state_);
        return (static_cast<double>(u >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, one spare cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ccotdr

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace thermovqa {

std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::string base64_encode(const std::vector<std::uint8_t>& data);

// Current wall-clock time as "YYYY-MM-DDTHH:MM:SSZ".
std::string iso8601_utc_now();

// splitmix64-style mixing, used to derive sub-seeds deterministically.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Deterministic RNG facade. mt19937_64 output is fully specified by the
// standard; the draw helpers below avoid std::*_distribution, whose
// algorithms vary between standard libraries, so every platform produces
// identical sequences for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive on both ends
    int uniform_int(int lo, int hi);

    bool chance(double p) { return uniform() < p; }

    // standard normal via Box-Muller
    double normal();

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace thermovqa

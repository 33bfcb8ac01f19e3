#include "ubsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace ubsde {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(PhiloxBlock& c, std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
         static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
         static_cast<std::uint32_t>(p0)};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
}

inline std::uint64_t join64(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

} // namespace

PhiloxBlock philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                          const std::array<std::uint32_t, 2>& key) {
    PhiloxBlock c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int r = 0; r < 10; ++r) philox_round(c, k);
    return c;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint32_t stream_tag)
    : key_{static_cast<std::uint32_t>(seed) ^ (stream_tag * 0x9E3779B9u),
           static_cast<std::uint32_t>(seed >> 32) ^ (stream_tag * 0x85EBCA6Bu)} {}

PhiloxBlock NormalStream::block(std::uint64_t sample, std::uint32_t node,
                                std::uint32_t component) const {
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(sample),
        static_cast<std::uint32_t>(sample >> 32), node, component};
    return philox4x32_10(counter, key_);
}

double NormalStream::normal(std::uint64_t sample, std::uint32_t node,
                            std::uint32_t component) const {
    const PhiloxBlock w = block(sample, node, component);
    // u1 in (0,1], u2 in [0,1): Box-Muller needs log(u1) finite.
    const double u1 =
        (static_cast<double>(join64(w[0], w[1])) + 1.0) * 0x1p-64;
    const double u2 = static_cast<double>(join64(w[2], w[3])) * 0x1p-64;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double NormalStream::uniform01(std::uint64_t sample, std::uint32_t node,
                               std::uint32_t component) const {
    const PhiloxBlock w = block(sample, node, component);
    return (static_cast<double>(join64(w[0], w[1])) + 0.5) * 0x1p-64;
}

} // namespace ubsde

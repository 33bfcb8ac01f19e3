#pragma once
// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (seed, stream tag, sample, node, component), so generation is
// reproducible bit-for-bit regardless of evaluation order or thread count.

#include <array>
#include <cstdint>

namespace ubsde {

using PhiloxBlock = std::array<std::uint32_t, 4>;

// One Philox4x32-10 block: 128-bit counter, 64-bit key, 128-bit output.
PhiloxBlock philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                          const std::array<std::uint32_t, 2>& key);

// Stream tags keep independent uses of the same seed uncorrelated.
inline constexpr std::uint32_t kBrownianStream = 1;
inline constexpr std::uint32_t kProbeStream = 2;
inline constexpr std::uint32_t kBootstrapStream = 3;
inline constexpr std::uint32_t kScratchStream = 4;

// Stateless N(0,1) / U(0,1) draws addressed by (sample, node, component).
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint32_t stream_tag);

    double normal(std::uint64_t sample, std::uint32_t node,
                  std::uint32_t component) const;
    // Uniform on the open interval (0,1).
    double uniform01(std::uint64_t sample, std::uint32_t node,
                     std::uint32_t component) const;

private:
    PhiloxBlock block(std::uint64_t sample, std::uint32_t node,
                      std::uint32_t component) const;

    std::array<std::uint32_t, 2> key_;
};

} // namespace ubsde

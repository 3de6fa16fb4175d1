#pragma once

#include <cstdint>
#include <random>

namespace densefactor {

// Independent PRNG streams derived from one user seed. Each consumer uses a
// fixed label so that, e.g., changing the channel never perturbs x*.
enum class StreamLabel : std::uint32_t {
  Graph = 1,
  Truth = 2,
  Spreading = 3,
  Noise = 4,
  Init = 5,
  Prior = 6,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamLabel label, std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(label), sub,
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace densefactor

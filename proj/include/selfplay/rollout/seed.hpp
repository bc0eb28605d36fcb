#pragma once

#include <cstdint>

#include "selfplay/util/random.hpp"

namespace selfplay {

// Counter-based stream: the seed is a hash chain over the indices, so every
// (iteration, worker, episode) triple gets its own reproducible generator.
inline std::uint64_t stream_key(std::uint64_t base_seed, std::uint64_t iteration, std::uint64_t worker,
                                std::uint64_t episode) {
  std::uint64_t h = mix64(base_seed ^ 0x5eed5eed5eed5eedULL);
  h = mix64(h ^ mix64(iteration + 0x1111111111111111ULL));
  h = mix64(h ^ mix64(worker + 0x2222222222222222ULL));
  h = mix64(h ^ mix64(episode + 0x3333333333333333ULL));
  return h;
}

inline Rng seed_stream(std::uint64_t base_seed, std::uint64_t iteration, std::uint64_t worker, std::uint64_t episode) {
  return Rng(stream_key(base_seed, iteration, worker, episode));
}

// Reserved worker indices for streams that are not tied to a rollout worker.
inline constexpr std::uint64_t kUpdateStream = 0xFFFF0001ULL;
inline constexpr std::uint64_t kInitStream = 0xFFFF0002ULL;
inline constexpr std::uint64_t kEvalStream = 0xFFFF0003ULL;

}  // namespace selfplay

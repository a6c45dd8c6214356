#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace psap {

// Independent generator for a named purpose ("vehicles", "requests", ...)
// derived from the run seed, so components can vary without perturbing
// each other's draws.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name,
                                   std::uint64_t shard = 0) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(shard), static_cast<std::uint32_t>(shard >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace psap

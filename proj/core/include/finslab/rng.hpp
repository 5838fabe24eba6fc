#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace finslab {

// Deterministic per-task stream: one master seed, task names hashed in, so
// adding a sampler somewhere never perturbs the draws of another.
inline std::uint64_t task_seed(std::uint64_t master, std::string_view task) {
  std::uint64_t h = 1469598103934665603ull ^ master;
  for (char c : task) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  h ^= h >> 33; h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33; h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

inline std::mt19937_64 task_rng(std::uint64_t master, std::string_view task) {
  return std::mt19937_64(task_seed(master, task));
}

}  // namespace finslab

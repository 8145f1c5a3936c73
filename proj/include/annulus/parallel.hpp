// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace annulus {

/// Worker count: `requested` if positive, else ANNULUS_SLE_THREADS, else the
/// OpenMP default. Never returns less than 1.
int resolve_threads(int requested = 0);

/// SplitMix64 finalizer. Used to derive per-path seeds from (master, index)
/// so that results do not depend on how paths are scheduled.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t path_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace annulus

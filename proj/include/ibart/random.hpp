#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ibart {

using Rng = std::mt19937_64;

// Named sub-streams. Every random draw in the library comes from a generator
// seeded by derive_seed(master, stream, index), so results do not depend on
// how work is scheduled across threads.
enum class Stream : std::uint64_t {
  kFit = 1,
  kPermutation = 2,
  kFold = 3,
  kReplicate = 4,
  kSplit = 5,
  kIteration = 6,
  kData = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ (index * 0xd6e8feb86659fd93ULL));
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Rng(derive_seed(master, stream, index));
}

}  // namespace ibart

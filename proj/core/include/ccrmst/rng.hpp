#pragma once

#include <cstdint>
#include <random>

namespace ccrmst {

// SplitMix64 mixing step (Steele, Lea & Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (parent seed, stream index).
// Replication workers and bootstrap draws each get their own stream, so
// results do not depend on how work is split across threads.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t parent, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(parent, stream));
}

// Stream tags for the substreams used inside one replication.
namespace stream {
inline constexpr std::uint64_t cohort = 1;
inline constexpr std::uint64_t sampling = 2;
inline constexpr std::uint64_t templates = 3;
inline constexpr std::uint64_t bootstrap = 4;
}  // namespace stream

}  // namespace ccrmst

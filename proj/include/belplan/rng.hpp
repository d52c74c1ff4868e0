#pragma once

// Deterministic per-purpose random streams.
//
// Tree consistency between the baseline and the bounded MCTS planner (and
// action identity between the given-tree solvers) requires that every common
// sampling operation draws from the same stream regardless of which planner is
// running, and that bound computations consume no randomness.  Each stream is
// a pure function of (seed, purpose, a, b), typically (trial/session seed,
// purpose tag, node id, counter).

#include <cstdint>
#include <random>

namespace belplan {

enum class Purpose : std::uint64_t {
  kInitialBelief = 1,
  kIndexChain = 2,
  kTreeBuild = 3,
  kObsSample = 4,
  kPropagate = 5,
  kRolloutAction = 6,
  kRolloutStep = 7,
  kDpwChildChoice = 8,
  kEnvironment = 9,
  kInstance = 10,  // randomized test instances
  kResample = 11,
};

// splitmix64 finalizer; good avalanche for key mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, Purpose purpose,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, Purpose purpose, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng(stream_key(seed, purpose, a, b));
}

// Derives a sub-seed, e.g. per planning session, so all in-session streams can
// be keyed from one value.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64(mix64(seed) ^ salt);
}

}  // namespace belplan

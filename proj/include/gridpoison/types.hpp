#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace gridpoison {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Cardinal moves, indexed the same everywhere: N, S, E, W.
enum Action : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3 };
inline constexpr int kNumActions = 4;
inline constexpr int kRowDelta[kNumActions] = {-1, 1, 0, 0};
inline constexpr int kColDelta[kNumActions] = {0, 0, 1, -1};

// Behaviour-trace symbol: an action index, or kNoAction for never-visited states.
inline constexpr int kNoAction = 4;
inline constexpr char kSymbolChar[kNoAction + 1] = {'N', 'S', 'E', 'W', '-'};

// Decorrelates rng streams derived from one user-facing seed.
inline Rng seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return Rng(z ^ (z >> 31));
}

}  // namespace gridpoison

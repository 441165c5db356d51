#pragma once

#include "gridpoison/types.hpp"

#include <string>
#include <vector>

namespace gridpoison {

struct GridSpec {
  int width = 4;
  int height = 4;
  int start = 1;   // corner-adjacent cell (0,1)
  int goal = 14;   // opposite cell (3,2)
  double kappa = 3.0;  // intent strength
  double beta = 1.5;   // slope sensitivity
  double h_lo = 0.0;
  double h_hi = 5.0;
  double h_init = 2.5;
  double step_reward = -1.0;
  int max_episode_steps = 100;

  int cells() const { return width * height; }
};

// by_action[a](s, s') = P(s' | s, a); each row sums to 1.
struct TransitionTensor {
  std::vector<Mat> by_action;
};

// Altitude field plus its transition tensor; the tensor is recomputed on every
// altitude change so the two can never drift apart.
struct GridWorld {
  GridSpec spec;
  Vec altitudes;
  TransitionTensor tensor;
};

struct StepResult {
  int next_state;
  double reward;
  bool done;
};

inline int cell_row(const GridSpec& spec, int cell) { return cell / spec.width; }
inline int cell_col(const GridSpec& spec, int cell) { return cell % spec.width; }
inline int cell_index(const GridSpec& spec, int row, int col) { return row * spec.width + col; }
inline bool in_grid(const GridSpec& spec, int row, int col) {
  return row >= 0 && row < spec.height && col >= 0 && col < spec.width;
}
// Destination cell for a move, or the cell itself when the move leaves the grid.
int neighbor(const GridSpec& spec, int cell, int action);
int manhattan(const GridSpec& spec, int a, int b);

void validate_spec(const GridSpec& spec);

GridWorld make_world(const GridSpec& spec);
GridWorld make_world(const GridSpec& spec, const Vec& altitudes);
GridWorld default_env();

TransitionTensor transition_tensor(const GridSpec& spec, const Vec& altitudes);
Vec transition_probs(const GridWorld& world, int state, int action);

StepResult step(const GridWorld& world, int state, int action, Rng& rng);

// u in [-1,1]^M; altitudes move by u and clamp to [h_lo, h_hi].
GridWorld apply_attack(const GridWorld& world, const Vec& u);

std::string world_to_json(const GridWorld& world);
GridWorld world_from_json(const std::string& text);

}  // namespace gridpoison

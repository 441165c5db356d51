#pragma once

#include "gridpoison/gridworld.hpp"
#include "gridpoison/types.hpp"

#include <string>
#include <vector>

namespace gridpoison {

struct VictimParams {
  double gamma = 0.90;
  double alpha = 0.100;
  double temperature = 1.0;
  int episodes_per_attack_step = 80;  // observation bout length
  int history_depth = 8;              // actions per state kept for the policy estimate
};

// Last action taken per state during one observation bout; kNoAction elsewhere.
struct BehaviorTrace {
  std::vector<std::int8_t> symbols;
};

// The attacker's desired path: one action per target state, ordered start to goal.
struct TargetSpec {
  std::vector<int> states;
  std::vector<int> actions;
  int count() const { return int(states.size()); }
};

// Q table plus the rolling per-state action histories behind the policy estimate.
// Histories persist across observation bouts; a fresh victim starts empty.
struct Victim {
  Mat q;  // cells x 4
  std::vector<std::vector<std::int8_t>> history;
  int history_depth = 8;
};

Victim make_victim(int cells, int history_depth);

Vec action_probabilities(const Mat& q, int state, double temperature);
int softmax_action(const Mat& q, int state, double temperature, Rng& rng);
void td_update(Mat& q, int s, int a, double r, int s_next, bool terminal, const VictimParams& params);

// Runs params.episodes_per_attack_step training episodes and returns the bout trace.
BehaviorTrace train_and_trace(const GridWorld& world, Victim& victim, const VictimParams& params, Rng& rng);

// Rows are empirical action frequencies over the last h actions; uniform when unvisited.
Mat policy_estimate(const Victim& victim);

// Deterministic detour path of exactly 3x the optimal length, chosen to share
// as few cells and actions with the flat-world learner's route as the grid
// geometry allows (endpoints always shared).
TargetSpec default_target(const GridSpec& spec);

Mat make_target_policy(const Mat& pi, const TargetSpec& target);
BehaviorTrace make_target_trace(const BehaviorTrace& trace, const TargetSpec& target);

std::string trace_to_string(const BehaviorTrace& trace);
BehaviorTrace trace_from_string(const std::string& text);
std::string policy_to_csv(const Mat& pi);
Mat policy_from_csv(const std::string& text);

}  // namespace gridpoison

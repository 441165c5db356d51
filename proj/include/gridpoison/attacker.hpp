#pragma once

#include <deque>
#include <vector>

#include "gridpoison/mlp.hpp"
#include "gridpoison/types.hpp"

namespace gridpoison {

struct AttackerParams {
  int state_dim = 21;   // altitude cells + latent behavior dims
  int action_dim = 16;  // one altitude delta per cell
  int batch = 64;
  double rho = 0.005;  // target network update rate
  double noise_theta = 0.15;
  double noise_sigma = 0.2;
  int warmup_episodes = 30;
  int buffer_capacity = 50000;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
};

void validate_attacker(const AttackerParams& params);

// Mean-reverting exploration noise, reset at every attack episode start.
struct OuNoise {
  double theta = 0.15;
  double sigma = 0.2;
  Vec state;
};

OuNoise make_ou_noise(int dim, double theta, double sigma);
void reset_noise(OuNoise& noise);
Vec sample_noise(OuNoise& noise, Rng& rng);

// One attacker transition; gamma is the discount recorded when the transition
// happened and is the value later used in this record's Bellman target.
struct TransitionRecord {
  Vec x;
  Vec u;
  double r = 0.0;
  Vec x_next;
  double gamma = 0.0;
  bool done = false;
};

struct ReplayBuffer {
  std::deque<TransitionRecord> records;
  int capacity = 50000;
};

ReplayBuffer make_buffer(int capacity);
void store(ReplayBuffer& buffer, TransitionRecord rec);

// Uniform sample without replacement; pointers stay valid until the next store.
std::vector<const TransitionRecord*> sample_batch(const ReplayBuffer& buffer, int n, Rng& rng);

struct Attacker {
  AttackerParams params;
  Mlp actor;
  Mlp critic;
  Mlp actor_target;
  Mlp critic_target;
  AdamState actor_opt;
  AdamState critic_opt;
  ReplayBuffer buffer;
  OuNoise noise;
};

Attacker make_attacker(const AttackerParams& params, Rng& rng);

// tanh-bounded actor output, plus exploration noise when explore, clamped back
// into [-1, 1] componentwise.
Vec select_action(const Mlp& actor, const Vec& x, OuNoise& noise, bool explore, Rng& rng);

// y_i = r_i + gamma_i * Q'(x'_i, actor'(x'_i)) with the per-record gamma;
// y_i = r_i for done records.
Vec bellman_targets(const std::vector<const TransitionRecord*>& batch, const Mlp& critic_target,
                    const Mlp& actor_target);

struct UpdateLosses {
  double critic = 0.0;
  double actor_objective = 0.0;  // mean critic value of the actor's actions, pre-update
};

// One critic step (MSE against bellman_targets), one actor step (deterministic
// policy gradient through the critic's action input), then soft target updates.
UpdateLosses update(Attacker& atk, Rng& rng);

}  // namespace gridpoison

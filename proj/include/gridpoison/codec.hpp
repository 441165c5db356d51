#pragma once

#include "gridpoison/gridworld.hpp"
#include "gridpoison/mlp.hpp"
#include "gridpoison/victim.hpp"

#include <string>
#include <vector>

namespace gridpoison {

// Trace autoencoder: encoder M -> 36 -> 36 -> 5 (linear head), decoder
// [latent, row, col] -> 36 -> 36 -> 4 softmax over actions.
struct Codec {
  Mlp encoder;
  Mlp decoder;
  int grid_m = 16;
  int latent_dim = 5;
};

// One scalar per state: N,S,E,W -> 0.2,0.4,0.6,0.8 and no-action -> 0.0.
Vec trace_to_vector(const BehaviorTrace& trace);

Codec make_codec(const GridSpec& spec, Rng& rng);
Vec encode(const Codec& codec, const BehaviorTrace& trace);
Vec decode(const Codec& codec, const Vec& phi, int state, const GridSpec& spec);

struct PretrainReport {
  std::vector<double> epoch_losses;  // full-corpus mean cross-entropy after each epoch
};

// Reconstruction training: per-trace Adam steps on the mean cross-entropy over
// the trace's visited states; corpus order reshuffled every epoch.
PretrainReport pretrain(Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus,
                        int epochs, double lr, Rng& rng);

double corpus_loss(const Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus);
// Share of visited states whose decoded argmax matches the trace symbol.
double reconstruction_accuracy(const Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus);

// Traces of victims trained for uniformly random episode counts in worlds with
// uniformly random altitudes.
std::vector<BehaviorTrace> victim_trace_corpus(const GridSpec& spec, int count, int max_episodes,
                                               const VictimParams& params, Rng& rng);
std::vector<BehaviorTrace> random_trace_corpus(int cells, int count, Rng& rng);

void save_codec(const Codec& codec, const std::string& dir);
Codec load_codec(const std::string& dir);

}  // namespace gridpoison

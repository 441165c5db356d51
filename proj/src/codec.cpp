#include "gridpoison/codec.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace gridpoison {

using nlohmann::json;

namespace {

constexpr double kSymbolCode[kNoAction + 1] = {0.2, 0.4, 0.6, 0.8, 0.0};

Vec decoder_input(const Codec& codec, const Vec& phi, int state, const GridSpec& spec) {
  Vec in(codec.latent_dim + 2);
  in.head(codec.latent_dim) = phi;
  in[codec.latent_dim] = spec.height > 1 ? double(cell_row(spec, state)) / (spec.height - 1) : 0.0;
  in[codec.latent_dim + 1] = spec.width > 1 ? double(cell_col(spec, state)) / (spec.width - 1) : 0.0;
  return in;
}

}  // namespace

Vec trace_to_vector(const BehaviorTrace& trace) {
  Vec v(long(trace.symbols.size()));
  for (size_t i = 0; i < trace.symbols.size(); ++i) {
    const int sym = trace.symbols[i];
    if (sym < 0 || sym > kNoAction) throw std::invalid_argument("trace_to_vector: bad symbol");
    v[long(i)] = kSymbolCode[sym];
  }
  return v;
}

Codec make_codec(const GridSpec& spec, Rng& rng) {
  validate_spec(spec);
  Codec codec;
  codec.grid_m = spec.cells();
  codec.encoder = make_mlp({codec.grid_m, 36, 36, codec.latent_dim},
                           {Act::kRelu, Act::kRelu, Act::kIdentity}, rng);
  codec.decoder = make_mlp({codec.latent_dim + 2, 36, 36, kNumActions},
                           {Act::kRelu, Act::kRelu, Act::kSoftmax}, rng);
  return codec;
}

Vec encode(const Codec& codec, const BehaviorTrace& trace) {
  if (int(trace.symbols.size()) != codec.grid_m) throw std::invalid_argument("encode: trace length mismatch");
  return forward(codec.encoder, trace_to_vector(trace));
}

Vec decode(const Codec& codec, const Vec& phi, int state, const GridSpec& spec) {
  if (phi.size() != codec.latent_dim) throw std::invalid_argument("decode: latent size mismatch");
  if (state < 0 || state >= spec.cells()) throw std::out_of_range("decode: bad state");
  return forward(codec.decoder, decoder_input(codec, phi, state, spec));
}

PretrainReport pretrain(Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus,
                        int epochs, double lr, Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("pretrain: empty corpus");
  if (epochs < 0) throw std::invalid_argument("pretrain: negative epochs");
  AdamState enc_opt = make_adam(codec.encoder);
  AdamState dec_opt = make_adam(codec.decoder);
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  PretrainReport report;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t idx : order) {
      const BehaviorTrace& trace = corpus[idx];
      std::vector<int> visited;
      for (int s = 0; s < int(trace.symbols.size()); ++s)
        if (trace.symbols[size_t(s)] != kNoAction) visited.push_back(s);
      if (visited.empty()) continue;
      const Vec x = trace_to_vector(trace);
      const Vec phi = forward(codec.encoder, x);
      Mat dec_in(long(visited.size()), codec.latent_dim + 2);
      for (size_t v = 0; v < visited.size(); ++v)
        dec_in.row(long(v)) = decoder_input(codec, phi, visited[v], spec).transpose();
      const Mat probs = forward_batch(codec.decoder, dec_in);
      // d(mean cross-entropy)/d(probs) = -onehot/p / V; softmax backward turns it
      // into (p - onehot)/V.
      Mat upstream = Mat::Zero(probs.rows(), probs.cols());
      const double inv_v = 1.0 / double(visited.size());
      for (size_t v = 0; v < visited.size(); ++v) {
        const int y = trace.symbols[size_t(visited[v])];
        upstream(long(v), y) = -inv_v / std::max(probs(long(v), y), 1e-300);
      }
      BackpropResult dec_back = backprop_batch(codec.decoder, dec_in, upstream);
      const Vec dphi = dec_back.input_grads.leftCols(codec.latent_dim).colwise().sum().transpose();
      BackpropResult enc_back = gradients(codec.encoder, x, dphi);
      opt_step(codec.decoder, dec_back.grads, dec_opt, lr);
      opt_step(codec.encoder, enc_back.grads, enc_opt, lr);
    }
    report.epoch_losses.push_back(corpus_loss(codec, spec, corpus));
  }
  return report;
}

double corpus_loss(const Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus) {
  double total = 0.0;
  long states = 0;
  for (const BehaviorTrace& trace : corpus) {
    bool any = false;
    Vec phi;
    for (int s = 0; s < int(trace.symbols.size()); ++s) {
      const int y = trace.symbols[size_t(s)];
      if (y == kNoAction) continue;
      if (!any) {
        phi = encode(codec, trace);
        any = true;
      }
      const Vec p = decode(codec, phi, s, spec);
      total += -std::log(std::max(p[y], 1e-300));
      ++states;
    }
  }
  if (states == 0) throw std::invalid_argument("corpus_loss: no visited states in corpus");
  return total / double(states);
}

double reconstruction_accuracy(const Codec& codec, const GridSpec& spec, const std::vector<BehaviorTrace>& corpus) {
  long hits = 0, states = 0;
  for (const BehaviorTrace& trace : corpus) {
    bool any = false;
    Vec phi;
    for (int s = 0; s < int(trace.symbols.size()); ++s) {
      const int y = trace.symbols[size_t(s)];
      if (y == kNoAction) continue;
      if (!any) {
        phi = encode(codec, trace);
        any = true;
      }
      const Vec p = decode(codec, phi, s, spec);
      int best = 0;
      p.maxCoeff(&best);
      hits += (best == y);
      ++states;
    }
  }
  if (states == 0) throw std::invalid_argument("reconstruction_accuracy: no visited states in corpus");
  return double(hits) / double(states);
}

std::vector<BehaviorTrace> victim_trace_corpus(const GridSpec& spec, int count, int max_episodes,
                                               const VictimParams& params, Rng& rng) {
  std::vector<BehaviorTrace> corpus;
  corpus.reserve(size_t(count));
  std::uniform_real_distribution<double> alt(spec.h_lo, spec.h_hi);
  std::uniform_int_distribution<int> episodes(0, max_episodes);
  for (int i = 0; i < count; ++i) {
    Vec h(spec.cells());
    for (long c = 0; c < h.size(); ++c) h[c] = alt(rng);
    const GridWorld world = make_world(spec, h);
    Victim victim = make_victim(spec.cells(), params.history_depth);
    VictimParams bout = params;
    bout.episodes_per_attack_step = episodes(rng);
    corpus.push_back(train_and_trace(world, victim, bout, rng));
  }
  return corpus;
}

std::vector<BehaviorTrace> random_trace_corpus(int cells, int count, Rng& rng) {
  std::vector<BehaviorTrace> corpus;
  corpus.reserve(size_t(count));
  std::uniform_int_distribution<int> sym(0, kNoAction);
  for (int i = 0; i < count; ++i) {
    BehaviorTrace t;
    t.symbols.resize(size_t(cells));
    for (int s = 0; s < cells; ++s) t.symbols[size_t(s)] = std::int8_t(sym(rng));
    corpus.push_back(std::move(t));
  }
  return corpus;
}

void save_codec(const Codec& codec, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_mlp(codec.encoder, dir + "/encoder.w");
  save_mlp(codec.decoder, dir + "/decoder.w");
  json j;
  j["latent_dim"] = codec.latent_dim;
  j["grid_m"] = codec.grid_m;
  std::ofstream out(dir + "/codec.json");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_codec: write failed in " + dir);
}

Codec load_codec(const std::string& dir) {
  std::ifstream meta(dir + "/codec.json");
  if (!meta) throw std::runtime_error("load_codec: missing codec.json in " + dir);
  const json j = json::parse(meta);
  Codec codec;
  codec.latent_dim = j.at("latent_dim").get<int>();
  codec.grid_m = j.at("grid_m").get<int>();
  codec.encoder = load_mlp(dir + "/encoder.w");
  codec.decoder = load_mlp(dir + "/decoder.w");
  if (input_dim(codec.encoder) != codec.grid_m || output_dim(codec.encoder) != codec.latent_dim)
    throw std::runtime_error("load_codec: encoder shape disagrees with codec.json");
  return codec;
}

}  // namespace gridpoison

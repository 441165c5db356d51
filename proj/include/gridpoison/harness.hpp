#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gridpoison/attacker.hpp"
#include "gridpoison/codec.hpp"
#include "gridpoison/divergence.hpp"
#include "gridpoison/gridworld.hpp"
#include "gridpoison/metrics.hpp"
#include "gridpoison/stats.hpp"
#include "gridpoison/victim.hpp"

namespace gridpoison {

inline constexpr const char* kCodeVersion = "gridpoison 0.1.0";

// Codec provenance for a run: load from dir when set, else pretrain a fresh
// codec (seeded, so runs stay reproducible) and save it under the run's out_dir.
struct CodecConfig {
  std::string dir;
  int victim_traces = 5000;
  int random_traces = 1000;
  int max_episodes = 500;  // victim pretraining cap per corpus trace
  int epochs = 30;
  double lr = 1e-3;
  std::uint64_t seed = 1234;
};

struct ExperimentConfig {
  GridSpec grid;
  VictimParams victim;
  AttackerParams attacker;
  DiscountConfig discount;
  CodecConfig codec;
  int episodes = 1000;      // attack episodes per training run
  int attack_horizon = 15;  // max attack steps per episode
  std::uint64_t train_seed = 0;
  std::vector<std::uint64_t> eval_seeds;  // empty -> train_seed+1 .. train_seed+10
  std::string out_dir = "runs/run";
  bool record_wall_time = true;   // false writes 0.0 everywhere (byte-stable output)
  bool reward_soft_acc = false;   // reward = soft accuracy instead of strict accuracy
};

ExperimentConfig default_config();
// Bounds the squash maps into, by variant: KLR-based [0.90, 0.99], WD-based
// [0.80, 0.99]; fixed keeps fixed_gamma.
DiscountConfig default_discount_config(DiscountVariant variant);
void validate_config(const ExperimentConfig& cfg);

// JSON mirrors the struct field names exactly; absent keys keep defaults.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);
std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed);

// One metrics.csv row. Step 0 is the pre-attack observation: its attack fields
// (effort, divergence, gamma, reward) stay empty in the CSV.
struct MetricRow {
  int episode = 0;
  int attack_step = 0;
  double acc = 0.0;
  double soft_acc = 0.0;
  double partial_soft_acc = 0.0;
  double effort = 0.0;
  double wall_time_s = 0.0;
  double raw_divergence = 0.0;
  double gamma = 0.0;
  double reward = 0.0;
  bool attacked = false;        // false for the step-0 row
  bool has_divergence = false;  // false for fixed-discount rows
};

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run, std::uint64_t seed, const MetricRow& row);

// Strategy archive: 11 quality criteria x {last, mean, cumulative}.
inline constexpr int kArchiveCriteria = 11;
inline constexpr int kArchiveAggregations = 3;
inline constexpr int kArchiveSlots = kArchiveCriteria * kArchiveAggregations;

enum ArchiveCriterion : int {
  kCritKlr = 0,      // (T_cur, pi) vs perfect
  kCritTargetKlr,    // (T_cur, pi*) vs perfect
  kCritDefaultKlr,   // (T_default, pi) vs perfect
  kCritWd,
  kCritTargetWd,
  kCritDefaultWd,
  kCritAcc,
  kCritSoftAcc,
  kCritPartialSoftAcc,
  kCritEffort,
  kCritTime,
};

const char* criterion_name(int criterion);
bool criterion_higher_better(int criterion);
const char* aggregation_name(int aggregation);  // last, mean, cum
inline int archive_slot(int criterion, int aggregation) {
  return criterion * kArchiveAggregations + aggregation;
}

struct ArchiveSlot {
  double best = 0.0;
  int episode = -1;
  std::shared_ptr<const Mlp> actor;
};

struct StrategyArchive {
  std::array<ArchiveSlot, kArchiveSlots> slots;
};

StrategyArchive make_archive();

// Per-criterion per-step series -> the 33 slot values (last/mean/cumulative).
std::array<double, kArchiveSlots> aggregate_criteria(
    const std::array<std::vector<double>, kArchiveCriteria>& series);

// Ties or beats store the snapshot ("better or equal"); returns updated slots.
std::vector<int> archive_update(StrategyArchive& archive,
                                const std::array<double, kArchiveSlots>& values,
                                const std::shared_ptr<const Mlp>& actor, int episode);

void save_archive(const StrategyArchive& archive, const std::string& dir);

// Immutable per-run inputs shared by every episode.
struct EpisodeContext {
  GridSpec spec;
  TargetSpec target;
  Mat pi_star;
  Vec q0;  // one-hot on the start cell
  TransitionTensor t_default;
  Mat cost;            // ground metric over joint states
  Mat perfect_p;       // (T_default, pi*) joint chain
  Vec perfect_kstep;   // its k-step distribution
  DiscountConfig discount;
};

EpisodeContext make_episode_context(const ExperimentConfig& cfg);

// Archive divergences for one attack step, criterion-indexed (first six slots).
// KLR entries that fail to mix are +inf with klr_ok=false.
struct StepDivergences {
  std::array<double, 6> value{};
  std::array<bool, 3> klr_ok{true, true, true};  // klr, targetklr, defaultklr
};

StepDivergences step_divergences(const EpisodeContext& ctx, const TransitionTensor& t_cur,
                                 const Mat& pi);

struct EpisodeResult {
  std::vector<MetricRow> rows;  // step 0 plus one per attack step
  std::vector<TransitionRecord> transitions;
  std::array<std::vector<double>, kArchiveCriteria> series;
  double final_acc = 0.0;
  int steps = 0;
};

using StepCallback = std::function<void(const TransitionRecord&)>;

// One attack episode: fresh victim (seeded with victim_seed), default world,
// step-0 observation, then attack steps until accuracy 1.0 or the horizon.
// noise == nullptr runs the actor deterministically. after_step fires once per
// stored transition; it may train the networks behind `actor` in place.
EpisodeResult run_attack_episode(const ExperimentConfig& cfg, const EpisodeContext& ctx,
                                 const Codec& codec, const Mlp& actor, std::uint64_t victim_seed,
                                 int episode_index, Rng& action_rng, OuNoise* noise,
                                 const StepCallback& after_step);

Codec ensure_codec(const ExperimentConfig& cfg);

struct TrainResult {
  ExperimentConfig cfg;
  std::string run;
  std::string metrics_path;
  std::string history_path;
  std::string archive_dir;
  StrategyArchive archive;
};

TrainResult train(const ExperimentConfig& cfg);

struct EvalTrace {
  std::uint64_t victim_seed = 0;
  bool same_seed = false;
  std::vector<MetricRow> rows;
  double final_acc = 0.0;
  double mean_effort = 0.0;
};

struct EvalReport {
  std::string run;
  std::vector<EvalTrace> traces;  // same-seed attacks first, then distinct seeds
  double same_mean_final_acc = 0.0;
  double diff_mean_final_acc = 0.0;
  double same_mean_final_soft = 0.0;
  double diff_mean_final_soft = 0.0;
  double mean_effort = 0.0;
};

// 10 same-seed + (eval_seeds) distinct-seed noiseless attacks.
EvalReport evaluate(const ExperimentConfig& cfg, const Mlp& actor);
void write_eval(const EvalReport& report, const ExperimentConfig& cfg, const std::string& dir);
std::string eval_report_json(const EvalReport& report);

// Paired one-sided test on per-trace final accuracies of two evaluations.
WilcoxonResult compare_final_acc(const EvalReport& a, const EvalReport& b,
                                 const std::string& alternative);

struct SweepResult {
  std::vector<double> gammas;
  std::vector<TrainResult> runs;
  std::vector<EvalReport> reports;
  std::string table_path;
};

// Trains one fixed-discount run per gamma with shared seeds and codec, then
// evaluates each run's mean-accuracy archive snapshot.
SweepResult sweep_fixed(const ExperimentConfig& base, const std::vector<double>& gammas);

inline const std::vector<double>& default_sweep_gammas() {
  static const std::vector<double> gammas{0.80, 0.85, 0.90, 0.95, 0.99};
  return gammas;
}

}  // namespace gridpoison

#include "gridpoison/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace gridpoison {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Independent rng streams hanging off one user-facing seed.
constexpr std::uint64_t kStreamVictim = 1;
constexpr std::uint64_t kStreamAttackerInit = 2;
constexpr std::uint64_t kStreamAction = 3;
constexpr std::uint64_t kStreamUpdate = 4;
constexpr std::uint64_t kStreamCodecInit = 5;
constexpr std::uint64_t kStreamCodecCorpus = 6;
constexpr std::uint64_t kStreamCodecTrain = 7;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string iso_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::uint64_t> resolved_eval_seeds(const ExperimentConfig& cfg) {
  if (!cfg.eval_seeds.empty()) return cfg.eval_seeds;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 1; i <= 10; ++i) seeds.push_back(cfg.train_seed + i);
  return seeds;
}

DiscountReading discount_from_divergences(const DiscountConfig& cfg, const StepDivergences& d) {
  double raw = 0.0;
  switch (cfg.variant) {
    case DiscountVariant::kFixed:
      return DiscountReading{0.0, cfg.fixed_gamma};
    case DiscountVariant::kWd:
      raw = d.value[kCritWd];
      break;
    case DiscountVariant::kTargetWd:
      raw = d.value[kCritTargetWd];
      break;
    case DiscountVariant::kKlr:
      if (!d.klr_ok[0]) throw std::runtime_error("discount: stationary distribution failed for the training chain");
      raw = d.value[kCritKlr];
      break;
    case DiscountVariant::kTargetKlr:
      if (!d.klr_ok[1]) throw std::runtime_error("discount: stationary distribution failed for the training chain");
      raw = d.value[kCritTargetKlr];
      break;
  }
  return DiscountReading{raw, squash_divergence(raw, cfg)};
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.attacker.action_dim = cfg.grid.cells();
  cfg.attacker.state_dim = cfg.grid.cells() + 5;
  return cfg;
}

DiscountConfig default_discount_config(DiscountVariant variant) {
  DiscountConfig cfg;
  cfg.variant = variant;
  if (variant_uses_klr(variant)) {
    cfg.gamma_min = 0.90;
    cfg.gamma_max = 0.99;
  } else {
    cfg.gamma_min = 0.80;
    cfg.gamma_max = 0.99;
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  validate_spec(cfg.grid);
  validate_attacker(cfg.attacker);
  validate_discount(cfg.discount);
  if (!(cfg.victim.gamma > 0.0 && cfg.victim.gamma < 1.0)) throw std::invalid_argument("config: victim gamma outside (0, 1)");
  if (!(cfg.victim.alpha > 0.0)) throw std::invalid_argument("config: victim alpha <= 0");
  if (!(cfg.victim.temperature > 0.0)) throw std::invalid_argument("config: victim temperature <= 0");
  if (cfg.victim.episodes_per_attack_step < 1) throw std::invalid_argument("config: observation bout < 1 episode");
  if (cfg.victim.history_depth < 1) throw std::invalid_argument("config: history depth < 1");
  if (cfg.episodes < 1) throw std::invalid_argument("config: episodes < 1");
  if (cfg.attack_horizon < 1) throw std::invalid_argument("config: attack horizon < 1");
  if (cfg.attacker.action_dim != cfg.grid.cells())
    throw std::invalid_argument("config: attacker action_dim must equal grid cells");
  if (cfg.attacker.state_dim <= cfg.grid.cells())
    throw std::invalid_argument("config: attacker state_dim must be grid cells + latent dims");
  if (cfg.codec.dir.empty()) {
    if (cfg.codec.victim_traces < 0 || cfg.codec.random_traces < 0) throw std::invalid_argument("config: negative codec corpus");
    if (cfg.codec.victim_traces + cfg.codec.random_traces < 1) throw std::invalid_argument("config: empty codec corpus");
    if (cfg.codec.epochs < 0) throw std::invalid_argument("config: negative codec epochs");
    if (!(cfg.codec.lr > 0.0)) throw std::invalid_argument("config: codec lr <= 0");
    if (cfg.codec.max_episodes < 0) throw std::invalid_argument("config: negative codec max_episodes");
  }
  if (cfg.out_dir.empty()) throw std::invalid_argument("config: empty out_dir");
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg = default_config();
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    cfg.grid.width = g.value("width", cfg.grid.width);
    cfg.grid.height = g.value("height", cfg.grid.height);
    cfg.grid.start = g.value("start", cfg.grid.start);
    cfg.grid.goal = g.value("goal", cfg.grid.goal);
    cfg.grid.kappa = g.value("kappa", cfg.grid.kappa);
    cfg.grid.beta = g.value("beta", cfg.grid.beta);
    cfg.grid.h_lo = g.value("h_lo", cfg.grid.h_lo);
    cfg.grid.h_hi = g.value("h_hi", cfg.grid.h_hi);
    cfg.grid.h_init = g.value("h_init", cfg.grid.h_init);
    cfg.grid.step_reward = g.value("step_reward", cfg.grid.step_reward);
    cfg.grid.max_episode_steps = g.value("max_episode_steps", cfg.grid.max_episode_steps);
  }
  if (j.contains("victim")) {
    const json& v = j.at("victim");
    cfg.victim.gamma = v.value("gamma", cfg.victim.gamma);
    cfg.victim.alpha = v.value("alpha", cfg.victim.alpha);
    cfg.victim.temperature = v.value("temperature", cfg.victim.temperature);
    cfg.victim.episodes_per_attack_step = v.value("episodes_per_attack_step", cfg.victim.episodes_per_attack_step);
    cfg.victim.history_depth = v.value("history_depth", cfg.victim.history_depth);
  }
  if (j.contains("attacker")) {
    const json& a = j.at("attacker");
    cfg.attacker.batch = a.value("batch", cfg.attacker.batch);
    cfg.attacker.rho = a.value("rho", cfg.attacker.rho);
    cfg.attacker.noise_theta = a.value("noise_theta", cfg.attacker.noise_theta);
    cfg.attacker.noise_sigma = a.value("noise_sigma", cfg.attacker.noise_sigma);
    cfg.attacker.warmup_episodes = a.value("warmup_episodes", cfg.attacker.warmup_episodes);
    cfg.attacker.buffer_capacity = a.value("buffer_capacity", cfg.attacker.buffer_capacity);
    cfg.attacker.actor_lr = a.value("actor_lr", cfg.attacker.actor_lr);
    cfg.attacker.critic_lr = a.value("critic_lr", cfg.attacker.critic_lr);
  }
  if (j.contains("discount")) {
    const json& d = j.at("discount");
    cfg.discount = default_discount_config(variant_from_name(d.value("variant", std::string("wd"))));
    cfg.discount.gamma_min = d.value("gamma_min", cfg.discount.gamma_min);
    cfg.discount.gamma_max = d.value("gamma_max", cfg.discount.gamma_max);
    cfg.discount.fixed_gamma = d.value("fixed_gamma", cfg.discount.fixed_gamma);
    cfg.discount.k = d.value("k", cfg.discount.k);
    cfg.discount.c_d = d.value("c_d", cfg.discount.c_d);
  }
  if (j.contains("codec")) {
    const json& c = j.at("codec");
    cfg.codec.dir = c.value("dir", cfg.codec.dir);
    cfg.codec.victim_traces = c.value("victim_traces", cfg.codec.victim_traces);
    cfg.codec.random_traces = c.value("random_traces", cfg.codec.random_traces);
    cfg.codec.max_episodes = c.value("max_episodes", cfg.codec.max_episodes);
    cfg.codec.epochs = c.value("epochs", cfg.codec.epochs);
    cfg.codec.lr = c.value("lr", cfg.codec.lr);
    cfg.codec.seed = c.value("seed", cfg.codec.seed);
  }
  cfg.episodes = j.value("episodes", cfg.episodes);
  cfg.attack_horizon = j.value("attack_horizon", cfg.attack_horizon);
  cfg.train_seed = j.value("train_seed", cfg.train_seed);
  if (j.contains("eval_seeds")) cfg.eval_seeds = j.at("eval_seeds").get<std::vector<std::uint64_t>>();
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.record_wall_time = j.value("record_wall_time", cfg.record_wall_time);
  cfg.reward_soft_acc = j.value("reward_soft_acc", cfg.reward_soft_acc);
  cfg.attacker.action_dim = cfg.grid.cells();
  cfg.attacker.state_dim = cfg.grid.cells() + 5;
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["grid"] = {{"width", cfg.grid.width},
               {"height", cfg.grid.height},
               {"start", cfg.grid.start},
               {"goal", cfg.grid.goal},
               {"kappa", cfg.grid.kappa},
               {"beta", cfg.grid.beta},
               {"h_lo", cfg.grid.h_lo},
               {"h_hi", cfg.grid.h_hi},
               {"h_init", cfg.grid.h_init},
               {"step_reward", cfg.grid.step_reward},
               {"max_episode_steps", cfg.grid.max_episode_steps}};
  j["victim"] = {{"gamma", cfg.victim.gamma},
                 {"alpha", cfg.victim.alpha},
                 {"temperature", cfg.victim.temperature},
                 {"episodes_per_attack_step", cfg.victim.episodes_per_attack_step},
                 {"history_depth", cfg.victim.history_depth}};
  j["attacker"] = {{"batch", cfg.attacker.batch},
                   {"rho", cfg.attacker.rho},
                   {"noise_theta", cfg.attacker.noise_theta},
                   {"noise_sigma", cfg.attacker.noise_sigma},
                   {"warmup_episodes", cfg.attacker.warmup_episodes},
                   {"buffer_capacity", cfg.attacker.buffer_capacity},
                   {"actor_lr", cfg.attacker.actor_lr},
                   {"critic_lr", cfg.attacker.critic_lr}};
  j["discount"] = {{"variant", variant_name(cfg.discount.variant)},
                   {"gamma_min", cfg.discount.gamma_min},
                   {"gamma_max", cfg.discount.gamma_max},
                   {"fixed_gamma", cfg.discount.fixed_gamma},
                   {"k", cfg.discount.k},
                   {"c_d", cfg.discount.c_d}};
  j["codec"] = {{"dir", cfg.codec.dir},
                {"victim_traces", cfg.codec.victim_traces},
                {"random_traces", cfg.codec.random_traces},
                {"max_episodes", cfg.codec.max_episodes},
                {"epochs", cfg.codec.epochs},
                {"lr", cfg.codec.lr},
                {"seed", cfg.codec.seed}};
  j["episodes"] = cfg.episodes;
  j["attack_horizon"] = cfg.attack_horizon;
  j["train_seed"] = cfg.train_seed;
  j["eval_seeds"] = cfg.eval_seeds;
  j["out_dir"] = cfg.out_dir;
  j["record_wall_time"] = cfg.record_wall_time;
  j["reward_soft_acc"] = cfg.reward_soft_acc;
  return j.dump(2);
}

std::string config_digest(const ExperimentConfig& cfg) {
  // Output locations don't define the experiment; drop them before hashing.
  ExperimentConfig canon = cfg;
  canon.out_dir = "-";
  canon.codec.dir = "";
  return hex64(fnv1a64(config_to_json(canon)));
}

std::string run_id(const ExperimentConfig& cfg, std::uint64_t seed) {
  return hex64(fnv1a64(config_digest(cfg) + ":" + std::to_string(seed)));
}

std::string metrics_csv_header() {
  return "run_id,seed,episode,attack_step,acc,soft_acc,partial_soft_acc,effort,wall_time_s,"
         "raw_divergence,gamma,reward";
}

std::string metrics_csv_row(const std::string& run, std::uint64_t seed, const MetricRow& row) {
  std::string out = run;
  out += ',';
  out += std::to_string(seed);
  out += ',';
  out += std::to_string(row.episode);
  out += ',';
  out += std::to_string(row.attack_step);
  out += ',';
  out += fmt_double(row.acc);
  out += ',';
  out += fmt_double(row.soft_acc);
  out += ',';
  out += fmt_double(row.partial_soft_acc);
  out += ',';
  if (row.attacked) out += fmt_double(row.effort);
  out += ',';
  out += fmt_double(row.wall_time_s);
  out += ',';
  if (row.attacked && row.has_divergence) out += fmt_double(row.raw_divergence);
  out += ',';
  if (row.attacked) out += fmt_double(row.gamma);
  out += ',';
  if (row.attacked) out += fmt_double(row.reward);
  return out;
}

const char* criterion_name(int criterion) {
  switch (criterion) {
    case kCritKlr: return "klr";
    case kCritTargetKlr: return "targetklr";
    case kCritDefaultKlr: return "defaultklr";
    case kCritWd: return "wd";
    case kCritTargetWd: return "targetwd";
    case kCritDefaultWd: return "defaultwd";
    case kCritAcc: return "acc";
    case kCritSoftAcc: return "softacc";
    case kCritPartialSoftAcc: return "partialsoftacc";
    case kCritEffort: return "effort";
    case kCritTime: return "time";
  }
  throw std::out_of_range("criterion_name: bad criterion");
}

bool criterion_higher_better(int criterion) {
  switch (criterion) {
    case kCritAcc:
    case kCritSoftAcc:
    case kCritPartialSoftAcc:
      return true;
    default:
      criterion_name(criterion);  // range check
      return false;
  }
}

const char* aggregation_name(int aggregation) {
  switch (aggregation) {
    case 0: return "last";
    case 1: return "mean";
    case 2: return "cum";
  }
  throw std::out_of_range("aggregation_name: bad aggregation");
}

StrategyArchive make_archive() {
  StrategyArchive archive;
  for (int c = 0; c < kArchiveCriteria; ++c)
    for (int a = 0; a < kArchiveAggregations; ++a)
      archive.slots[size_t(archive_slot(c, a))].best = criterion_higher_better(c)
                                                           ? -std::numeric_limits<double>::infinity()
                                                           : std::numeric_limits<double>::infinity();
  return archive;
}

std::array<double, kArchiveSlots> aggregate_criteria(
    const std::array<std::vector<double>, kArchiveCriteria>& series) {
  std::array<double, kArchiveSlots> out{};
  for (int c = 0; c < kArchiveCriteria; ++c) {
    const std::vector<double>& s = series[size_t(c)];
    if (s.empty()) throw std::invalid_argument("aggregate_criteria: empty series");
    double sum = 0.0;
    for (double v : s) sum += v;
    out[size_t(archive_slot(c, 0))] = s.back();
    out[size_t(archive_slot(c, 1))] = sum / double(s.size());
    out[size_t(archive_slot(c, 2))] = sum;
  }
  return out;
}

std::vector<int> archive_update(StrategyArchive& archive,
                                const std::array<double, kArchiveSlots>& values,
                                const std::shared_ptr<const Mlp>& actor, int episode) {
  std::vector<int> improved;
  for (int c = 0; c < kArchiveCriteria; ++c) {
    const bool higher = criterion_higher_better(c);
    for (int a = 0; a < kArchiveAggregations; ++a) {
      const int slot = archive_slot(c, a);
      ArchiveSlot& entry = archive.slots[size_t(slot)];
      const double v = values[size_t(slot)];
      if (higher ? v >= entry.best : v <= entry.best) {
        entry.best = v;
        entry.episode = episode;
        entry.actor = actor;
        improved.push_back(slot);
      }
    }
  }
  return improved;
}

void save_archive(const StrategyArchive& archive, const std::string& dir) {
  fs::create_directories(dir);
  json index = json::array();
  for (int c = 0; c < kArchiveCriteria; ++c)
    for (int a = 0; a < kArchiveAggregations; ++a) {
      const ArchiveSlot& entry = archive.slots[size_t(archive_slot(c, a))];
      if (!entry.actor) continue;
      std::string base = std::string("actor_") + criterion_name(c) + "_" + aggregation_name(a) + "_" +
                         std::to_string(entry.episode);
      save_mlp(*entry.actor, dir + "/" + base + ".w");
      json meta = {{"criterion", criterion_name(c)},
                   {"aggregation", aggregation_name(a)},
                   {"best", entry.best},
                   {"episode", entry.episode},
                   {"weight_file", base + ".w"},
                   {"higher_better", criterion_higher_better(c)}};
      std::ofstream out(dir + "/slot_" + criterion_name(c) + "_" + aggregation_name(a) + ".json");
      out << meta.dump(2) << '\n';
      index.push_back(meta);
    }
  std::ofstream out(dir + "/archive.json");
  out << index.dump(2) << '\n';
}

EpisodeContext make_episode_context(const ExperimentConfig& cfg) {
  EpisodeContext ctx;
  ctx.spec = cfg.grid;
  ctx.target = default_target(cfg.grid);
  ctx.pi_star = make_target_policy(Mat::Constant(cfg.grid.cells(), kNumActions, 1.0 / kNumActions),
                                   ctx.target);
  ctx.q0 = Vec::Zero(cfg.grid.cells());
  ctx.q0[cfg.grid.start] = 1.0;
  ctx.t_default = make_world(cfg.grid).tensor;
  ctx.cost = ground_metric_matrix(cfg.grid);
  const JointChain perfect = build_joint_chain(ctx.t_default, ctx.pi_star, ctx.q0);
  ctx.perfect_p = perfect.p;
  ctx.perfect_kstep = kstep_distribution(perfect.p, perfect.q0, cfg.discount.k);
  ctx.discount = cfg.discount;
  return ctx;
}

StepDivergences step_divergences(const EpisodeContext& ctx, const TransitionTensor& t_cur,
                                 const Mat& pi) {
  StepDivergences out;
  const JointChain vanilla = build_joint_chain(t_cur, pi, ctx.q0);
  const JointChain target = build_joint_chain(t_cur, ctx.pi_star, ctx.q0);
  const JointChain fallback = build_joint_chain(ctx.t_default, pi, ctx.q0);
  const JointChain* chains[3] = {&vanilla, &target, &fallback};
  const int klr_crit[3] = {kCritKlr, kCritTargetKlr, kCritDefaultKlr};
  const int wd_crit[3] = {kCritWd, kCritTargetWd, kCritDefaultWd};
  for (int i = 0; i < 3; ++i) {
    try {
      out.value[size_t(klr_crit[i])] = klr(chains[i]->p, ctx.perfect_p);
    } catch (const std::runtime_error&) {
      out.value[size_t(klr_crit[i])] = std::numeric_limits<double>::infinity();
      out.klr_ok[size_t(i)] = false;
    }
    const Vec kd = kstep_distribution(chains[i]->p, chains[i]->q0, ctx.discount.k);
    out.value[size_t(wd_crit[i])] = wasserstein1(kd, ctx.perfect_kstep, ctx.cost);
  }
  return out;
}

EpisodeResult run_attack_episode(const ExperimentConfig& cfg, const EpisodeContext& ctx,
                                 const Codec& codec, const Mlp& actor, std::uint64_t victim_seed,
                                 int episode_index, Rng& action_rng, OuNoise* noise,
                                 const StepCallback& after_step) {
  using Clock = std::chrono::steady_clock;
  EpisodeResult er;
  GridWorld world = make_world(cfg.grid);
  Victim victim = make_victim(cfg.grid.cells(), cfg.victim.history_depth);
  Rng victim_rng = seeded_rng(victim_seed, kStreamVictim);
  OuNoise silent;  // placeholder when running noiseless

  const Clock::time_point t0 = Clock::now();
  BehaviorTrace trace = train_and_trace(world, victim, cfg.victim, victim_rng);
  Mat pi = policy_estimate(victim);

  MetricRow row;
  row.episode = episode_index;
  row.attack_step = 0;
  row.acc = target_accuracy(pi, ctx.target);
  row.soft_acc = soft_accuracy(pi, ctx.target);
  row.partial_soft_acc = partial_soft_accuracy(pi, ctx.target);
  row.wall_time_s = cfg.record_wall_time ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
  er.rows.push_back(row);
  er.final_acc = row.acc;

  Vec x(world.altitudes.size() + codec.latent_dim);
  x << world.altitudes, encode(codec, trace);

  for (int t = 1; t <= cfg.attack_horizon; ++t) {
    const Clock::time_point ts = Clock::now();
    const Vec u = select_action(actor, x, noise ? *noise : silent, noise != nullptr, action_rng);
    const Vec h_prev = world.altitudes;
    world = apply_attack(world, u);
    trace = train_and_trace(world, victim, cfg.victim, victim_rng);
    pi = policy_estimate(victim);

    MetricRow r;
    r.episode = episode_index;
    r.attack_step = t;
    r.attacked = true;
    r.acc = target_accuracy(pi, ctx.target);
    r.soft_acc = soft_accuracy(pi, ctx.target);
    r.partial_soft_acc = partial_soft_accuracy(pi, ctx.target);
    r.effort = attack_effort(h_prev, world.altitudes);
    const StepDivergences div = step_divergences(ctx, world.tensor, pi);
    const DiscountReading reading = discount_from_divergences(ctx.discount, div);
    r.has_divergence = ctx.discount.variant != DiscountVariant::kFixed;
    r.raw_divergence = reading.raw_divergence;
    r.gamma = reading.gamma;
    r.reward = cfg.reward_soft_acc ? r.soft_acc : r.acc;

    Vec x_next(x.size());
    x_next << world.altitudes, encode(codec, trace);
    const bool done = r.acc == 1.0 || t == cfg.attack_horizon;
    r.wall_time_s = cfg.record_wall_time ? std::chrono::duration<double>(Clock::now() - ts).count() : 0.0;
    er.rows.push_back(r);

    for (int c = 0; c < 6; ++c) er.series[size_t(c)].push_back(div.value[size_t(c)]);
    er.series[kCritAcc].push_back(r.acc);
    er.series[kCritSoftAcc].push_back(r.soft_acc);
    er.series[kCritPartialSoftAcc].push_back(r.partial_soft_acc);
    er.series[kCritEffort].push_back(r.effort);
    er.series[kCritTime].push_back(r.wall_time_s);

    er.transitions.push_back(TransitionRecord{x, u, r.reward, x_next, reading.gamma, done});
    if (after_step) after_step(er.transitions.back());

    x = x_next;
    er.final_acc = r.acc;
    er.steps = t;
    if (r.acc == 1.0) break;
  }
  return er;
}

Codec ensure_codec(const ExperimentConfig& cfg) {
  if (!cfg.codec.dir.empty()) return load_codec(cfg.codec.dir);
  Rng init_rng = seeded_rng(cfg.codec.seed, kStreamCodecInit);
  Codec codec = make_codec(cfg.grid, init_rng);
  Rng corpus_rng = seeded_rng(cfg.codec.seed, kStreamCodecCorpus);
  std::vector<BehaviorTrace> corpus =
      victim_trace_corpus(cfg.grid, cfg.codec.victim_traces, cfg.codec.max_episodes, cfg.victim, corpus_rng);
  const std::vector<BehaviorTrace> filler = random_trace_corpus(cfg.grid.cells(), cfg.codec.random_traces, corpus_rng);
  corpus.insert(corpus.end(), filler.begin(), filler.end());
  Rng train_rng = seeded_rng(cfg.codec.seed, kStreamCodecTrain);
  pretrain(codec, cfg.grid, corpus, cfg.codec.epochs, cfg.codec.lr, train_rng);
  fs::create_directories(cfg.out_dir);
  save_codec(codec, cfg.out_dir + "/codec");
  return codec;
}

TrainResult train(const ExperimentConfig& cfg) {
  validate_config(cfg);
  fs::create_directories(cfg.out_dir);
  const std::string run = run_id(cfg, cfg.train_seed);

  const Codec codec = ensure_codec(cfg);
  if (codec.grid_m != cfg.grid.cells()) throw std::invalid_argument("train: codec grid does not match config grid");
  if (codec.latent_dim + cfg.grid.cells() != cfg.attacker.state_dim)
    throw std::invalid_argument("train: codec latent dim does not match attacker state dim");
  const EpisodeContext ctx = make_episode_context(cfg);

  Rng init_rng = seeded_rng(cfg.train_seed, kStreamAttackerInit);
  Attacker atk = make_attacker(cfg.attacker, init_rng);
  Rng action_rng = seeded_rng(cfg.train_seed, kStreamAction);
  Rng update_rng = seeded_rng(cfg.train_seed, kStreamUpdate);
  StrategyArchive archive = make_archive();

  TrainResult result;
  result.cfg = cfg;
  result.run = run;
  result.metrics_path = cfg.out_dir + "/metrics.csv";
  result.history_path = cfg.out_dir + "/archive_history.csv";
  result.archive_dir = cfg.out_dir + "/archive";

  json manifest = {{"run_id", run},
                   {"config_digest", config_digest(cfg)},
                   {"code_version", kCodeVersion},
                   {"train_seed", cfg.train_seed},
                   {"eval_seeds", resolved_eval_seeds(cfg)},
                   {"start_time", iso_utc_now()},
                   {"end_time", ""},
                   {"config", json::parse(config_to_json(cfg))}};
  {
    std::ofstream out(cfg.out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }

  std::ofstream metrics(result.metrics_path);
  if (!metrics) throw std::runtime_error("train: cannot open " + result.metrics_path);
  metrics << metrics_csv_header() << '\n';
  std::ofstream history(result.history_path);
  history << "episode,criterion,aggregation,value,best,improved\n";

  for (int ep = 1; ep <= cfg.episodes; ++ep) {
    reset_noise(atk.noise);
    const bool updates_on = ep > cfg.attacker.warmup_episodes;
    const StepCallback cb = [&](const TransitionRecord& rec) {
      store(atk.buffer, rec);
      if (updates_on && int(atk.buffer.records.size()) >= cfg.attacker.batch) update(atk, update_rng);
    };
    const EpisodeResult er =
        run_attack_episode(cfg, ctx, codec, atk.actor, cfg.train_seed, ep, action_rng, &atk.noise, cb);
    for (const MetricRow& row : er.rows) metrics << metrics_csv_row(run, cfg.train_seed, row) << '\n';

    const std::array<double, kArchiveSlots> values = aggregate_criteria(er.series);
    const std::shared_ptr<const Mlp> snapshot = std::make_shared<const Mlp>(atk.actor);
    const std::vector<int> improved = archive_update(archive, values, snapshot, ep);
    std::array<bool, kArchiveSlots> mask{};
    for (int slot : improved) mask[size_t(slot)] = true;
    for (int c = 0; c < kArchiveCriteria; ++c)
      for (int a = 0; a < kArchiveAggregations; ++a) {
        const int slot = archive_slot(c, a);
        history << ep << ',' << criterion_name(c) << ',' << aggregation_name(a) << ','
                << fmt_double(values[size_t(slot)]) << ',' << fmt_double(archive.slots[size_t(slot)].best)
                << ',' << (mask[size_t(slot)] ? 1 : 0) << '\n';
      }
  }
  metrics.close();
  history.close();

  save_archive(archive, result.archive_dir);
  manifest["end_time"] = iso_utc_now();
  {
    std::ofstream out(cfg.out_dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }
  result.archive = archive;
  return result;
}

EvalReport evaluate(const ExperimentConfig& cfg, const Mlp& actor) {
  validate_config(cfg);
  const Codec codec = ensure_codec(cfg);
  const EpisodeContext ctx = make_episode_context(cfg);
  Rng idle_rng = seeded_rng(cfg.train_seed, kStreamAction);  // unused: noiseless attacks

  EvalReport report;
  report.run = run_id(cfg, cfg.train_seed);
  const std::vector<std::uint64_t> diff_seeds = resolved_eval_seeds(cfg);

  std::vector<std::pair<std::uint64_t, bool>> plan;
  for (int i = 0; i < 10; ++i) plan.emplace_back(cfg.train_seed, true);
  for (std::uint64_t s : diff_seeds) plan.emplace_back(s, false);

  int episode = 0;
  double same_acc = 0.0, diff_acc = 0.0, same_soft = 0.0, diff_soft = 0.0, effort_sum = 0.0;
  int same_count = 0, diff_count = 0;
  for (const auto& [seed, same] : plan) {
    ++episode;
    const EpisodeResult er =
        run_attack_episode(cfg, ctx, codec, actor, seed, episode, idle_rng, nullptr, nullptr);
    EvalTrace trace;
    trace.victim_seed = seed;
    trace.same_seed = same;
    trace.rows = er.rows;
    trace.final_acc = er.final_acc;
    double effort = 0.0;
    for (const MetricRow& row : er.rows)
      if (row.attacked) effort += row.effort;
    trace.mean_effort = er.steps > 0 ? effort / er.steps : 0.0;
    const double final_soft = er.rows.back().soft_acc;
    if (same) {
      same_acc += trace.final_acc;
      same_soft += final_soft;
      ++same_count;
    } else {
      diff_acc += trace.final_acc;
      diff_soft += final_soft;
      ++diff_count;
    }
    effort_sum += trace.mean_effort;
    report.traces.push_back(std::move(trace));
  }
  if (same_count > 0) {
    report.same_mean_final_acc = same_acc / same_count;
    report.same_mean_final_soft = same_soft / same_count;
  }
  if (diff_count > 0) {
    report.diff_mean_final_acc = diff_acc / diff_count;
    report.diff_mean_final_soft = diff_soft / diff_count;
  }
  if (!report.traces.empty()) report.mean_effort = effort_sum / double(report.traces.size());
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  json traces = json::array();
  for (const EvalTrace& trace : report.traces) {
    json acc = json::array(), soft = json::array(), effort = json::array();
    for (const MetricRow& row : trace.rows) {
      acc.push_back(row.acc);
      soft.push_back(row.soft_acc);
      if (row.attacked) effort.push_back(row.effort);
    }
    traces.push_back({{"victim_seed", trace.victim_seed},
                      {"same_seed", trace.same_seed},
                      {"final_acc", trace.final_acc},
                      {"mean_effort", trace.mean_effort},
                      {"acc", acc},
                      {"soft_acc", soft},
                      {"effort", effort}});
  }
  const json j = {{"run_id", report.run},
                  {"traces", traces},
                  {"same_mean_final_acc", report.same_mean_final_acc},
                  {"diff_mean_final_acc", report.diff_mean_final_acc},
                  {"same_mean_final_soft", report.same_mean_final_soft},
                  {"diff_mean_final_soft", report.diff_mean_final_soft},
                  {"mean_effort", report.mean_effort}};
  return j.dump(2);
}

void write_eval(const EvalReport& report, const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(dir + "/eval_metrics.csv");
  csv << metrics_csv_header() << '\n';
  int episode = 0;
  for (const EvalTrace& trace : report.traces) {
    ++episode;
    for (const MetricRow& row : trace.rows) {
      MetricRow r = row;
      r.episode = episode;
      csv << metrics_csv_row(report.run, trace.victim_seed, r) << '\n';
    }
  }
  std::ofstream out(dir + "/eval_report.json");
  out << eval_report_json(report) << '\n';
}

WilcoxonResult compare_final_acc(const EvalReport& a, const EvalReport& b,
                                 const std::string& alternative) {
  if (a.traces.size() != b.traces.size()) throw std::invalid_argument("compare_final_acc: trace count mismatch");
  std::vector<double> xs, ys;
  for (size_t i = 0; i < a.traces.size(); ++i) {
    xs.push_back(a.traces[i].final_acc);
    ys.push_back(b.traces[i].final_acc);
  }
  return wilcoxon_signed_rank(xs, ys, alternative);
}

SweepResult sweep_fixed(const ExperimentConfig& base, const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("sweep_fixed: empty gamma list");
  ExperimentConfig shared = base;
  if (shared.codec.dir.empty()) {
    ensure_codec(shared);  // pretrains once and saves under the sweep root
    shared.codec.dir = shared.out_dir + "/codec";
  }

  SweepResult result;
  result.gammas = gammas;
  for (double g : gammas) {
    ExperimentConfig cfg = shared;
    cfg.discount = default_discount_config(DiscountVariant::kFixed);
    cfg.discount.fixed_gamma = g;
    char label[16];
    std::snprintf(label, sizeof label, "%.2f", g);
    cfg.out_dir = base.out_dir + "/fixed_" + label;
    TrainResult tr = train(cfg);
    const ArchiveSlot& slot = tr.archive.slots[size_t(archive_slot(kCritAcc, 1))];
    if (!slot.actor) throw std::logic_error("sweep_fixed: mean-accuracy slot empty after training");
    EvalReport report = evaluate(cfg, *slot.actor);
    write_eval(report, cfg, cfg.out_dir);
    result.runs.push_back(std::move(tr));
    result.reports.push_back(std::move(report));
  }

  result.table_path = base.out_dir + "/comparison.csv";
  std::ofstream table(result.table_path);
  table << "gamma,same_mean_final_acc,diff_mean_final_acc,mean_effort\n";
  for (size_t i = 0; i < gammas.size(); ++i)
    table << fmt_double(gammas[i]) << ',' << fmt_double(result.reports[i].same_mean_final_acc) << ','
          << fmt_double(result.reports[i].diff_mean_final_acc) << ','
          << fmt_double(result.reports[i].mean_effort) << '\n';
  return result;
}

}  // namespace gridpoison

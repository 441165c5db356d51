#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "gridpoison/harness.hpp"

namespace {

using namespace gridpoison;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path) {
  return path.empty() ? default_config() : config_from_json(read_file(path));
}

void apply_discount_flag(ExperimentConfig& cfg, const std::string& flag) {
  if (flag.empty()) return;
  if (flag.rfind("fixed:", 0) == 0) {
    cfg.discount = default_discount_config(DiscountVariant::kFixed);
    cfg.discount.fixed_gamma = std::stod(flag.substr(6));
  } else {
    cfg.discount = default_discount_config(variant_from_name(flag));
  }
}

std::vector<double> final_accs_from_report(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  std::vector<double> accs;
  for (const nlohmann::json& trace : j.at("traces")) accs.push_back(trace.at("final_acc").get<double>());
  return accs;
}

// Per-episode mean accuracy over attack steps from a metrics.csv.
std::vector<double> episode_mean_acc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> sums, counts;
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() < 5) continue;
    const int episode = std::stoi(fields[2]);
    const int step = std::stoi(fields[3]);
    if (step == 0) continue;
    if (int(sums.size()) < episode) {
      sums.resize(size_t(episode), 0.0);
      counts.resize(size_t(episode), 0.0);
    }
    sums[size_t(episode - 1)] += std::stod(fields[4]);
    counts[size_t(episode - 1)] += 1.0;
  }
  std::vector<double> means;
  for (size_t i = 0; i < sums.size(); ++i) means.push_back(counts[i] > 0 ? sums[i] / counts[i] : 0.0);
  return means;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-discount environment-poisoning laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, discount_flag, codec_dir, actor_path;
  long long seed = -1, episodes = -1;

  CLI::App* pretrain_cmd = app.add_subcommand("pretrain-codec", "Pretrain the trace autoencoder");
  pretrain_cmd->add_option("--config", config_path, "Experiment config JSON");
  pretrain_cmd->add_option("--out", out_dir, "Output directory (codec saved to <out>/codec)");
  pretrain_cmd->add_option("--seed", seed, "Codec pretraining seed");

  CLI::App* train_cmd = app.add_subcommand("train", "Train one attack model");
  train_cmd->add_option("--config", config_path, "Experiment config JSON");
  train_cmd->add_option("--seed", seed, "Training seed");
  train_cmd->add_option("--out", out_dir, "Output directory");
  train_cmd->add_option("--discount", discount_flag, "wd|klr|targetwd|targetklr|fixed:<gamma>");
  train_cmd->add_option("--episodes", episodes, "Attack episodes");
  train_cmd->add_option("--codec", codec_dir, "Pretrained codec directory");

  CLI::App* sweep_cmd = app.add_subcommand("sweep-fixed", "Train one run per fixed discount");
  std::vector<double> gammas;
  sweep_cmd->add_option("--config", config_path, "Experiment config JSON");
  sweep_cmd->add_option("--seed", seed, "Training seed");
  sweep_cmd->add_option("--out", out_dir, "Sweep root directory");
  sweep_cmd->add_option("--episodes", episodes, "Attack episodes per run");
  sweep_cmd->add_option("--codec", codec_dir, "Pretrained codec directory");
  sweep_cmd->add_option("--gammas", gammas, "Fixed discounts to sweep");

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate an archived actor");
  eval_cmd->add_option("--config", config_path, "Experiment config JSON");
  eval_cmd->add_option("--actor", actor_path, "Actor weight file")->required();
  eval_cmd->add_option("--out", out_dir, "Output directory");
  eval_cmd->add_option("--seed", seed, "Training seed the actor came from");
  eval_cmd->add_option("--codec", codec_dir, "Pretrained codec directory");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Wilcoxon tests and sliding-window exports");
  std::string eval_a, eval_b, alternative = "greater", metrics_path;
  int window = 75;
  analyze_cmd->add_option("--eval-a", eval_a, "First eval_report.json");
  analyze_cmd->add_option("--eval-b", eval_b, "Second eval_report.json");
  analyze_cmd->add_option("--alternative", alternative, "greater|less");
  analyze_cmd->add_option("--metrics", metrics_path, "metrics.csv for the sliding-window export");
  analyze_cmd->add_option("--window", window, "Sliding window length");
  analyze_cmd->add_option("--out", out_dir, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed >= 0) cfg.train_seed = std::uint64_t(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (episodes > 0) cfg.episodes = int(episodes);
    if (!codec_dir.empty()) cfg.codec.dir = codec_dir;
    apply_discount_flag(cfg, discount_flag);

    if (pretrain_cmd->parsed()) {
      if (seed >= 0) cfg.codec.seed = std::uint64_t(seed);
      cfg.codec.dir.clear();  // force a fresh pretraining
      const Codec codec = ensure_codec(cfg);
      Rng held_rng = seeded_rng(cfg.codec.seed + 1, 99);
      const std::vector<BehaviorTrace> held =
          victim_trace_corpus(cfg.grid, std::max(1, cfg.codec.victim_traces / 10), cfg.codec.max_episodes,
                              cfg.victim, held_rng);
      std::cout << "codec saved to " << cfg.out_dir << "/codec\n"
                << "held-out loss " << corpus_loss(codec, cfg.grid, held) << ", reconstruction accuracy "
                << reconstruction_accuracy(codec, cfg.grid, held) << "\n";
    } else if (train_cmd->parsed()) {
      const TrainResult result = train(cfg);
      std::cout << "run " << result.run << "\nmetrics " << result.metrics_path << "\narchive "
                << result.archive_dir << "\n";
      const ArchiveSlot& slot = result.archive.slots[size_t(archive_slot(kCritAcc, 1))];
      std::cout << "best mean accuracy " << slot.best << " at episode " << slot.episode << "\n";
    } else if (sweep_cmd->parsed()) {
      const SweepResult result = sweep_fixed(cfg, gammas.empty() ? default_sweep_gammas() : gammas);
      std::cout << "comparison table " << result.table_path << "\n";
    } else if (eval_cmd->parsed()) {
      const Mlp actor = load_mlp(actor_path);
      const EvalReport report = evaluate(cfg, actor);
      const std::string dir = out_dir.empty() ? cfg.out_dir + "/eval" : out_dir;
      write_eval(report, cfg, dir);
      std::cout << "same-seed mean final accuracy " << report.same_mean_final_acc
                << "\ndistinct-seed mean final accuracy " << report.diff_mean_final_acc << "\nreport "
                << dir << "/eval_report.json\n";
    } else if (analyze_cmd->parsed()) {
      if (!eval_a.empty() && !eval_b.empty()) {
        const WilcoxonResult r =
            wilcoxon_signed_rank(final_accs_from_report(eval_a), final_accs_from_report(eval_b), alternative);
        std::cout << "wilcoxon W " << r.w << " p " << r.p << " n " << r.n << "\n";
        if (!out_dir.empty()) {
          const nlohmann::json j = {{"w", r.w}, {"p", r.p}, {"n", r.n}, {"alternative", alternative}};
          std::ofstream out(out_dir);
          out << j.dump(2) << '\n';
        }
      } else if (!metrics_path.empty()) {
        const std::vector<double> means = episode_mean_acc(metrics_path);
        const std::vector<double> peaks = sliding_window_max(means, window);
        std::ostream* out = &std::cout;
        std::ofstream file;
        if (!out_dir.empty()) {
          file.open(out_dir);
          out = &file;
        }
        *out << "episode,mean_acc,window_max\n";
        for (size_t i = 0; i < means.size(); ++i)
          *out << (i + 1) << ',' << means[i] << ',' << peaks[i] << '\n';
      } else {
        throw std::runtime_error("analyze needs --eval-a/--eval-b or --metrics");
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

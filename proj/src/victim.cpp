#include "gridpoison/victim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gridpoison {

Victim make_victim(int cells, int history_depth) {
  if (cells < 1 || history_depth < 1) throw std::invalid_argument("make_victim: bad sizes");
  Victim v;
  v.q = Mat::Zero(cells, kNumActions);
  v.history.assign(size_t(cells), {});
  v.history_depth = history_depth;
  return v;
}

Vec action_probabilities(const Mat& q, int state, double temperature) {
  if (state < 0 || state >= q.rows()) throw std::out_of_range("action_probabilities: bad state");
  if (temperature <= 0.0) throw std::invalid_argument("action_probabilities: non-positive temperature");
  Vec logits = q.row(state).transpose() / temperature;
  const double mx = logits.maxCoeff();
  Vec p = (logits.array() - mx).exp();
  return p / p.sum();
}

int softmax_action(const Mat& q, int state, double temperature, Rng& rng) {
  const Vec p = action_probabilities(q, state, temperature);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (int a = 0; a < p.size(); ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  return int(p.size()) - 1;
}

void td_update(Mat& q, int s, int a, double r, int s_next, bool terminal, const VictimParams& params) {
  if (s < 0 || s >= q.rows() || s_next < 0 || s_next >= q.rows()) throw std::out_of_range("td_update: bad state");
  if (a < 0 || a >= q.cols()) throw std::out_of_range("td_update: bad action");
  const double bootstrap = terminal ? 0.0 : q.row(s_next).maxCoeff();
  q(s, a) += params.alpha * (r + params.gamma * bootstrap - q(s, a));
}

namespace {

void push_history(Victim& victim, int s, int a) {
  auto& h = victim.history[size_t(s)];
  h.push_back(std::int8_t(a));
  if (int(h.size()) > victim.history_depth) h.erase(h.begin());
}

}  // namespace

BehaviorTrace train_and_trace(const GridWorld& world, Victim& victim, const VictimParams& params, Rng& rng) {
  const int m = world.spec.cells();
  if (victim.q.rows() != m) throw std::invalid_argument("train_and_trace: victim/world size mismatch");
  BehaviorTrace trace;
  trace.symbols.assign(size_t(m), std::int8_t(kNoAction));
  for (int ep = 0; ep < params.episodes_per_attack_step; ++ep) {
    int s = world.spec.start;
    for (int t = 0; t < world.spec.max_episode_steps; ++t) {
      const int a = softmax_action(victim.q, s, params.temperature, rng);
      const StepResult sr = step(world, s, a, rng);
      trace.symbols[size_t(s)] = std::int8_t(a);
      push_history(victim, s, a);
      td_update(victim.q, s, a, sr.reward, sr.next_state, sr.done, params);
      s = sr.next_state;
      if (sr.done) break;
    }
  }
  return trace;
}

Mat policy_estimate(const Victim& victim) {
  const int m = int(victim.history.size());
  Mat pi = Mat::Constant(m, kNumActions, 1.0 / kNumActions);
  for (int s = 0; s < m; ++s) {
    const auto& h = victim.history[size_t(s)];
    if (h.empty()) continue;
    Eigen::RowVector4d counts = Eigen::RowVector4d::Zero();
    for (std::int8_t a : h) counts[a] += 1.0;
    pi.row(s) = counts / double(h.size());
  }
  return pi;
}

namespace {

// Penalty for a target move that a flat-world shortest-path learner would also
// take: matching the unique distance-reducing action is worst, matching one of
// two is mildly bad, everything else is nearly free.
double overlap_weight(const GridSpec& spec, int cell, int action) {
  int reducing = 0;
  bool action_reduces = false;
  const int d0 = manhattan(spec, cell, spec.goal);
  for (int a = 0; a < kNumActions; ++a) {
    const int dest = neighbor(spec, cell, a);
    if (dest == cell) continue;
    if (manhattan(spec, dest, spec.goal) < d0) {
      ++reducing;
      if (a == action) action_reduces = true;
    }
  }
  if (!action_reduces) return 0.05;
  return reducing == 1 ? 0.85 : 0.33;
}

// Extra penalty per visit to a cell on the flat-world learner's converged
// route; keeps the detour as disjoint from that route as geometry allows.
constexpr double kRouteCellPenalty = 0.40;

struct PathSearch {
  const GridSpec& spec;
  std::uint64_t route = 0;
  int length = 0;
  std::uint64_t visited = 0;
  std::vector<int> cells, actions;
  std::vector<int> best_cells, best_actions;
  double best_score = 1e300;
  long budget = 20'000'000;

  void dfs(int cur, int depth, double score) {
    if (--budget < 0) return;
    if (score >= best_score) return;
    const int remaining = length - depth;
    const int dist = manhattan(spec, cur, spec.goal);
    if (dist > remaining || ((remaining - dist) & 1)) return;
    if (cur == spec.goal) {
      if (depth == length) {
        best_score = score;
        best_cells = cells;
        best_actions = actions;
      }
      return;  // the path may not pass through the goal
    }
    if (depth == length) return;
    for (int a = 0; a < kNumActions; ++a) {
      const int nxt = neighbor(spec, cur, a);
      if (nxt == cur || (visited >> nxt) & 1) continue;
      visited |= 1ull << nxt;
      cells.push_back(cur);
      actions.push_back(a);
      dfs(nxt, depth + 1, score + overlap_weight(spec, cur, a) +
                              (((route >> cur) & 1) ? kRouteCellPenalty : 0.0));
      cells.pop_back();
      actions.pop_back();
      visited &= ~(1ull << nxt);
    }
  }
};

}  // namespace

TargetSpec default_target(const GridSpec& spec) {
  validate_spec(spec);
  if (spec.cells() > 64) throw std::invalid_argument("default_target: grid too large");
  const int L = 3 * manhattan(spec, spec.start, spec.goal);
  if (L + 1 > spec.cells())
    throw std::invalid_argument("default_target: no simple path of three times the optimal length fits this grid");
  // Interior cells of the route a flat-world learner converges to (greedy
  // lowest-indexed distance-reducing action); endpoints stay shared.
  std::uint64_t route = 0;
  for (int walk = spec.start; walk != spec.goal;) {
    const int d0 = manhattan(spec, walk, spec.goal);
    for (int a = 0; a < kNumActions; ++a) {
      const int dest = neighbor(spec, walk, a);
      if (dest != walk && manhattan(spec, dest, spec.goal) < d0) {
        walk = dest;
        break;
      }
    }
    if (walk != spec.goal) route |= 1ull << walk;
  }
  PathSearch search{spec};
  search.route = route;
  search.length = L;
  search.visited = 1ull << spec.start;
  search.dfs(spec.start, 0, 0.0);
  if (search.best_cells.empty())
    throw std::invalid_argument("default_target: no simple path of three times the optimal length exists");
  TargetSpec target;
  target.states = search.best_cells;
  target.actions = search.best_actions;
  return target;
}

Mat make_target_policy(const Mat& pi, const TargetSpec& target) {
  Mat out = pi;
  for (size_t i = 0; i < target.states.size(); ++i) {
    const int s = target.states[i];
    if (s < 0 || s >= out.rows()) throw std::out_of_range("make_target_policy: bad target state");
    out.row(s).setZero();
    out(s, target.actions[i]) = 1.0;
  }
  return out;
}

BehaviorTrace make_target_trace(const BehaviorTrace& trace, const TargetSpec& target) {
  BehaviorTrace out = trace;
  for (size_t i = 0; i < target.states.size(); ++i) {
    const int s = target.states[i];
    if (s < 0 || s >= int(out.symbols.size())) throw std::out_of_range("make_target_trace: bad target state");
    out.symbols[size_t(s)] = std::int8_t(target.actions[i]);
  }
  return out;
}

std::string trace_to_string(const BehaviorTrace& trace) {
  std::string s;
  s.reserve(trace.symbols.size());
  for (std::int8_t sym : trace.symbols) s.push_back(kSymbolChar[sym]);
  return s;
}

BehaviorTrace trace_from_string(const std::string& text) {
  BehaviorTrace trace;
  trace.symbols.reserve(text.size());
  for (char c : text) {
    int sym = -1;
    for (int i = 0; i <= kNoAction; ++i)
      if (kSymbolChar[i] == c) sym = i;
    if (sym < 0) throw std::invalid_argument("trace_from_string: bad symbol");
    trace.symbols.push_back(std::int8_t(sym));
  }
  return trace;
}

std::string policy_to_csv(const Mat& pi) {
  std::string out;
  char buf[64];
  for (int s = 0; s < pi.rows(); ++s) {
    for (int a = 0; a < pi.cols(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", pi(s, a));
      out += buf;
      out.push_back(a + 1 == pi.cols() ? '\n' : ',');
    }
  }
  return out;
}

Mat policy_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
    rows.push_back(row);
  }
  if (rows.empty()) throw std::invalid_argument("policy_from_csv: empty input");
  Mat pi(long(rows.size()), long(rows[0].size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw std::invalid_argument("policy_from_csv: ragged rows");
    for (size_t c = 0; c < rows[r].size(); ++c) pi(long(r), long(c)) = rows[r][c];
  }
  return pi;
}

}  // namespace gridpoison

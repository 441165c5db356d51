#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridpoison/victim.hpp"

using namespace gridpoison;

namespace {
// exp(1)/(exp(1)+3) and 1/(exp(1)+3): softmax of (1,0,0,0) at temperature 1.
constexpr double kHot = 0.4753668864186717;
constexpr double kCold = 0.17487770452710946;

// Follows argmax actions along intended moves; returns steps to goal (cap 64).
int greedy_path_length(const GridSpec& spec, const Mat& q) {
  int s = spec.start;
  for (int t = 0; t < 64; ++t) {
    if (s == spec.goal) return t;
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
      if (q(s, a) > q(s, best)) best = a;
    s = neighbor(spec, s, best);
  }
  return 64;
}
}  // namespace

TEST_CASE("fresh victims start blank") {
  const Victim v = make_victim(16, 8);
  CHECK(v.q.rows() == 16);
  CHECK(v.q.cols() == 4);
  CHECK(v.q.cwiseAbs().maxCoeff() == 0.0);
  CHECK(v.history.size() == 16);
  for (const auto& h : v.history) CHECK(h.empty());
  CHECK_THROWS_AS(make_victim(0, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_victim(16, 0), std::invalid_argument);
}

TEST_CASE("action probabilities match the softmax oracle") {
  Mat q = Mat::Zero(2, 4);
  q(0, 2) = 1.0;
  const Vec p = action_probabilities(q, 0, 1.0);
  CHECK(p[2] == doctest::Approx(kHot).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(kCold).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(kCold).epsilon(1e-12));
  CHECK(p[3] == doctest::Approx(kCold).epsilon(1e-12));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Uniform row stays uniform; temperature errors throw.
  const Vec u = action_probabilities(q, 1, 1.0);
  for (int a = 0; a < 4; ++a) CHECK(u[a] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(action_probabilities(q, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(action_probabilities(q, 5, 1.0), std::out_of_range);
}

TEST_CASE("sampled actions follow the softmax frequencies") {
  Mat q = Mat::Zero(1, 4);
  q(0, 2) = 1.0;
  Rng rng = seeded_rng(2, 0);
  int counts[4] = {0, 0, 0, 0};
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[softmax_action(q, 0, 1.0, rng)];
  CHECK(double(counts[2]) / n == doctest::Approx(kHot).epsilon(0.02));
  CHECK(double(counts[0]) / n == doctest::Approx(kCold).epsilon(0.05));
}

TEST_CASE("td updates move q by exactly the scaled temporal difference") {
  VictimParams params;
  Mat q = Mat::Zero(16, 4);
  td_update(q, 0, 2, -1.0, 1, false, params);
  CHECK(q(0, 2) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(q.cwiseAbs().sum() == doctest::Approx(0.1).epsilon(1e-12));

  // Next-state maximum feeds the non-terminal target.
  q.setZero();
  q(1, 3) = 2.0;
  td_update(q, 0, 0, -1.0, 1, false, params);
  CHECK(q(0, 0) == doctest::Approx(0.1 * (-1.0 + 0.9 * 2.0)).epsilon(1e-12));

  // Terminal transitions ignore the next-state value entirely.
  q.setZero();
  q(1, 3) = 100.0;
  td_update(q, 0, 0, -1.0, 1, true, params);
  CHECK(q(0, 0) == doctest::Approx(-0.1).epsilon(1e-15));
}

TEST_CASE("q-learning on the flat world finds a shortest greedy path") {
  const GridWorld world = default_env();
  VictimParams params;
  Victim victim = make_victim(world.spec.cells(), params.history_depth);
  Rng rng = seeded_rng(0, 1);
  const int optimal = manhattan(world.spec, world.spec.start, world.spec.goal);
  bool solved = false;
  for (int bout = 0; bout < 25 && !solved; ++bout) {  // 25 * 80 = 2000 episodes
    train_and_trace(world, victim, params, rng);
    solved = greedy_path_length(world.spec, victim.q) == optimal;
  }
  CHECK(solved);
}

TEST_CASE("train_and_trace is deterministic under a fixed seed") {
  const GridWorld world = default_env();
  VictimParams params;
  Victim v1 = make_victim(world.spec.cells(), params.history_depth);
  Victim v2 = make_victim(world.spec.cells(), params.history_depth);
  Rng r1 = seeded_rng(7, 1);
  Rng r2 = seeded_rng(7, 1);
  const BehaviorTrace t1 = train_and_trace(world, v1, params, r1);
  const BehaviorTrace t2 = train_and_trace(world, v2, params, r2);
  CHECK(t1.symbols == t2.symbols);
  CHECK((v1.q - v2.q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("policy estimates fall back to uniform and count recent actions") {
  Victim v = make_victim(4, 8);
  Mat pi = policy_estimate(v);
  CHECK(pi.rows() == 4);
  CHECK((pi.array() == 0.25).all());

  v.history[1] = {std::int8_t(kEast)};
  v.history[3] = {std::int8_t(kNorth), std::int8_t(kSouth), std::int8_t(kSouth), std::int8_t(kSouth)};
  pi = policy_estimate(v);
  CHECK(pi(0, 0) == 0.25);
  CHECK(pi(1, kEast) == 1.0);
  CHECK(pi(1, kNorth) == 0.0);
  CHECK(pi(3, kNorth) == doctest::Approx(0.25));
  CHECK(pi(3, kSouth) == doctest::Approx(0.75));
  for (int s = 0; s < 4; ++s) CHECK(pi.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("history keeps only the most recent actions per state") {
  const GridWorld world = default_env();
  VictimParams params;
  params.episodes_per_attack_step = 40;
  Victim victim = make_victim(world.spec.cells(), params.history_depth);
  Rng rng = seeded_rng(9, 1);
  train_and_trace(world, victim, params, rng);
  bool any = false;
  for (const auto& h : victim.history) {
    CHECK(int(h.size()) <= params.history_depth);
    any = any || !h.empty();
  }
  CHECK(any);
  CHECK(int(victim.history[size_t(world.spec.start)].size()) == params.history_depth);
}

TEST_CASE("the default target is a simple triple-length detour") {
  GridSpec spec;
  const TargetSpec t = default_target(spec);
  const int optimal = manhattan(spec, spec.start, spec.goal);
  CHECK(t.count() == 3 * optimal);
  CHECK(int(t.actions.size()) == t.count());
  CHECK(t.states[0] == spec.start);
  std::vector<int> seen;
  for (int i = 0; i < t.count(); ++i) {
    const int s = t.states[size_t(i)];
    CHECK(s != spec.goal);  // goal appears only as the terminus
    for (int prev : seen) CHECK(prev != s);
    seen.push_back(s);
    const int next = neighbor(spec, s, t.actions[size_t(i)]);
    CHECK(next != s);  // every move stays on the grid
    if (i + 1 < t.count())
      CHECK(next == t.states[size_t(i) + 1]);
    else
      CHECK(next == spec.goal);
  }
  // Deterministic: a second call returns the identical path.
  const TargetSpec again = default_target(spec);
  CHECK(again.states == t.states);
  CHECK(again.actions == t.actions);
}

TEST_CASE("the default target dodges the flat-world route where geometry allows") {
  GridSpec spec;
  const TargetSpec t = default_target(spec);
  // Flat-world learners converge to 1 -> 5 -> 9 -> 13 -> 14; every 12-move
  // simple detour must borrow at least one of its interior cells, and exactly
  // one is achievable.
  int shared = 0;
  for (size_t i = 1; i < t.states.size(); ++i)
    if (t.states[i] == 5 || t.states[i] == 9 || t.states[i] == 13) ++shared;
  CHECK(shared == 1);
  // Pinned output: the unique minimal-sharing detour for the default grid.
  const std::vector<int> cells = {1, 0, 4, 8, 9, 10, 6, 2, 3, 7, 11, 15};
  const std::vector<int> actions = {kWest,  kSouth, kSouth, kEast, kEast, kNorth,
                                    kNorth, kEast,  kSouth, kSouth, kSouth, kWest};
  CHECK(t.states == cells);
  CHECK(t.actions == actions);
}

TEST_CASE("default targets reject grids without room for the detour") {
  GridSpec corner;
  corner.start = 0;
  corner.goal = 15;  // 4x4 corner-to-corner needs 19 distinct cells
  CHECK_THROWS_AS(default_target(corner), std::invalid_argument);
  GridSpec tiny;
  tiny.width = 2;
  tiny.height = 1;
  tiny.start = 0;
  tiny.goal = 1;
  CHECK_THROWS_AS(default_target(tiny), std::invalid_argument);
}

TEST_CASE("target overlays rewrite only the target rows and cells") {
  GridSpec spec;
  const TargetSpec t = default_target(spec);
  const Mat base = Mat::Constant(spec.cells(), kNumActions, 0.25);
  const Mat pi = make_target_policy(base, t);
  std::vector<bool> targeted(size_t(spec.cells()), false);
  for (int i = 0; i < t.count(); ++i) {
    const int s = t.states[size_t(i)];
    targeted[size_t(s)] = true;
    for (int a = 0; a < kNumActions; ++a)
      CHECK(pi(s, a) == (a == t.actions[size_t(i)] ? 1.0 : 0.0));
  }
  for (int s = 0; s < spec.cells(); ++s)
    if (!targeted[size_t(s)])
      for (int a = 0; a < kNumActions; ++a) CHECK(pi(s, a) == 0.25);

  BehaviorTrace blank;
  blank.symbols.assign(size_t(spec.cells()), std::int8_t(kNoAction));
  blank.symbols[15] = std::int8_t(kWest);
  const BehaviorTrace overlay = make_target_trace(blank, t);
  for (int i = 0; i < t.count(); ++i)
    CHECK(int(overlay.symbols[size_t(t.states[size_t(i)])]) == t.actions[size_t(i)]);
  CHECK(int(overlay.symbols[15]) == int(kWest));
}

TEST_CASE("traces and policies round-trip through their text forms") {
  BehaviorTrace trace;
  trace.symbols = {0, 1, 2, 3, 4, 2, 0, 4};
  const std::string text = trace_to_string(trace);
  CHECK(text.size() >= trace.symbols.size());
  const BehaviorTrace back = trace_from_string(text);
  CHECK(back.symbols == trace.symbols);
  CHECK_THROWS_AS(trace_from_string("NSQ"), std::invalid_argument);

  Mat pi = Mat::Constant(3, 4, 0.25);
  pi(1, 0) = 1.0;
  pi(1, 1) = pi(1, 2) = pi(1, 3) = 0.0;
  const Mat round = policy_from_csv(policy_to_csv(pi));
  CHECK(round.rows() == 3);
  CHECK((round - pi).cwiseAbs().maxCoeff() < 1e-15);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridpoison/gridworld.hpp"

using namespace gridpoison;

namespace {
// Flat-world softmax masses: exp(3)/(exp(3)+3) for the intended move, the rest
// split evenly.
constexpr double kIntended = 0.8700485065614078;
constexpr double kSideways = 0.04331716447953073;
}  // namespace

TEST_CASE("spec validation rejects malformed grids") {
  GridSpec spec;
  CHECK_NOTHROW(validate_spec(spec));
  GridSpec bad = spec;
  bad.width = 0;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
  bad = spec;
  bad.start = bad.goal;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
  bad = spec;
  bad.goal = 16;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
  bad = spec;
  bad.h_lo = 6.0;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
  bad = spec;
  bad.kappa = -0.1;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
  bad = spec;
  bad.max_episode_steps = 0;
  CHECK_THROWS_AS(validate_spec(bad), std::invalid_argument);
}

TEST_CASE("neighbor stays in place off-grid") {
  GridSpec spec;
  CHECK(neighbor(spec, 0, kNorth) == 0);
  CHECK(neighbor(spec, 0, kWest) == 0);
  CHECK(neighbor(spec, 0, kEast) == 1);
  CHECK(neighbor(spec, 0, kSouth) == 4);
  CHECK(neighbor(spec, 15, kSouth) == 15);
  CHECK(neighbor(spec, 15, kEast) == 15);
  CHECK(manhattan(spec, 1, 14) == 4);
  CHECK(manhattan(spec, 14, 1) == 4);
  CHECK(manhattan(spec, 5, 5) == 0);
}

TEST_CASE("flat world interior row matches the softmax oracle") {
  const GridWorld world = default_env();
  // Cell 5 = (1,1) is interior: all four moves stay on the grid.
  const Vec north = transition_probs(world, 5, kNorth);
  CHECK(north.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(north[1] == doctest::Approx(kIntended).epsilon(1e-12));
  CHECK(north[9] == doctest::Approx(kSideways).epsilon(1e-12));
  CHECK(north[4] == doctest::Approx(kSideways).epsilon(1e-12));
  CHECK(north[6] == doctest::Approx(kSideways).epsilon(1e-12));
  CHECK(north[5] == 0.0);
}

TEST_CASE("off-grid probability folds onto the current cell") {
  const GridWorld world = default_env();
  // Cell 0: north and west leave the grid.
  const Vec east = transition_probs(world, 0, kEast);
  CHECK(east[1] == doctest::Approx(kIntended).epsilon(1e-12));
  CHECK(east[4] == doctest::Approx(kSideways).epsilon(1e-12));
  CHECK(east[0] == doctest::Approx(2.0 * kSideways).epsilon(1e-12));
  CHECK(east.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rows are stochastic for random altitude fields") {
  GridSpec spec;
  Rng rng = seeded_rng(5, 0);
  std::uniform_real_distribution<double> alt(spec.h_lo, spec.h_hi);
  for (int trial = 0; trial < 20; ++trial) {
    Vec h(spec.cells());
    for (long i = 0; i < h.size(); ++i) h[i] = alt(rng);
    const GridWorld world = make_world(spec, h);
    for (int a = 0; a < kNumActions; ++a)
      for (int s = 0; s < spec.cells(); ++s) {
        const Vec row = transition_probs(world, s, a);
        CHECK(row.minCoeff() >= 0.0);
        CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("raising a destination makes it less likely") {
  GridSpec spec;
  const GridWorld flat = make_world(spec);
  Vec h = flat.altitudes;
  h[1] = 5.0;  // wall at the north neighbor of cell 5
  const GridWorld hill = make_world(spec, h);
  CHECK(transition_probs(hill, 5, kNorth)[1] < transition_probs(flat, 5, kNorth)[1]);
  CHECK(transition_probs(hill, 5, kEast)[1] < transition_probs(flat, 5, kEast)[1]);
  // Lowering a destination attracts mass.
  h = flat.altitudes;
  h[9] = 0.0;
  const GridWorld dip = make_world(spec, h);
  CHECK(transition_probs(dip, 5, kSouth)[9] > transition_probs(flat, 5, kSouth)[9]);
}

TEST_CASE("altitude changes shift mass smoothly and keep rows stochastic") {
  GridSpec spec;
  const GridWorld flat = make_world(spec);
  Vec u = Vec::Zero(spec.cells());
  u[9] = 1.0;
  const GridWorld bumped = apply_attack(flat, u);
  CHECK(bumped.altitudes[9] == doctest::Approx(3.5));
  // Tensor recomputed: must equal a fresh build at the new altitudes.
  const TransitionTensor fresh = transition_tensor(spec, bumped.altitudes);
  for (int a = 0; a < kNumActions; ++a)
    CHECK((bumped.tensor.by_action[size_t(a)] - fresh.by_action[size_t(a)]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attack actions clamp at bounds and reject out-of-range components") {
  GridSpec spec;
  GridWorld world = make_world(spec);
  Vec u = Vec::Ones(spec.cells());
  for (int step = 0; step < 4; ++step) world = apply_attack(world, u);
  CHECK(world.altitudes.maxCoeff() == doctest::Approx(spec.h_hi));
  Vec down = -Vec::Ones(spec.cells());
  for (int step = 0; step < 7; ++step) world = apply_attack(world, down);
  CHECK(world.altitudes.minCoeff() == doctest::Approx(spec.h_lo));

  Vec bad = Vec::Zero(spec.cells());
  bad[3] = 1.5;
  CHECK_THROWS_AS(apply_attack(world, bad), std::invalid_argument);
  CHECK_THROWS_AS(apply_attack(world, Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("stepping is seeded-deterministic and rewards -1 per move") {
  const GridWorld world = default_env();
  Rng rng1 = seeded_rng(11, 0);
  Rng rng2 = seeded_rng(11, 0);
  for (int i = 0; i < 50; ++i) {
    const StepResult a = step(world, 5, kEast, rng1);
    const StepResult b = step(world, 5, kEast, rng2);
    CHECK(a.next_state == b.next_state);
    CHECK(a.reward == -1.0);
    CHECK(a.done == (a.next_state == world.spec.goal));
  }
}

TEST_CASE("world json roundtrip preserves the environment") {
  GridSpec spec;
  Rng rng = seeded_rng(3, 0);
  std::uniform_real_distribution<double> alt(spec.h_lo, spec.h_hi);
  Vec h(spec.cells());
  for (long i = 0; i < h.size(); ++i) h[i] = alt(rng);
  const GridWorld world = make_world(spec, h);
  const GridWorld back = world_from_json(world_to_json(world));
  CHECK(back.spec.width == spec.width);
  CHECK(back.spec.height == spec.height);
  CHECK(back.spec.start == spec.start);
  CHECK(back.spec.goal == spec.goal);
  CHECK(back.spec.kappa == spec.kappa);
  CHECK(back.spec.beta == spec.beta);
  CHECK((back.altitudes - world.altitudes).cwiseAbs().maxCoeff() == 0.0);
  for (int a = 0; a < kNumActions; ++a)
    CHECK((back.tensor.by_action[size_t(a)] - world.tensor.by_action[size_t(a)]).cwiseAbs().maxCoeff() ==
          0.0);
}

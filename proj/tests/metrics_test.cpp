#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridpoison/metrics.hpp"

using namespace gridpoison;

namespace {
TargetSpec two_state_target() {
  TargetSpec t;
  t.states = {1, 2};
  t.actions = {kEast, kSouth};
  return t;
}
}  // namespace

TEST_CASE("accuracy is the strict-argmax hit rate") {
  const TargetSpec t = two_state_target();
  Mat pi = Mat::Constant(4, 4, 0.25);
  // All rows uniform: ties never count.
  CHECK(target_accuracy(pi, t) == 0.0);

  pi.row(1) << 0.0, 0.0, 1.0, 0.0;  // east wins at state 1
  CHECK(target_accuracy(pi, t) == 0.5);

  pi.row(2) << 0.0, 0.6, 0.2, 0.2;  // south wins at state 2
  CHECK(target_accuracy(pi, t) == 1.0);

  // A tie with another action is a miss even when the mass matches.
  pi.row(2) << 0.4, 0.4, 0.1, 0.1;
  CHECK(target_accuracy(pi, t) == 0.5);

  // The winning action must beat every other action, not just most of them.
  pi.row(2) << 0.0, 0.45, 0.45, 0.10;
  CHECK(target_accuracy(pi, t) == 0.5);
}

TEST_CASE("soft accuracy averages the target-action mass") {
  const TargetSpec t = two_state_target();
  Mat pi = Mat::Constant(4, 4, 0.25);
  CHECK(soft_accuracy(pi, t) == doctest::Approx(0.25).epsilon(1e-14));
  pi.row(1) << 0.0, 0.0, 1.0, 0.0;
  CHECK(soft_accuracy(pi, t) == doctest::Approx(0.625).epsilon(1e-14));
  pi.row(2) << 0.1, 0.7, 0.1, 0.1;
  CHECK(soft_accuracy(pi, t) == doctest::Approx(0.85).epsilon(1e-14));
}

TEST_CASE("partial soft accuracy zeroes missed states and keeps the denominator") {
  const TargetSpec t = two_state_target();
  Mat pi = Mat::Constant(4, 4, 0.25);
  // No strict argmax hits anywhere.
  CHECK(partial_soft_accuracy(pi, t) == 0.0);

  // One of two states hit with mass 0.9: (0.9 + 0)/2.
  pi.row(1) << 0.05, 0.0, 0.9, 0.05;
  CHECK(partial_soft_accuracy(pi, t) == doctest::Approx(0.45).epsilon(1e-14));

  // Both hit: equals soft accuracy.
  pi.row(2) << 0.1, 0.7, 0.1, 0.1;
  CHECK(partial_soft_accuracy(pi, t) == doctest::Approx(soft_accuracy(pi, t)).epsilon(1e-14));
  CHECK(partial_soft_accuracy(pi, t) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("metrics validate their targets") {
  Mat pi = Mat::Constant(4, 4, 0.25);
  TargetSpec empty;
  CHECK_THROWS_AS(target_accuracy(pi, empty), std::invalid_argument);
  CHECK_THROWS_AS(soft_accuracy(pi, empty), std::invalid_argument);
  CHECK_THROWS_AS(partial_soft_accuracy(pi, empty), std::invalid_argument);
  TargetSpec bad;
  bad.states = {9};
  bad.actions = {kNorth};
  CHECK_THROWS_AS(target_accuracy(pi, bad), std::out_of_range);
  TargetSpec ragged;
  ragged.states = {0, 1};
  ragged.actions = {kNorth};
  CHECK_THROWS_AS(target_accuracy(pi, ragged), std::invalid_argument);
}

TEST_CASE("attack effort is the mean absolute altitude change") {
  const Vec a = Vec::Constant(16, 2.5);
  CHECK(attack_effort(a, a) == 0.0);

  Vec b = a;
  b[3] += 0.5;
  CHECK(attack_effort(a, b) == doctest::Approx(0.5 / 16.0).epsilon(1e-15));
  CHECK(attack_effort(b, a) == doctest::Approx(0.5 / 16.0).epsilon(1e-15));

  // Mixed signs accumulate in magnitude.
  Vec c = a;
  c[0] += 1.0;
  c[1] -= 1.0;
  CHECK(attack_effort(a, c) == doctest::Approx(2.0 / 16.0).epsilon(1e-15));

  // Any per-step change within the unit action bound keeps effort at most 1.
  const Vec up = Vec::Constant(16, 3.5);
  CHECK(attack_effort(a, up) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(attack_effort(a, Vec::Zero(4)), std::invalid_argument);
}

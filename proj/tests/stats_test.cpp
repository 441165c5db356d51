#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridpoison/stats.hpp"

#include <stdexcept>

using namespace gridpoison;

TEST_CASE("all-positive differences give the extreme exact p-value") {
  std::vector<double> a(20), b(20, 0.0);
  for (int i = 0; i < 20; ++i) a[size_t(i)] = double(i + 1);
  const WilcoxonResult r = wilcoxon_signed_rank(a, b, "greater");
  CHECK(r.n == 20);
  CHECK(r.w == 210.0);  // 1 + 2 + ... + 20
  CHECK(r.p == 9.5367431640625e-07);  // exactly 2^-20

  const WilcoxonResult opposite = wilcoxon_signed_rank(b, a, "less");
  CHECK(opposite.w == 0.0);
  CHECK(opposite.p == 9.5367431640625e-07);

  // The wrong tail is maximally unsurprising.
  const WilcoxonResult wrong = wilcoxon_signed_rank(a, b, "less");
  CHECK(wrong.p == 1.0);
}

TEST_CASE("single observations and small samples are exact") {
  const WilcoxonResult one = wilcoxon_signed_rank({1.0}, {0.0}, "greater");
  CHECK(one.n == 1);
  CHECK(one.w == 1.0);
  CHECK(one.p == 0.5);

  // Differences (1, -1, 2): |diffs| ranks are (1.5, 1.5, 3); W = 4.5;
  // P(W >= 4.5) over all 8 sign patterns = 3/8.
  const WilcoxonResult mixed = wilcoxon_signed_rank({1.0, 0.0, 2.0}, {0.0, 1.0, 0.0}, "greater");
  CHECK(mixed.n == 3);
  CHECK(mixed.w == 4.5);
  CHECK(mixed.p == 0.375);
}

TEST_CASE("zero differences are dropped before ranking") {
  const WilcoxonResult r = wilcoxon_signed_rank({5.0, 3.0, 1.0}, {5.0, 3.0, 0.0}, "greater");
  CHECK(r.n == 1);
  CHECK(r.w == 1.0);
  CHECK(r.p == 0.5);
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(wilcoxon_signed_rank({1.0, 2.0}, {1.0, 2.0}, "greater"), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_signed_rank({1.0}, {1.0, 2.0}, "greater"), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_signed_rank({}, {}, "greater"), std::invalid_argument);
  CHECK_THROWS_AS(wilcoxon_signed_rank({1.0}, {0.0}, "two-sided"), std::invalid_argument);
  std::vector<double> big_a(26, 1.0), big_b(26, 0.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(big_a, big_b, "greater"), std::invalid_argument);
}

TEST_CASE("p-values are symmetric across the two tails") {
  const std::vector<double> a = {3.0, -1.0, 2.5, 0.5, -0.25};
  const std::vector<double> b(5, 0.0);
  const WilcoxonResult g = wilcoxon_signed_rank(a, b, "greater");
  const WilcoxonResult l = wilcoxon_signed_rank(b, a, "greater");
  const WilcoxonResult l2 = wilcoxon_signed_rank(a, b, "less");
  // Negating all differences swaps the tails exactly.
  CHECK(l.p == l2.p);
  CHECK(g.w + l.w == doctest::Approx(15.0));  // ranks sum to n(n+1)/2
}

TEST_CASE("sliding window maxima track the trailing window") {
  const std::vector<double> s = {1.0, 3.0, 2.0};
  const std::vector<double> w2 = sliding_window_max(s, 2);
  REQUIRE(w2.size() == 3);
  CHECK(w2[0] == 1.0);
  CHECK(w2[1] == 3.0);
  CHECK(w2[2] == 3.0);

  // Window one is the identity.
  CHECK(sliding_window_max(s, 1) == s);

  // A window longer than the series is the running maximum.
  const std::vector<double> run = sliding_window_max(s, 10);
  CHECK(run[2] == 3.0);

  const std::vector<double> flat(5, 2.0);
  CHECK(sliding_window_max(flat, 3) == flat);

  // Decays show up once the peak leaves the window.
  const std::vector<double> peak = {5.0, 1.0, 1.0, 1.0};
  const std::vector<double> out = sliding_window_max(peak, 2);
  CHECK(out[1] == 5.0);
  CHECK(out[2] == 1.0);

  CHECK_THROWS_AS(sliding_window_max(s, 0), std::invalid_argument);
  CHECK(sliding_window_max({}, 3).empty());
}

#include "gridpoison/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gridpoison {

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::string& alternative) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: length mismatch");
  const bool greater = alternative == "greater";
  if (!greater && alternative != "less") throw std::invalid_argument("wilcoxon: unknown alternative");

  std::vector<double> diffs;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const int n = int(diffs.size());
  if (n == 0) throw std::invalid_argument("wilcoxon: all differences zero");
  if (n > 25) throw std::invalid_argument("wilcoxon: n > 25 exceeds exact-distribution regime");

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return std::abs(diffs[size_t(x)]) < std::abs(diffs[size_t(y)]); });

  // Average ranks over tied magnitudes; ranks are then multiples of 0.5, so
  // doubled ranks are exact integers.
  std::vector<double> rank(static_cast<size_t>(n));
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && std::abs(diffs[size_t(order[size_t(j)])]) == std::abs(diffs[size_t(order[size_t(i)])])) ++j;
    const double avg = 0.5 * double((i + 1) + j);  // mean of ranks i+1..j
    for (int t = i; t < j; ++t) rank[size_t(order[size_t(t)])] = avg;
    i = j;
  }

  double w = 0.0;
  for (int i = 0; i < n; ++i)
    if (diffs[size_t(i)] > 0.0) w += rank[size_t(i)];

  // Exact null distribution of W over all 2^n sign assignments, counted by
  // subset-sum over doubled ranks (counts < 2^25 stay exact in double).
  const int max_sum = n * (n + 1);  // sum of doubled ranks
  std::vector<double> count(size_t(max_sum) + 1, 0.0);
  count[0] = 1.0;
  for (int i = 0; i < n; ++i) {
    const int r2 = int(std::llround(2.0 * rank[size_t(i)]));
    for (int s = max_sum; s >= r2; --s) count[size_t(s)] += count[size_t(s - r2)];
  }
  const int w2 = int(std::llround(2.0 * w));
  double tail = 0.0;
  if (greater) {
    for (int s = w2; s <= max_sum; ++s) tail += count[size_t(s)];
  } else {
    for (int s = 0; s <= w2; ++s) tail += count[size_t(s)];
  }
  const double p = tail / std::ldexp(1.0, n);
  return WilcoxonResult{w, p, n};
}

std::vector<double> sliding_window_max(const std::vector<double>& series, int window) {
  if (window < 1) throw std::invalid_argument("sliding_window_max: window < 1");
  std::vector<double> out(series.size());
  for (size_t i = 0; i < series.size(); ++i) {
    const size_t lo = i + 1 >= size_t(window) ? i + 1 - size_t(window) : 0;
    double best = series[lo];
    for (size_t j = lo + 1; j <= i; ++j) best = std::max(best, series[j]);
    out[i] = best;
  }
  return out;
}

}  // namespace gridpoison

#pragma once

#include <string>
#include <vector>

namespace gridpoison {

struct WilcoxonResult {
  double w = 0.0;  // sum of ranks of positive differences
  double p = 0.0;  // exact one-sided p-value
  int n = 0;       // nonzero differences used
};

// Exact one-sided Wilcoxon signed-rank test on paired samples. Zero
// differences are dropped; tied magnitudes get average ranks; p comes from the
// full sign-flip distribution, so n is capped at 25. alternative is "greater"
// (median difference > 0) or "less".
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::string& alternative);

// Trailing-window maximum: out[i] = max(series[i-window+1 .. i]), truncated at
// the front.
std::vector<double> sliding_window_max(const std::vector<double>& series, int window = 75);

}  // namespace gridpoison

#pragma once

#include "gridpoison/types.hpp"
#include "gridpoison/victim.hpp"

namespace gridpoison {

// Fraction of target states whose target action is the strict argmax of pi.
// Ties count as failure. Throws if the target is empty or pi rows are missing.
double target_accuracy(const Mat& pi, const TargetSpec& target);

// Mean probability assigned to the target action over all target states.
double soft_accuracy(const Mat& pi, const TargetSpec& target);

// Like soft_accuracy, but states whose target action is not the strict argmax
// contribute zero; denominator stays the full target-state count.
double partial_soft_accuracy(const Mat& pi, const TargetSpec& target);

// Mean absolute per-cell altitude change between consecutive attack steps.
double attack_effort(const Vec& h_prev, const Vec& h_cur);

}  // namespace gridpoison

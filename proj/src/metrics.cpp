#include "gridpoison/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace gridpoison {

namespace {

void check_target(const Mat& pi, const TargetSpec& target) {
  if (target.count() == 0) throw std::invalid_argument("metrics: empty target");
  if (target.states.size() != target.actions.size())
    throw std::invalid_argument("metrics: ragged target");
  for (size_t i = 0; i < target.states.size(); ++i) {
    if (target.states[i] < 0 || target.states[i] >= pi.rows())
      throw std::out_of_range("metrics: target state outside policy");
    if (target.actions[i] < 0 || target.actions[i] >= pi.cols())
      throw std::out_of_range("metrics: target action outside policy");
  }
}

bool strict_argmax(const Mat& pi, int s, int a_star) {
  const double p_star = pi(s, a_star);
  for (long a = 0; a < pi.cols(); ++a)
    if (a != a_star && pi(s, a) >= p_star) return false;
  return true;
}

}  // namespace

double target_accuracy(const Mat& pi, const TargetSpec& target) {
  check_target(pi, target);
  double hits = 0.0;
  for (size_t i = 0; i < target.states.size(); ++i)
    if (strict_argmax(pi, target.states[i], target.actions[i])) hits += 1.0;
  return hits / double(target.count());
}

double soft_accuracy(const Mat& pi, const TargetSpec& target) {
  check_target(pi, target);
  double total = 0.0;
  for (size_t i = 0; i < target.states.size(); ++i) total += pi(target.states[i], target.actions[i]);
  return total / double(target.count());
}

double partial_soft_accuracy(const Mat& pi, const TargetSpec& target) {
  check_target(pi, target);
  double total = 0.0;
  for (size_t i = 0; i < target.states.size(); ++i)
    if (strict_argmax(pi, target.states[i], target.actions[i]))
      total += pi(target.states[i], target.actions[i]);
  return total / double(target.count());
}

double attack_effort(const Vec& h_prev, const Vec& h_cur) {
  if (h_prev.size() != h_cur.size()) throw std::invalid_argument("attack_effort: length mismatch");
  if (h_prev.size() == 0) throw std::invalid_argument("attack_effort: empty altitudes");
  return (h_cur - h_prev).cwiseAbs().mean();
}

}  // namespace gridpoison

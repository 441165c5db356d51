#pragma once

#include "gridpoison/gridworld.hpp"
#include "gridpoison/types.hpp"

#include <string>
#include <vector>

namespace gridpoison {

// Markov chain over joint (state, action) pairs, indexed state*num_actions + action.
struct JointChain {
  int num_cells = 0;
  int num_actions = 0;
  Mat p;   // row-stochastic, (cells*actions) square
  Vec q0;  // initial joint distribution
};

// P[(s,a) -> (s',a')] = T(s'|s,a) * pi(a'|s'); q0_joint(s,a) = q0(s) * pi(a|s).
JointChain build_joint_chain(const TransitionTensor& tensor, const Mat& pi, const Vec& q0_cells);

Vec kstep_distribution(const Mat& p, const Vec& q0, int k);

// Manhattan(cell_x, cell_y)/diameter + 1[action_x != action_y].
double ground_metric(const GridSpec& spec, int joint_x, int joint_y);
Mat ground_metric_matrix(const GridSpec& spec);

// Exact optimal-transport cost between two distributions over the same support
// set, solved on the product of their positive supports.
double wasserstein1(const Vec& p, const Vec& q, const Mat& cost);

// Stationary distribution of the epsilon-smoothed chain via a direct solve of
// the balance equations; throws if the solution's balance residual exceeds tol.
Vec stationary_distribution(const Mat& p, double eps = 1e-6, double tol = 1e-8);

// sum_x mu1(x) sum_y P1(y|x) log((P1(y|x)+eps)/(P2(y|x)+eps)), mu1 stationary of
// the smoothed P1.
double klr(const Mat& p1, const Mat& p2, double eps = 1e-6);

enum class DiscountVariant { kWd, kKlr, kTargetWd, kTargetKlr, kFixed };

struct DiscountConfig {
  DiscountVariant variant = DiscountVariant::kWd;
  double gamma_min = 0.80;
  double gamma_max = 0.99;
  double fixed_gamma = 0.90;  // used by kFixed only
  int k = 5;                  // exposure horizon for the k-step comparison
  double c_d = 1.0;           // squash softness
};

void validate_discount(const DiscountConfig& cfg);
const char* variant_name(DiscountVariant v);
DiscountVariant variant_from_name(const std::string& name);
bool variant_uses_klr(DiscountVariant v);

struct DiscountReading {
  double raw_divergence = 0.0;
  double gamma = 0.0;
};

double squash_divergence(double d, const DiscountConfig& cfg);

// Raw divergence between the variant's current chain and the perfect chain
// (t_default with pi_star), squashed into [gamma_min, gamma_max].
DiscountReading dynamic_discount(const DiscountConfig& cfg, const GridSpec& spec,
                                 const TransitionTensor& t_cur, const TransitionTensor& t_default,
                                 const Mat& pi, const Mat& pi_star, const Vec& q0);

}  // namespace gridpoison

#include "gridpoison/gridworld.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace gridpoison {

using nlohmann::json;

int neighbor(const GridSpec& spec, int cell, int action) {
  int r = cell_row(spec, cell) + kRowDelta[action];
  int c = cell_col(spec, cell) + kColDelta[action];
  if (!in_grid(spec, r, c)) return cell;
  return cell_index(spec, r, c);
}

int manhattan(const GridSpec& spec, int a, int b) {
  return std::abs(cell_row(spec, a) - cell_row(spec, b)) +
         std::abs(cell_col(spec, a) - cell_col(spec, b));
}

void validate_spec(const GridSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw std::invalid_argument("grid: empty dimensions");
  const int m = spec.cells();
  if (spec.start < 0 || spec.start >= m) throw std::invalid_argument("grid: start out of range");
  if (spec.goal < 0 || spec.goal >= m) throw std::invalid_argument("grid: goal out of range");
  if (spec.start == spec.goal) throw std::invalid_argument("grid: start equals goal");
  if (!(spec.h_lo < spec.h_hi)) throw std::invalid_argument("grid: altitude bounds inverted");
  if (spec.kappa < 0.0 || spec.beta < 0.0) throw std::invalid_argument("grid: negative kappa/beta");
  if (spec.max_episode_steps < 1) throw std::invalid_argument("grid: non-positive step budget");
}

namespace {

// Softmax over the four directions of kappa*[m == intended] - beta*(h_dest - h_cell).
// Off-grid directions keep the mover in place with zero altitude change.
Eigen::RowVectorXd transition_row(const GridSpec& spec, const Vec& h, int s, int a) {
  double logits[kNumActions];
  int dest[kNumActions];
  double max_logit = -1e300;
  for (int m = 0; m < kNumActions; ++m) {
    dest[m] = neighbor(spec, s, m);
    const double dh = (dest[m] == s) ? 0.0 : h[dest[m]] - h[s];
    logits[m] = spec.kappa * (m == a ? 1.0 : 0.0) - spec.beta * dh;
    max_logit = std::max(max_logit, logits[m]);
  }
  double z = 0.0;
  double p[kNumActions];
  for (int m = 0; m < kNumActions; ++m) {
    p[m] = std::exp(logits[m] - max_logit);
    z += p[m];
  }
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(spec.cells());
  for (int m = 0; m < kNumActions; ++m) out[dest[m]] += p[m] / z;
  return out;
}

}  // namespace

TransitionTensor transition_tensor(const GridSpec& spec, const Vec& altitudes) {
  const int m = spec.cells();
  TransitionTensor t;
  t.by_action.assign(kNumActions, Mat::Zero(m, m));
  for (int a = 0; a < kNumActions; ++a)
    for (int s = 0; s < m; ++s) t.by_action[size_t(a)].row(s) = transition_row(spec, altitudes, s, a);
  return t;
}

GridWorld make_world(const GridSpec& spec, const Vec& altitudes) {
  validate_spec(spec);
  if (altitudes.size() != spec.cells()) throw std::invalid_argument("grid: altitude count mismatch");
  for (int i = 0; i < altitudes.size(); ++i)
    if (altitudes[i] < spec.h_lo - 1e-12 || altitudes[i] > spec.h_hi + 1e-12)
      throw std::invalid_argument("grid: altitude out of bounds");
  return GridWorld{spec, altitudes, transition_tensor(spec, altitudes)};
}

GridWorld make_world(const GridSpec& spec) {
  validate_spec(spec);
  return make_world(spec, Vec::Constant(spec.cells(), spec.h_init));
}

GridWorld default_env() { return make_world(GridSpec{}); }

Vec transition_probs(const GridWorld& world, int state, int action) {
  if (state < 0 || state >= world.spec.cells()) throw std::out_of_range("transition_probs: bad state");
  if (action < 0 || action >= kNumActions) throw std::out_of_range("transition_probs: bad action");
  return world.tensor.by_action[action].row(state);
}

StepResult step(const GridWorld& world, int state, int action, Rng& rng) {
  const Vec row = transition_probs(world, state, action);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int next = int(row.size()) - 1;
  for (int i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) {
      next = i;
      break;
    }
  }
  return StepResult{next, world.spec.step_reward, next == world.spec.goal};
}

GridWorld apply_attack(const GridWorld& world, const Vec& u) {
  if (u.size() != world.spec.cells()) throw std::invalid_argument("apply_attack: wrong action size");
  for (int i = 0; i < u.size(); ++i)
    if (std::abs(u[i]) > 1.0) throw std::invalid_argument("apply_attack: |u| exceeds 1");
  Vec h = world.altitudes + u;
  h = h.cwiseMax(world.spec.h_lo).cwiseMin(world.spec.h_hi);
  return GridWorld{world.spec, h, transition_tensor(world.spec, h)};
}

std::string world_to_json(const GridWorld& world) {
  json j;
  j["width"] = world.spec.width;
  j["height"] = world.spec.height;
  j["start"] = world.spec.start;
  j["goal"] = world.spec.goal;
  j["altitudes"] = std::vector<double>(world.altitudes.data(), world.altitudes.data() + world.altitudes.size());
  j["kappa"] = world.spec.kappa;
  j["beta"] = world.spec.beta;
  j["bounds"] = {world.spec.h_lo, world.spec.h_hi};
  return j.dump(2);
}

GridWorld world_from_json(const std::string& text) {
  const json j = json::parse(text);
  GridSpec spec;
  spec.width = j.at("width").get<int>();
  spec.height = j.at("height").get<int>();
  spec.start = j.at("start").get<int>();
  spec.goal = j.at("goal").get<int>();
  spec.kappa = j.at("kappa").get<double>();
  spec.beta = j.at("beta").get<double>();
  spec.h_lo = j.at("bounds").at(0).get<double>();
  spec.h_hi = j.at("bounds").at(1).get<double>();
  const auto alt = j.at("altitudes").get<std::vector<double>>();
  return make_world(spec, Eigen::Map<const Vec>(alt.data(), long(alt.size())));
}

}  // namespace gridpoison

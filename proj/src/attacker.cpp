#include "gridpoison/attacker.hpp"

#include <numeric>
#include <stdexcept>

namespace gridpoison {

void validate_attacker(const AttackerParams& params) {
  if (params.state_dim < 1 || params.action_dim < 1) throw std::invalid_argument("attacker: bad dims");
  if (params.batch < 1) throw std::invalid_argument("attacker: batch < 1");
  if (!(params.rho > 0.0 && params.rho <= 1.0)) throw std::invalid_argument("attacker: rho outside (0, 1]");
  if (params.warmup_episodes < 0) throw std::invalid_argument("attacker: negative warmup");
  if (params.buffer_capacity < params.batch) throw std::invalid_argument("attacker: capacity < batch");
  if (!(params.actor_lr > 0.0) || !(params.critic_lr > 0.0))
    throw std::invalid_argument("attacker: non-positive learning rate");
}

OuNoise make_ou_noise(int dim, double theta, double sigma) {
  OuNoise noise;
  noise.theta = theta;
  noise.sigma = sigma;
  noise.state = Vec::Zero(dim);
  return noise;
}

void reset_noise(OuNoise& noise) { noise.state.setZero(); }

Vec sample_noise(OuNoise& noise, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (long i = 0; i < noise.state.size(); ++i)
    noise.state[i] += noise.theta * (0.0 - noise.state[i]) + noise.sigma * normal(rng);
  return noise.state;
}

ReplayBuffer make_buffer(int capacity) {
  if (capacity < 1) throw std::invalid_argument("make_buffer: capacity < 1");
  ReplayBuffer buffer;
  buffer.capacity = capacity;
  return buffer;
}

void store(ReplayBuffer& buffer, TransitionRecord rec) {
  buffer.records.push_back(std::move(rec));
  while (int(buffer.records.size()) > buffer.capacity) buffer.records.pop_front();
}

std::vector<const TransitionRecord*> sample_batch(const ReplayBuffer& buffer, int n, Rng& rng) {
  const int size = int(buffer.records.size());
  if (n < 1 || n > size) throw std::invalid_argument("sample_batch: need 1 <= n <= buffer size");
  std::vector<int> idx(static_cast<size_t>(size));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const TransitionRecord*> out;
  out.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, size - 1);
    std::swap(idx[size_t(i)], idx[size_t(pick(rng))]);
    out.push_back(&buffer.records[size_t(idx[size_t(i)])]);
  }
  return out;
}

Attacker make_attacker(const AttackerParams& params, Rng& rng) {
  validate_attacker(params);
  Attacker atk;
  atk.params = params;
  atk.actor = make_mlp({params.state_dim, 400, 300, params.action_dim},
                       {Act::kRelu, Act::kRelu, Act::kTanh}, rng);
  atk.critic = make_mlp({params.state_dim + params.action_dim, 400, 300, 1},
                        {Act::kRelu, Act::kRelu, Act::kIdentity}, rng);
  atk.actor_target = atk.actor;
  atk.critic_target = atk.critic;
  atk.actor_opt = make_adam(atk.actor);
  atk.critic_opt = make_adam(atk.critic);
  atk.buffer = make_buffer(params.buffer_capacity);
  atk.noise = make_ou_noise(params.action_dim, params.noise_theta, params.noise_sigma);
  return atk;
}

Vec select_action(const Mlp& actor, const Vec& x, OuNoise& noise, bool explore, Rng& rng) {
  Vec u = forward(actor, x);
  if (explore) u += sample_noise(noise, rng);
  return u.cwiseMax(-1.0).cwiseMin(1.0);
}

Vec bellman_targets(const std::vector<const TransitionRecord*>& batch, const Mlp& critic_target,
                    const Mlp& actor_target) {
  const int n = int(batch.size());
  if (n == 0) throw std::invalid_argument("bellman_targets: empty batch");
  const long sd = batch[0]->x.size();
  Mat x_next(n, sd);
  for (int i = 0; i < n; ++i) x_next.row(i) = batch[size_t(i)]->x_next;
  const Mat u_next = forward_batch(actor_target, x_next);
  Mat xu(n, sd + u_next.cols());
  xu << x_next, u_next;
  const Mat q_next = forward_batch(critic_target, xu);
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    const TransitionRecord& rec = *batch[size_t(i)];
    y[i] = rec.done ? rec.r : rec.r + rec.gamma * q_next(i, 0);
  }
  return y;
}

UpdateLosses update(Attacker& atk, Rng& rng) {
  const int n = atk.params.batch;
  if (int(atk.buffer.records.size()) < n) throw std::runtime_error("update: buffer smaller than batch");
  const std::vector<const TransitionRecord*> batch = sample_batch(atk.buffer, n, rng);

  const long sd = atk.params.state_dim;
  const long ad = atk.params.action_dim;
  Mat x(n, sd), u(n, ad);
  for (int i = 0; i < n; ++i) {
    x.row(i) = batch[size_t(i)]->x;
    u.row(i) = batch[size_t(i)]->u;
  }
  const Vec y = bellman_targets(batch, atk.critic_target, atk.actor_target);

  // Critic: minimize mean squared Bellman error.
  Mat xu(n, sd + ad);
  xu << x, u;
  const Mat q = forward_batch(atk.critic, xu);
  const Vec err = q.col(0) - y;
  const double critic_loss = err.squaredNorm() / n;
  Mat dq(n, 1);
  dq.col(0) = 2.0 / n * err;
  BackpropResult critic_bp = backprop_batch(atk.critic, xu, dq);
  opt_step(atk.critic, critic_bp.grads, atk.critic_opt, atk.params.critic_lr);

  // Actor: ascend mean Q(x, actor(x)) by chaining the critic's action-input
  // gradient into the actor, then negating for the minimizing optimizer.
  const Mat act = forward_batch(atk.actor, x);
  Mat xa(n, sd + ad);
  xa << x, act;
  const Mat q_actor = forward_batch(atk.critic, xa);
  Mat dq_actor = Mat::Constant(n, 1, 1.0 / n);
  const BackpropResult critic_input_bp = backprop_batch(atk.critic, xa, dq_actor);
  const Mat du = critic_input_bp.input_grads.rightCols(ad);
  BackpropResult actor_bp = backprop_batch(atk.actor, x, du);
  scale(actor_bp.grads, -1.0);
  opt_step(atk.actor, actor_bp.grads, atk.actor_opt, atk.params.actor_lr);

  soft_update(atk.critic_target, atk.critic, atk.params.rho);
  soft_update(atk.actor_target, atk.actor, atk.params.rho);
  return UpdateLosses{critic_loss, q_actor.col(0).mean()};
}

}  // namespace gridpoison

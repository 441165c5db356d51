#include "gridpoison/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace gridpoison {

namespace {

void check_stochastic(const Mat& rows, const char* what) {
  for (long r = 0; r < rows.rows(); ++r) {
    if (rows.row(r).minCoeff() < -1e-12) throw std::invalid_argument(std::string(what) + ": negative entry");
    if (std::abs(rows.row(r).sum() - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  }
}

}  // namespace

JointChain build_joint_chain(const TransitionTensor& tensor, const Mat& pi, const Vec& q0_cells) {
  const int actions = int(tensor.by_action.size());
  if (actions == 0) throw std::invalid_argument("build_joint_chain: empty tensor");
  const int cells = int(tensor.by_action[0].rows());
  if (pi.rows() != cells || pi.cols() != actions) throw std::invalid_argument("build_joint_chain: pi shape mismatch");
  if (q0_cells.size() != cells) throw std::invalid_argument("build_joint_chain: q0 size mismatch");
  for (const Mat& t : tensor.by_action) check_stochastic(t, "build_joint_chain: tensor");
  check_stochastic(pi, "build_joint_chain: pi");
  if (std::abs(q0_cells.sum() - 1.0) > 1e-9) throw std::invalid_argument("build_joint_chain: q0 does not sum to 1");

  JointChain chain;
  chain.num_cells = cells;
  chain.num_actions = actions;
  chain.p = Mat::Zero(long(cells) * actions, long(cells) * actions);
  chain.q0 = Vec::Zero(long(cells) * actions);
  for (int s = 0; s < cells; ++s)
    for (int a = 0; a < actions; ++a) {
      const long row = long(s) * actions + a;
      for (int s2 = 0; s2 < cells; ++s2) {
        const double t = tensor.by_action[size_t(a)](s, s2);
        if (t == 0.0) continue;
        chain.p.row(row).segment(long(s2) * actions, actions) += t * pi.row(s2);
      }
      chain.q0[row] = q0_cells[s] * pi(s, a);
    }
  return chain;
}

Vec kstep_distribution(const Mat& p, const Vec& q0, int k) {
  if (p.rows() != p.cols() || p.rows() != q0.size()) throw std::invalid_argument("kstep_distribution: shape mismatch");
  if (k < 0) throw std::invalid_argument("kstep_distribution: negative k");
  Vec v = q0;
  for (int i = 0; i < k; ++i) v = p.transpose() * v;
  return v;
}

double ground_metric(const GridSpec& spec, int joint_x, int joint_y) {
  const int m = spec.cells();
  if (joint_x < 0 || joint_x >= m * kNumActions || joint_y < 0 || joint_y >= m * kNumActions)
    throw std::out_of_range("ground_metric: bad joint index");
  const int diameter = (spec.width - 1) + (spec.height - 1);
  const int cx = joint_x / kNumActions, cy = joint_y / kNumActions;
  const int ax = joint_x % kNumActions, ay = joint_y % kNumActions;
  const double cell_part = diameter > 0 ? double(manhattan(spec, cx, cy)) / diameter : 0.0;
  return cell_part + (ax != ay ? 1.0 : 0.0);
}

Mat ground_metric_matrix(const GridSpec& spec) {
  const long n = long(spec.cells()) * kNumActions;
  Mat d(n, n);
  for (long x = 0; x < n; ++x)
    for (long y = 0; y < n; ++y) d(x, y) = ground_metric(spec, int(x), int(y));
  return d;
}

// Transportation simplex (u-v method). The basis is a spanning tree of
// m + n - 1 cells; duals are recomputed from the tree every pivot, so rounding
// never accumulates. Entering cell by most-negative reduced cost, falling back
// to Bland's rule after a degenerate streak, which guarantees termination.
double wasserstein1(const Vec& p, const Vec& q, const Mat& cost) {
  if (p.size() != q.size()) throw std::invalid_argument("wasserstein1: mismatched supports");
  if (cost.rows() != p.size() || cost.cols() != p.size()) throw std::invalid_argument("wasserstein1: cost shape mismatch");
  if (p.minCoeff() < 0.0 || q.minCoeff() < 0.0) throw std::invalid_argument("wasserstein1: negative mass");
  if (std::abs(p.sum() - 1.0) > 1e-9 || std::abs(q.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("wasserstein1: inputs must sum to 1");

  std::vector<int> supply_idx, demand_idx;
  for (long i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) supply_idx.push_back(int(i));
  for (long j = 0; j < q.size(); ++j)
    if (q[j] > 0.0) demand_idx.push_back(int(j));
  const int m = int(supply_idx.size()), n = int(demand_idx.size());

  std::vector<double> a(static_cast<size_t>(m));
  std::vector<double> b(static_cast<size_t>(n));
  double sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < m; ++i) sum_a += (a[size_t(i)] = p[supply_idx[size_t(i)]]);
  for (int j = 0; j < n; ++j) sum_b += (b[size_t(j)] = q[demand_idx[size_t(j)]]);
  for (int j = 0; j < n; ++j) b[size_t(j)] *= sum_a / sum_b;  // reconcile rounding in the totals

  Mat c(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = cost(supply_idx[size_t(i)], demand_idx[size_t(j)]);

  // Northwest-corner start: advancing one index per cell yields exactly
  // m + n - 1 basic cells, zero-flow ones included.
  Mat flow = Mat::Zero(m, n);
  std::vector<std::vector<int>> row_basic(static_cast<size_t>(m)), col_basic(static_cast<size_t>(n));
  auto add_basic = [&](int i, int j) {
    row_basic[size_t(i)].push_back(j);
    col_basic[size_t(j)].push_back(i);
  };
  auto drop_basic = [&](int i, int j) {
    auto& rb = row_basic[size_t(i)];
    rb.erase(std::find(rb.begin(), rb.end(), j));
    auto& cb = col_basic[size_t(j)];
    cb.erase(std::find(cb.begin(), cb.end(), i));
  };
  {
    std::vector<double> ra = a, rb = b;
    int i = 0, j = 0;
    while (true) {
      const double t = std::min(ra[size_t(i)], rb[size_t(j)]);
      flow(i, j) = t;
      ra[size_t(i)] -= t;
      rb[size_t(j)] -= t;
      add_basic(i, j);
      if (i == m - 1 && j == n - 1) break;
      if (i < m - 1 && (ra[size_t(i)] <= rb[size_t(j)] || j == n - 1))
        ++i;
      else
        ++j;
    }
  }

  std::vector<double> u(static_cast<size_t>(m)), v(static_cast<size_t>(n));
  std::vector<int> stack, parent_row(static_cast<size_t>(m)), parent_col(static_cast<size_t>(n));
  constexpr double kOptTol = 1e-10;
  const long max_pivots = 64L * m * n + 4096;
  int degenerate_streak = 0;
  bool bland = false;

  for (long pivot = 0;; ++pivot) {
    if (pivot >= max_pivots) throw std::runtime_error("wasserstein1: pivot limit exceeded");

    // Duals from the basis tree, rooted at row 0 with u[0] = 0.
    std::vector<bool> row_seen(size_t(m), false), col_seen(size_t(n), false);
    u[0] = 0.0;
    row_seen[0] = true;
    stack.assign(1, 0);  // rows as x, cols as m + x
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x < m) {
        for (int j : row_basic[size_t(x)])
          if (!col_seen[size_t(j)]) {
            col_seen[size_t(j)] = true;
            v[size_t(j)] = c(x, j) - u[size_t(x)];
            stack.push_back(m + j);
          }
      } else {
        const int j = x - m;
        for (int i : col_basic[size_t(j)])
          if (!row_seen[size_t(i)]) {
            row_seen[size_t(i)] = true;
            u[size_t(i)] = c(i, j) - v[size_t(j)];
            stack.push_back(i);
          }
      }
    }
    for (int i = 0; i < m; ++i)
      if (!row_seen[size_t(i)]) throw std::logic_error("wasserstein1: basis tree disconnected");

    // Entering cell: most negative reduced cost, or first one under Bland.
    int er = -1, ec = -1;
    double best_rc = -kOptTol;
    for (int i = 0; i < m && (er < 0 || !bland); ++i)
      for (int j = 0; j < n; ++j) {
        const double rc = c(i, j) - u[size_t(i)] - v[size_t(j)];
        if (rc < best_rc) {
          best_rc = rc;
          er = i;
          ec = j;
          if (bland) break;
        }
      }
    if (er < 0) break;  // optimal

    // Unique basis-tree path from entering row to entering column; the cycle
    // alternates signs starting with + on the entering cell.
    std::fill(parent_row.begin(), parent_row.end(), -2);
    std::fill(parent_col.begin(), parent_col.end(), -2);
    parent_row[size_t(er)] = -1;
    stack.assign(1, er);
    while (!stack.empty() && parent_col[size_t(ec)] == -2) {
      const int x = stack.back();
      stack.pop_back();
      if (x < m) {
        for (int j : row_basic[size_t(x)])
          if (parent_col[size_t(j)] == -2) {
            parent_col[size_t(j)] = x;
            stack.push_back(m + j);
          }
      } else {
        const int j = x - m;
        for (int i : col_basic[size_t(j)])
          if (parent_row[size_t(i)] == -2) {
            parent_row[size_t(i)] = j;
            stack.push_back(i);
          }
      }
    }
    if (parent_col[size_t(ec)] == -2) throw std::logic_error("wasserstein1: no cycle for entering cell");

    // Walk col -> row -> col ... back to the entering row; odd cells lose flow.
    std::vector<std::pair<int, int>> minus, plus;
    for (int j = ec;;) {
      const int i = parent_col[size_t(j)];
      minus.emplace_back(i, j);
      const int pj = parent_row[size_t(i)];
      if (pj < 0) break;
      plus.emplace_back(i, pj);
      j = pj;
    }

    double theta = std::numeric_limits<double>::infinity();
    int lr = -1, lc = -1;
    for (const auto& [i, j] : minus)
      if (flow(i, j) < theta || (flow(i, j) == theta && (i < lr || (i == lr && j < lc)))) {
        theta = flow(i, j);
        lr = i;
        lc = j;
      }

    for (const auto& [i, j] : plus) flow(i, j) += theta;
    for (const auto& [i, j] : minus) flow(i, j) -= theta;
    flow(er, ec) = theta;
    flow(lr, lc) = 0.0;
    drop_basic(lr, lc);
    add_basic(er, ec);

    // A stall of zero-flow pivots flips to Bland's rule for the rest of the run.
    degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    if (degenerate_streak > 2 * (m + n)) bland = true;
  }

  return flow.cwiseProduct(c).sum();
}

Vec stationary_distribution(const Mat& p, double eps, double tol) {
  if (p.rows() != p.cols()) throw std::invalid_argument("stationary_distribution: non-square chain");
  const long n = p.rows();
  Mat smoothed(n, n);
  for (long r = 0; r < n; ++r) {
    const double denom = p.row(r).sum() + eps * double(n);
    smoothed.row(r) = (p.row(r).array() + eps) / denom;
  }
  // The smoothed chain is strictly positive, so its stationary vector is the
  // unique solution of (P_s^T - I) mu = 0 with sum(mu) = 1: one balance row is
  // redundant and is replaced by the normalisation.  A direct solve stays exact
  // on periodic or eps-bridged chains where power iteration needs ~1/eps steps.
  Mat a = smoothed.transpose() - Mat::Identity(n, n);
  a.row(n - 1).setOnes();
  Vec b = Vec::Zero(n);
  b[n - 1] = 1.0;
  Vec mu = a.partialPivLu().solve(b);
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  const double residual = (smoothed.transpose() * mu - mu).cwiseAbs().sum();
  if (!(residual <= tol))
    throw std::runtime_error("stationary_distribution: balance residual " + std::to_string(residual));
  return mu;
}

double klr(const Mat& p1, const Mat& p2, double eps) {
  if (p1.rows() != p2.rows() || p1.cols() != p2.cols() || p1.rows() != p1.cols())
    throw std::invalid_argument("klr: chain shape mismatch");
  check_stochastic(p1, "klr: first chain");
  check_stochastic(p2, "klr: second chain");
  const Vec mu = stationary_distribution(p1, eps);
  double total = 0.0;
  for (long x = 0; x < p1.rows(); ++x) {
    double row = 0.0;
    for (long y = 0; y < p1.cols(); ++y) {
      const double w = p1(x, y);
      if (w == 0.0) continue;
      row += w * std::log((w + eps) / (p2(x, y) + eps));
    }
    total += mu[x] * row;
  }
  return total;
}

void validate_discount(const DiscountConfig& cfg) {
  if (cfg.variant == DiscountVariant::kFixed) {
    if (!(cfg.fixed_gamma > 0.0 && cfg.fixed_gamma < 1.0))
      throw std::invalid_argument("discount: fixed gamma outside (0, 1)");
    return;
  }
  if (!(0.5 < cfg.gamma_min && cfg.gamma_min < cfg.gamma_max && cfg.gamma_max < 1.0))
    throw std::invalid_argument("discount: need 0.5 < gamma_min < gamma_max < 1");
  if (cfg.k < 0) throw std::invalid_argument("discount: negative k");
  if (!(cfg.c_d > 0.0)) throw std::invalid_argument("discount: non-positive c_d");
}

const char* variant_name(DiscountVariant v) {
  switch (v) {
    case DiscountVariant::kWd: return "wd";
    case DiscountVariant::kKlr: return "klr";
    case DiscountVariant::kTargetWd: return "targetwd";
    case DiscountVariant::kTargetKlr: return "targetklr";
    case DiscountVariant::kFixed: return "fixed";
  }
  throw std::logic_error("variant_name: unknown variant");
}

DiscountVariant variant_from_name(const std::string& name) {
  if (name == "wd") return DiscountVariant::kWd;
  if (name == "klr") return DiscountVariant::kKlr;
  if (name == "targetwd") return DiscountVariant::kTargetWd;
  if (name == "targetklr") return DiscountVariant::kTargetKlr;
  if (name == "fixed") return DiscountVariant::kFixed;
  throw std::invalid_argument("variant_from_name: unknown variant " + name);
}

bool variant_uses_klr(DiscountVariant v) {
  return v == DiscountVariant::kKlr || v == DiscountVariant::kTargetKlr;
}

double squash_divergence(double d, const DiscountConfig& cfg) {
  validate_discount(cfg);
  if (cfg.variant == DiscountVariant::kFixed) return cfg.fixed_gamma;
  const double dd = std::max(d, 0.0);  // divergences may carry float noise near zero
  return cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * dd / (dd + cfg.c_d);
}

DiscountReading dynamic_discount(const DiscountConfig& cfg, const GridSpec& spec,
                                 const TransitionTensor& t_cur, const TransitionTensor& t_default,
                                 const Mat& pi, const Mat& pi_star, const Vec& q0) {
  validate_discount(cfg);
  if (cfg.variant == DiscountVariant::kFixed) return DiscountReading{0.0, cfg.fixed_gamma};
  const bool target_variant =
      cfg.variant == DiscountVariant::kTargetWd || cfg.variant == DiscountVariant::kTargetKlr;
  const JointChain cur = build_joint_chain(t_cur, target_variant ? pi_star : pi, q0);
  const JointChain perfect = build_joint_chain(t_default, pi_star, q0);
  double d = 0.0;
  if (variant_uses_klr(cfg.variant)) {
    d = klr(cur.p, perfect.p);
  } else {
    const Mat cost = ground_metric_matrix(spec);
    d = wasserstein1(kstep_distribution(cur.p, cur.q0, cfg.k),
                     kstep_distribution(perfect.p, perfect.q0, cfg.k), cost);
  }
  return DiscountReading{d, squash_divergence(d, cfg)};
}

}  // namespace gridpoison

#include "gridpoison/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gridpoison {

Mlp make_mlp(const std::vector<int>& dims, const std::vector<Act>& act, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least one layer");
  if (act.size() + 1 != dims.size()) throw std::invalid_argument("make_mlp: one activation per layer");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("make_mlp: non-positive layer width");
  Mlp net;
  net.act = act;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(double(dims[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Mat w(dims[l + 1], dims[l]);
    for (long r = 0; r < w.rows(); ++r)
      for (long c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    Vec b(dims[l + 1]);
    for (long r = 0; r < b.size(); ++r) b[r] = u(rng);
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

int input_dim(const Mlp& net) { return int(net.w.front().cols()); }
int output_dim(const Mlp& net) { return int(net.w.back().rows()); }

long parameter_count(const Mlp& net) {
  long n = 0;
  for (size_t l = 0; l < net.w.size(); ++l) n += net.w[l].size() + net.b[l].size();
  return n;
}

namespace {

void apply_activation(Act act, Mat& z) {
  switch (act) {
    case Act::kIdentity:
      return;
    case Act::kRelu:
      z = z.cwiseMax(0.0);
      return;
    case Act::kTanh:
      z = z.array().tanh();
      return;
    case Act::kSoftmax:
      for (long r = 0; r < z.rows(); ++r) {
        const double mx = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - mx).exp();
        z.row(r) /= z.row(r).sum();
      }
      return;
  }
}

// dL/dz given dL/da and the activation output a (all row-major batches).
Mat activation_backward(Act act, const Mat& a, const Mat& da) {
  switch (act) {
    case Act::kIdentity:
      return da;
    case Act::kRelu:
      return (a.array() > 0.0).select(da, Mat::Zero(da.rows(), da.cols()));
    case Act::kTanh:
      return da.cwiseProduct(Mat::Ones(a.rows(), a.cols()) - a.cwiseProduct(a));
    case Act::kSoftmax: {
      Mat dz(da.rows(), da.cols());
      for (long r = 0; r < da.rows(); ++r) {
        const double dot = a.row(r).dot(da.row(r));
        dz.row(r) = (a.row(r).array() * (da.row(r).array() - dot)).matrix();
      }
      return dz;
    }
  }
  throw std::logic_error("activation_backward: unknown activation");
}

}  // namespace

Mat forward_batch(const Mlp& net, const Mat& x) {
  if (x.cols() != input_dim(net)) throw std::invalid_argument("forward: wrong input width");
  Mat a = x;
  for (size_t l = 0; l < net.w.size(); ++l) {
    Mat z = a * net.w[l].transpose();
    z.rowwise() += net.b[l].transpose();
    apply_activation(net.act[l], z);
    a = std::move(z);
  }
  return a;
}

Vec forward(const Mlp& net, const Vec& x) {
  return forward_batch(net, x.transpose()).row(0).transpose();
}

BackpropResult backprop_batch(const Mlp& net, const Mat& x, const Mat& upstream) {
  if (x.cols() != input_dim(net)) throw std::invalid_argument("backprop: wrong input width");
  if (upstream.cols() != output_dim(net) || upstream.rows() != x.rows())
    throw std::invalid_argument("backprop: upstream shape mismatch");
  const size_t layers = net.w.size();
  std::vector<Mat> activations(layers + 1);
  activations[0] = x;
  for (size_t l = 0; l < layers; ++l) {
    Mat z = activations[l] * net.w[l].transpose();
    z.rowwise() += net.b[l].transpose();
    apply_activation(net.act[l], z);
    activations[l + 1] = std::move(z);
  }
  BackpropResult out;
  out.grads.w.resize(layers);
  out.grads.b.resize(layers);
  Mat da = upstream;
  for (size_t l = layers; l-- > 0;) {
    const Mat dz = activation_backward(net.act[l], activations[l + 1], da);
    out.grads.w[l] = dz.transpose() * activations[l];
    out.grads.b[l] = dz.colwise().sum().transpose();
    da = dz * net.w[l];
  }
  out.input_grads = std::move(da);
  return out;
}

BackpropResult gradients(const Mlp& net, const Vec& x, const Vec& upstream) {
  return backprop_batch(net, x.transpose(), upstream.transpose());
}

AdamState make_adam(const Mlp& net) {
  AdamState s;
  for (size_t l = 0; l < net.w.size(); ++l) {
    s.mw.push_back(Mat::Zero(net.w[l].rows(), net.w[l].cols()));
    s.vw.push_back(Mat::Zero(net.w[l].rows(), net.w[l].cols()));
    s.mb.push_back(Vec::Zero(net.b[l].size()));
    s.vb.push_back(Vec::Zero(net.b[l].size()));
  }
  return s;
}

void opt_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr) {
  if (grads.w.size() != net.w.size()) throw std::invalid_argument("opt_step: gradient shape mismatch");
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.t));
  for (size_t l = 0; l < net.w.size(); ++l) {
    state.mw[l] = state.beta1 * state.mw[l] + (1.0 - state.beta1) * grads.w[l];
    state.vw[l] = state.beta2 * state.vw[l] + (1.0 - state.beta2) * grads.w[l].cwiseProduct(grads.w[l]);
    net.w[l].array() -= lr * (state.mw[l].array() / c1) / ((state.vw[l].array() / c2).sqrt() + state.eps);
    state.mb[l] = state.beta1 * state.mb[l] + (1.0 - state.beta1) * grads.b[l];
    state.vb[l] = state.beta2 * state.vb[l] + (1.0 - state.beta2) * grads.b[l].cwiseProduct(grads.b[l]);
    net.b[l].array() -= lr * (state.mb[l].array() / c1) / ((state.vb[l].array() / c2).sqrt() + state.eps);
  }
}

void soft_update(Mlp& target, const Mlp& source, double rho) {
  if (target.w.size() != source.w.size()) throw std::invalid_argument("soft_update: layer count mismatch");
  for (size_t l = 0; l < target.w.size(); ++l) {
    target.w[l] = rho * source.w[l] + (1.0 - rho) * target.w[l];
    target.b[l] = rho * source.b[l] + (1.0 - rho) * target.b[l];
  }
}

MlpGrads zero_grads(const Mlp& net) {
  MlpGrads g;
  for (size_t l = 0; l < net.w.size(); ++l) {
    g.w.push_back(Mat::Zero(net.w[l].rows(), net.w[l].cols()));
    g.b.push_back(Vec::Zero(net.b[l].size()));
  }
  return g;
}

void accumulate(MlpGrads& into, const MlpGrads& grads) {
  for (size_t l = 0; l < into.w.size(); ++l) {
    into.w[l] += grads.w[l];
    into.b[l] += grads.b[l];
  }
}

void scale(MlpGrads& grads, double factor) {
  for (size_t l = 0; l < grads.w.size(); ++l) {
    grads.w[l] *= factor;
    grads.b[l] *= factor;
  }
}

const char* act_name(Act a) {
  switch (a) {
    case Act::kIdentity: return "identity";
    case Act::kRelu: return "relu";
    case Act::kTanh: return "tanh";
    case Act::kSoftmax: return "softmax";
  }
  throw std::logic_error("act_name: unknown activation");
}

Act act_from_name(const std::string& name) {
  if (name == "identity") return Act::kIdentity;
  if (name == "relu") return Act::kRelu;
  if (name == "tanh") return Act::kTanh;
  if (name == "softmax") return Act::kSoftmax;
  throw std::invalid_argument("act_from_name: unknown activation " + name);
}

void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out << "MLP1";
  out << ' ' << net.w.front().cols();
  for (size_t l = 0; l < net.w.size(); ++l) out << ' ' << net.w[l].rows();
  for (Act a : net.act) out << ' ' << act_name(a);
  out << '\n';
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (long r = 0; r < net.w[l].rows(); ++r) {
      const Eigen::RowVectorXd row = net.w[l].row(r);
      out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(sizeof(double)) * row.size());
    }
    out.write(reinterpret_cast<const char*>(net.b[l].data()), std::streamsize(sizeof(double)) * net.b[l].size());
  }
  if (!out) throw std::runtime_error("save_mlp: write failed for " + path);
}

Mlp load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  hs >> magic;
  if (magic != "MLP1") throw std::runtime_error("load_mlp: bad magic in " + path);
  std::vector<std::string> fields;
  std::string tok;
  while (hs >> tok) fields.push_back(tok);
  std::vector<int> dims;
  size_t i = 0;
  for (; i < fields.size(); ++i) {
    try {
      size_t used = 0;
      const int d = std::stoi(fields[i], &used);
      if (used != fields[i].size()) break;
      dims.push_back(d);
    } catch (const std::exception&) {
      break;
    }
  }
  if (dims.size() < 2 || fields.size() - i != dims.size() - 1)
    throw std::runtime_error("load_mlp: malformed header in " + path);
  Mlp net;
  for (; i < fields.size(); ++i) net.act.push_back(act_from_name(fields[i]));
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Mat w(dims[l + 1], dims[l]);
    for (long r = 0; r < w.rows(); ++r) {
      Eigen::RowVectorXd row(w.cols());
      in.read(reinterpret_cast<char*>(row.data()), std::streamsize(sizeof(double)) * w.cols());
      w.row(r) = row;
    }
    Vec b(dims[l + 1]);
    in.read(reinterpret_cast<char*>(b.data()), std::streamsize(sizeof(double)) * b.size());
    if (!in) throw std::runtime_error("load_mlp: truncated payload in " + path);
    net.w.push_back(std::move(w));
    net.b.push_back(std::move(b));
  }
  return net;
}

}  // namespace gridpoison

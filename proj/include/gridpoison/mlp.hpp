#pragma once

#include "gridpoison/types.hpp"

#include <string>
#include <vector>

namespace gridpoison {

enum class Act { kIdentity, kRelu, kTanh, kSoftmax };

// Dense feed-forward net; w[l] maps layer l activations (columns) to layer l+1.
struct Mlp {
  std::vector<Mat> w;
  std::vector<Vec> b;
  std::vector<Act> act;  // one per layer
};

struct MlpGrads {
  std::vector<Mat> w;
  std::vector<Vec> b;
};

struct BackpropResult {
  MlpGrads grads;
  Mat input_grads;  // same shape as the input batch
};

// Adam moments; beta1/beta2/eps fixed at the usual defaults.
struct AdamState {
  std::vector<Mat> mw, vw;
  std::vector<Vec> mb, vb;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Weights and biases drawn uniform in +-1/sqrt(fan_in), layer by layer.
Mlp make_mlp(const std::vector<int>& dims, const std::vector<Act>& act, Rng& rng);

int input_dim(const Mlp& net);
int output_dim(const Mlp& net);
long parameter_count(const Mlp& net);

Vec forward(const Mlp& net, const Vec& x);
Mat forward_batch(const Mlp& net, const Mat& x);  // rows are samples

// Gradients of sum_i <forward(x_i), upstream_i> for all parameters and inputs.
BackpropResult backprop_batch(const Mlp& net, const Mat& x, const Mat& upstream);
BackpropResult gradients(const Mlp& net, const Vec& x, const Vec& upstream);

AdamState make_adam(const Mlp& net);
void opt_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr);
void soft_update(Mlp& target, const Mlp& source, double rho);

MlpGrads zero_grads(const Mlp& net);
void accumulate(MlpGrads& into, const MlpGrads& grads);
void scale(MlpGrads& grads, double factor);

// Text header "MLP1 <dims...> <activation tags...>" then little-endian doubles,
// layer-major, each layer's weight matrix row-major followed by its bias.
void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

const char* act_name(Act a);
Act act_from_name(const std::string& name);

}  // namespace gridpoison

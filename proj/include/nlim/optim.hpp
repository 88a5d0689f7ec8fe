#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlim/tensor.hpp"

namespace nlim {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  ParamStore m;
  ParamStore v;
};

// One bias-corrected Adam update. Moment buffers are created on first use.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state);

struct ParamSpec {
  enum class Init { Glorot, Zero, LstmBias };
  std::string name;
  std::vector<std::size_t> shape;
  Init init = Init::Glorot;
};

// Glorot-uniform weights (s = sqrt(6 / (rows + cols))), zero biases, LSTM
// biases zero except the forget-gate block which is 1.0. Tensors are filled
// in name order from one seeded stream.
ParamStore init_params(const std::vector<ParamSpec>& specs, std::uint64_t seed);

// Loss over a parameter store; fills `grads` (same names) when non-null.
using LossFn = std::function<double(const ParamStore& params, ParamStore* grads)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares the analytic gradient with central differences on a seeded sample
// of at least `min_samples` coordinates (all coordinates if fewer exist, and at
// least a few from every tensor). Where both gradients, or their difference,
// are below `abs_floor` the absolute difference is used instead of the
// relative one.
GradCheckResult grad_check(const LossFn& loss, const ParamStore& params, double eps = 1e-5,
                           std::size_t min_samples = 200, std::uint64_t seed = 1, double abs_floor = 1e-10);

}  // namespace nlim

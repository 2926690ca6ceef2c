#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "docgraph/nn/tensor.hpp"

namespace docgraph::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moments per parameter (same order as the span passed to
/// adam_step) and the step counter.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Leaves gradients untouched.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

}  // namespace docgraph::nn

#include "docgraph/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace docgraph::nn {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (!(config.lr > 0.0)) throw std::invalid_argument("adam learning rate must be > 0");
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam state was built for a different parameter list");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    Tensor& m = state.first_moment[pi];
    Tensor& v = state.second_moment[pi];
    if (m.shape() != p.value.shape()) throw std::invalid_argument("adam moment shape mismatch for " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double mhat = m[i] / bias1;
      const double vhat = v[i] / bias2;
      p.value[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace docgraph::nn

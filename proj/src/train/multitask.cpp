#include "docgraph/train/multitask.hpp"

#include <stdexcept>

#include "docgraph/nn/ops.hpp"

namespace docgraph::train {

using nn::Tensor;
using nn::Var;

Var segment_classifier_logits(Var node_embeddings, nn::Parameter& weight, nn::Parameter& bias) {
  nn::Tape& tape = node_embeddings.tape();
  return nn::add(nn::matmul(node_embeddings, tape.param(weight)), tape.param(bias));
}

Var sigmoid_bce(Var logits, const std::vector<std::size_t>& classes) {
  const auto& shape = logits.shape();
  if (shape.size() != 2 || shape[0] != classes.size()) {
    throw nn::NumericError("sigmoid_bce: logits " + nn::shape_string(shape) + " for " +
                           std::to_string(classes.size()) + " targets");
  }
  const std::size_t n = shape[0];
  const std::size_t C = shape[1];
  Tensor targets({n, C});
  for (std::size_t i = 0; i < n; ++i) {
    if (classes[i] >= C) throw std::invalid_argument("sigmoid_bce: class index out of range");
    targets.at(i, classes[i]) = 1.0;
  }
  nn::Tape& tape = logits.tape();
  const Var z = nn::reshape(logits, {n * C, 1});
  const Var softplus = nn::logsumexp(nn::concat({tape.constant(Tensor({n * C, 1})), z}, 1));  // [n*C]
  const Var yz = nn::mul(nn::reshape(logits, {n * C}), tape.constant(targets.reshaped({n * C})));
  return nn::mean(nn::sub(softplus, yz));
}

Var multitask_combine(std::span<const Var> losses, Var log_vars) {
  if (losses.empty()) throw std::invalid_argument("multitask_combine: no losses");
  if (log_vars.shape() != nn::Shape{losses.size()}) {
    throw nn::NumericError("multitask_combine: " + std::to_string(losses.size()) + " losses but log-variances " +
                           nn::shape_string(log_vars.shape()));
  }
  std::vector<Var> parts;
  for (const Var& l : losses) parts.push_back(nn::reshape(l, {1}));
  const Var stacked = nn::concat(parts, 0);
  const Var precision = nn::exp(nn::scale(log_vars, -1.0));
  return nn::sum(nn::add(nn::mul(precision, stacked), log_vars));
}

}  // namespace docgraph::train

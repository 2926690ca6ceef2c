#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "docgraph/nn/tape.hpp"

namespace docgraph::train {

/// Logits of independent per-class sigmoids over graph embeddings: [n, C].
nn::Var segment_classifier_logits(nn::Var node_embeddings, nn::Parameter& weight, nn::Parameter& bias);

/// Mean binary cross-entropy of sigmoid(logits) against one-hot rows for
/// `classes`; computed as softplus(z) - y z for stability.
nn::Var sigmoid_bce(nn::Var logits, const std::vector<std::size_t>& classes);

/// sum_k exp(-s_k) L_k + s_k with s = log_vars ([K]) and one scalar loss per task.
nn::Var multitask_combine(std::span<const nn::Var> losses, nn::Var log_vars);

}  // namespace docgraph::train

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docgraph/doc/document.hpp"
#include "docgraph/nn/gradcheck.hpp"
#include "docgraph/train/config.hpp"

namespace docgraph::train {

/// Two segments of three tokens each with one entity of each of two types
/// (five tags).
doc::Document micro_document();

/// Small dims suitable for checking every coordinate.
TrainConfig micro_config(Mode mode, Ablation ablation = {});

/// Every mode, plus each ablation of the gcn model alone and combined.
std::vector<TrainConfig> gradcheck_suite();

struct ModelGradCheck {
  std::string label;  // "<mode>/<ablation>"
  std::uint64_t point_seed = 0;   // seed of the draw that was checked
  double min_abs_gradient = 0.0;  // smallest nonzero |analytic| at that point
  nn::GradCheckReport report;
  /// Max relative error per component: the parameter name up to the first '.'.
  std::vector<std::pair<std::string, double>> per_component;
};

/// Central differences at eps = 1e-5 on a loss near 20 carry about 1e-10 of
/// round-off, so a coordinate needs |gradient| well above 1e-6 for a 1e-4
/// relative comparison to mean anything.
inline constexpr double kMinResolvableGradient = 3e-6;

/// Builds the micro model for `config` and compares the document loss
/// gradient with central differences on all coordinates. Parameters are drawn
/// from U(-1, 1) with seed, seed + 1, ... until every nonzero analytic
/// gradient is at least `min_gradient` in magnitude (at most 64 draws; the
/// last draw is checked regardless).
ModelGradCheck check_model_gradients(const TrainConfig& config, std::uint64_t seed, double eps = 1e-5,
                                     double min_gradient = kMinResolvableGradient);

}  // namespace docgraph::train

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "docgraph/nn/tape.hpp"

namespace docgraph::nn {

using LossClosure = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded sample per parameter.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct CoordinateCheck {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct ParamCheck {
  std::string param;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  CoordinateCheck worst;
  std::vector<ParamCheck> per_param;
};

/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of the closure's scalar output against
/// central differences. The closure must be deterministic. Parameter values
/// are restored bit-exactly; gradient buffers are left zeroed.
GradCheckReport gradient_check(const LossClosure& loss, std::span<Parameter* const> params,
                               const GradCheckOptions& options = {});

}  // namespace docgraph::nn

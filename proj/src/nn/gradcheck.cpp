#include "docgraph/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "docgraph/nn/params.hpp"

namespace docgraph::nn {
namespace {

double evaluate(const LossClosure& loss) {
  Tape tape;
  return loss(tape).value().item();
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport gradient_check(const LossClosure& loss, std::span<Parameter* const> params,
                               const GradCheckOptions& options) {
  zero_gradients(params);
  {
    Tape tape;
    Var out = loss(tape);
    tape.backward(out);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);
  zero_gradients(params);

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    ParamCheck pc{p.name, coords.size(), 0.0};
    for (std::size_t idx : coords) {
      const double saved = p.value[idx];
      p.value[idx] = saved + options.eps;
      const double plus = evaluate(loss);
      p.value[idx] = saved - options.eps;
      const double minus = evaluate(loss);
      p.value[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double a = analytic[pi][idx];
      const double err = relative_error(a, numeric);
      pc.max_rel_error = std::max(pc.max_rel_error, err);
      if (err > report.max_rel_error || report.worst.param.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, err);
        report.worst = CoordinateCheck{p.name, idx, a, numeric, err};
      }
    }
    report.per_param.push_back(pc);
  }
  return report;
}

}  // namespace docgraph::nn

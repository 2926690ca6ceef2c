#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "docgraph/nn/tensor.hpp"

namespace docgraph::nn {

/// Owns parameters at stable addresses, in registration order.
class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor value);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  std::span<Parameter* const> all() const { return view_; }
  std::size_t size() const { return owned_.size(); }
  std::size_t scalar_count() const;

  void zero_gradients();

 private:
  std::vector<std::unique_ptr<Parameter>> owned_;
  std::vector<Parameter*> view_;
};

void zero_gradients(std::span<Parameter* const> params);

/// Global L2 norm of all gradients; rescales them to max_norm if above it.
/// Returns the norm measured before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

// Initializers. All draw from the caller's engine so a seed pins every value.
Tensor uniform_tensor(Shape shape, double limit, std::mt19937_64& rng);
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for a [fan_in, fan_out] weight.
Tensor fan_in_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// Deterministic U(lo, hi) independent of the standard library's
/// distribution implementation.
double uniform01(std::mt19937_64& rng);

}  // namespace docgraph::nn

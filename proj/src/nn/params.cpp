#include "docgraph/nn/params.hpp"

#include <cmath>

namespace docgraph::nn {

Parameter& ParameterStore::add(std::string name, Tensor value) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  owned_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  view_.push_back(owned_.back().get());
  return *owned_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : owned_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  for (const auto& p : owned_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("no parameter named '" + name + "'");
  return *p;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : owned_) n += p->value.size();
  return n;
}

void ParameterStore::zero_gradients() { nn::zero_gradients(view_); }

void zero_gradients(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (Parameter* p : params) {
      for (double& g : p->grad.data()) g *= f;
    }
  }
  return norm;
}

double uniform01(std::mt19937_64& rng) {
  // 53 random mantissa bits
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Tensor uniform_tensor(Shape shape, double limit, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return t;
}

Tensor fan_in_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  return uniform_tensor(Shape{fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace docgraph::nn

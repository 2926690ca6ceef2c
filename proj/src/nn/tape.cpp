#include "docgraph/nn/tape.hpp"

#include <mutex>

namespace docgraph::nn {
namespace {

std::mutex g_fault_mutex;
std::string g_fault_op;  // guarded by g_fault_mutex

std::string fault_op() {
  std::lock_guard lock(g_fault_mutex);
  return g_fault_op;
}

}  // namespace

void Tape::inject_sign_flip(std::string op_name) {
  std::lock_guard lock(g_fault_mutex);
  g_fault_op = std::move(op_name);
}

void Tape::ensure_open() const {
  if (consumed_) throw std::logic_error("tape already consumed by backward(); record a new forward pass");
}

Var Tape::constant(Tensor value) {
  ensure_open();
  if (!value.all_finite()) throw NumericError("non-finite constant fed to tape");
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  ensure_open();
  if (!p.value.all_finite()) throw NumericError("parameter '" + p.name + "' holds non-finite values");
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward) {
  ensure_open();
  if (!value.all_finite()) {
    throw NumericError("non-finite output from '" + std::string(op) + "' (shape " +
                       shape_string(value.shape()) + ")");
  }
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw std::logic_error("op '" + std::string(op) + "' mixes tapes");
    needs = needs || nodes_[in.id_].needs_grad;
  }
  Node n;
  n.own = std::move(value);
  n.needs_grad = needs;
  nodes_.push_back(std::move(n));
  const std::size_t id = nodes_.size() - 1;
  if (needs) ops_.push_back(Op{op, id, std::move(backward)});
  return Var(this, id);
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id_];
  return n.external != nullptr ? *n.external : n.own;
}

Tensor& Tape::grad(Var v) {
  Node& n = nodes_[v.id_];
  if (!n.grad) n.grad.emplace(value(v).shape());
  return *n.grad;
}

const Tensor* Tape::grad_if_any(Var v) const {
  const Node& n = nodes_[v.id_];
  return n.grad ? &*n.grad : nullptr;
}

void Tape::backward(Var loss) {
  ensure_open();
  if (loss.tape_ != this) throw std::logic_error("loss was recorded on a different tape");
  if (value(loss).size() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " +
                                shape_string(value(loss).shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id_].needs_grad) return;
  grad(loss).fill(1.0);

  const std::string flip = fault_op();
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    Node& out = nodes_[it->output];
    if (!out.grad) continue;
    if (!flip.empty() && it->name == flip) {
      Tensor flipped = *out.grad;
      for (double& g : flipped.data()) g = -g;
      it->backward(*this, flipped);
    } else {
      it->backward(*this, *out.grad);
    }
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.grad) continue;
    Tensor& dst = n.param->grad;
    if (dst.shape() != n.grad->shape()) dst = Tensor(n.grad->shape());
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += (*n.grad)[i];
  }
}

}  // namespace docgraph::nn

#pragma once

// Reverse-mode differentiation over Tensor values.
//
// A Tape records one forward pass. Each primitive appends its output node and
// a closure that maps the output adjoint onto its inputs. backward() replays
// the closures in exact reverse order, then adds leaf adjoints into the bound
// Parameters' gradient buffers (+=, never overwrite). A tape is single-use:
// recording onto it or calling backward again after backward() throws.

#include <atomic>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docgraph/nn/tensor.hpp"

namespace docgraph::nn {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A value that never receives a gradient.
  Var constant(Tensor value);
  /// A leaf bound to a Parameter; the parameter must outlive the tape.
  Var param(Parameter& p);

  /// Seeds d(loss)/d(loss) = 1 and replays adjoints. loss must be a single value.
  void backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t op_count() const { return ops_.size(); }

  // Primitive-author interface.

  /// Appends an op output. The closure is kept only when some input needs a
  /// gradient; it runs during backward with the adjoint of the output.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, Backward backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  const Tensor& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }
  /// Adjoint buffer of v, zero-allocated on first access.
  Tensor& grad(Var v);
  const Tensor* grad_if_any(Var v) const;

  /// Test hook for mutation checks: negates the output adjoint of every op
  /// with this name during backward. Empty string disables.
  static void inject_sign_flip(std::string op_name);

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    Parameter* param = nullptr;
    std::optional<Tensor> grad;
    bool needs_grad = false;
  };
  struct Op {
    std::string_view name;
    std::size_t output;
    Backward backward;
  };

  void ensure_open() const;

  std::vector<Node> nodes_;
  std::vector<Op> ops_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace docgraph::nn

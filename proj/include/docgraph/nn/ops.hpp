#pragma once

// Differentiable primitives. All of them record onto the tape that owns
// their first operand.
//
// Binary elementwise ops broadcast with the usual trailing-axis rules.
// Reductions that take no axis work over the last axis.

#include <cstddef>
#include <span>
#include <vector>

#include "docgraph/nn/tape.hpp"

namespace docgraph::nn {

Var matmul(Var a, Var b);  // [m,k] x [k,n] -> [m,n]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var tanh(Var x);
Var sigmoid(Var x);
Var exp(Var x);
Var leaky_relu(Var x, double slope);

/// Softmax over the last axis. Masked positions are exactly 0. The mask
/// either covers one row (broadcast to all rows) or every element.
Var masked_softmax(Var logits, std::span<const bool> mask);
Var softmax(Var logits);
/// log(sum(exp(x))) over the last axis; drops that axis.
Var logsumexp(Var x);

/// Rows of table (leading axis) picked by index: [R, ...] -> [len(idx), ...].
Var gather_rows(Var table, std::span<const std::size_t> indices);
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);
Var transpose(Var x);  // rank 2 only

Var sum(Var x);   // -> scalar
Var mean(Var x);  // -> scalar
Var sum_axis(Var x, std::size_t axis);

// Plain (non-recording) helpers shared by tests and inference code.
double leaky_relu_value(double x, double slope);
std::vector<double> softmax_values(std::span<const double> logits);
double logsumexp_values(std::span<const double> values);

}  // namespace docgraph::nn

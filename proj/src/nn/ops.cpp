#include "docgraph/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "docgraph/kernels/kernels.hpp"

namespace docgraph::nn {
namespace {

namespace k = docgraph::kernels;

[[noreturn]] void shape_error(std::string_view op, const Shape& a, const Shape& b) {
  throw NumericError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                     shape_string(b));
}

// Index plan for a broadcasting binary op.
struct Broadcast {
  enum class Kind { same, suffix_b, suffix_a, general };
  Kind kind = Kind::same;
  Shape out;
  std::size_t a_size = 0;
  std::size_t b_size = 0;
  std::vector<std::size_t> ia, ib;  // general only

  std::size_t a_index(std::size_t i) const {
    switch (kind) {
      case Kind::same:
      case Kind::suffix_b:
        return i;
      case Kind::suffix_a:
        return i % a_size;
      case Kind::general:
        return ia[i];
    }
    return 0;
  }
  std::size_t b_index(std::size_t i) const {
    switch (kind) {
      case Kind::same:
      case Kind::suffix_a:
        return i;
      case Kind::suffix_b:
        return i % b_size;
      case Kind::general:
        return ib[i];
    }
    return 0;
  }
};

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  if (shape_size(small) == 1) return true;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

Broadcast plan(std::string_view op, const Shape& a, const Shape& b) {
  Broadcast bc;
  bc.a_size = shape_size(a);
  bc.b_size = shape_size(b);
  if (a == b) {
    bc.kind = Broadcast::Kind::same;
    bc.out = a;
    return bc;
  }
  if (is_suffix(b, a)) {
    bc.kind = Broadcast::Kind::suffix_b;
    bc.out = a;
    return bc;
  }
  if (is_suffix(a, b)) {
    bc.kind = Broadcast::Kind::suffix_a;
    bc.out = b;
    return bc;
  }
  bc.kind = Broadcast::Kind::general;
  const std::size_t rank = std::max(a.size(), b.size());
  Shape pa(rank - a.size(), 1), pb(rank - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  bc.out.resize(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    if (pa[d] != pb[d] && pa[d] != 1 && pb[d] != 1) shape_error(op, a, b);
    bc.out[d] = std::max(pa[d], pb[d]);
  }
  auto strides = [rank](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t acc = 1;
    for (std::size_t d = rank; d-- > 0;) {
      st[d] = s[d] == 1 ? 0 : acc;
      acc *= s[d];
    }
    return st;
  };
  const auto sa = strides(pa), sb = strides(pb);
  const std::size_t n = shape_size(bc.out);
  bc.ia.resize(n);
  bc.ib.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t oa = 0, ob = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      oa += idx[d] * sa[d];
      ob += idx[d] * sb[d];
    }
    bc.ia[i] = oa;
    bc.ib[i] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < bc.out[d]) break;
      idx[d] = 0;
    }
  }
  return bc;
}

// (outer, len, inner) decomposition of a shape around one axis.
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t d = 0; d < axis; ++d) r.outer *= s[d];
  r.len = s[axis];
  for (std::size_t d = axis + 1; d < s.size(); ++d) r.inner *= s[d];
  return r;
}

template <class F>
Var unary(std::string_view name, Var x, F&& fwd_deriv) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  Tensor deriv(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const auto [y, dy] = fwd_deriv(xv[i]);
    out[i] = y;
    deriv[i] = dy;
  }
  return x.tape().record(name, std::move(out), {x},
                         [x, deriv = std::move(deriv)](Tape& t, const Tensor& g) {
                           if (!t.needs_grad(x)) return;
                           k::active().fma(g.size(), g.raw(), deriv.raw(), t.grad(x).raw());
                         });
}

}  // namespace

double leaky_relu_value(double x, double slope) { return x > 0.0 ? x : slope * x; }

std::vector<double> softmax_values(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

double logsumexp_values(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) shape_error("matmul", av.shape(), bv.shape());
  const std::size_t m = av.dim(0), kk = av.dim(1), n = bv.dim(1);
  Tensor out(Shape{m, n});
  k::matmul_nn(m, n, kk, av.raw(), bv.raw(), out.raw());
  return a.tape().record("matmul", std::move(out), {a, b}, [a, b, m, kk, n](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) k::matmul_nt(m, kk, n, g.raw(), b.value().raw(), t.grad(a).raw());
    if (t.needs_grad(b)) k::matmul_tn(kk, n, m, a.value().raw(), g.raw(), t.grad(b).raw());
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  auto bc = plan("add", av.shape(), bv.shape());
  Tensor out(bc.out);
  const std::size_t n = out.size();
  if (bc.kind == Broadcast::Kind::same) {
    k::active().add(n, av.raw(), bv.raw(), out.raw());
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = av[bc.a_index(i)] + bv[bc.b_index(i)];
  }
  return a.tape().record("add", std::move(out), {a, b}, [a, b, bc = std::move(bc)](Tape& t, const Tensor& g) {
    const std::size_t n = g.size();
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad(a);
      if (ga.size() == n) {
        k::active().add(n, ga.raw(), g.raw(), ga.raw());
      } else {
        for (std::size_t i = 0; i < n; ++i) ga[bc.a_index(i)] += g[i];
      }
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad(b);
      if (gb.size() == n) {
        k::active().add(n, gb.raw(), g.raw(), gb.raw());
      } else {
        for (std::size_t i = 0; i < n; ++i) gb[bc.b_index(i)] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  auto bc = plan("mul", av.shape(), bv.shape());
  Tensor out(bc.out);
  const std::size_t n = out.size();
  if (bc.kind == Broadcast::Kind::same) {
    k::active().mul(n, av.raw(), bv.raw(), out.raw());
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = av[bc.a_index(i)] * bv[bc.b_index(i)];
  }
  return a.tape().record("mul", std::move(out), {a, b}, [a, b, bc = std::move(bc)](Tape& t, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const std::size_t n = g.size();
    const bool same = bc.kind == Broadcast::Kind::same;
    if (t.needs_grad(a)) {
      Tensor& ga = t.grad(a);
      if (same) {
        k::active().fma(n, g.raw(), bv.raw(), ga.raw());
      } else {
        for (std::size_t i = 0; i < n; ++i) ga[bc.a_index(i)] += g[i] * bv[bc.b_index(i)];
      }
    }
    if (t.needs_grad(b)) {
      Tensor& gb = t.grad(b);
      if (same) {
        k::active().fma(n, g.raw(), av.raw(), gb.raw());
      } else {
        for (std::size_t i = 0; i < n; ++i) gb[bc.b_index(i)] += g[i] * av[bc.a_index(i)];
      }
    }
  });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return a.tape().record("scale", std::move(out), {a}, [a, factor](Tape& t, const Tensor& g) {
    if (t.needs_grad(a)) k::active().axpy(g.size(), factor, g.raw(), t.grad(a).raw());
  });
}

Var tanh(Var x) {
  return unary("tanh", x, [](double v) {
    const double y = std::tanh(v);
    return std::pair{y, 1.0 - y * y};
  });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x, [](double v) {
    const double y = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    return std::pair{y, y * (1.0 - y)};
  });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) {
    const double y = std::exp(v);
    return std::pair{y, y};
  });
}

Var leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("leaky_relu slope must lie in (0, 1)");
  return unary("leaky_relu", x, [slope](double v) {
    return v > 0.0 ? std::pair{v, 1.0} : std::pair{slope * v, slope};
  });
}

Var masked_softmax(Var logits, std::span<const bool> mask) {
  const Tensor& xv = logits.value();
  if (xv.rank() == 0) throw NumericError("masked_softmax on a scalar");
  const std::size_t cols = xv.cols(), rows = xv.rows();
  if (!mask.empty() && mask.size() != cols && mask.size() != xv.size()) {
    throw NumericError("masked_softmax: mask length " + std::to_string(mask.size()) +
                       " matches neither a row nor the tensor " + shape_string(xv.shape()));
  }
  auto keep = [&](std::size_t r, std::size_t c) {
    if (mask.empty()) return true;
    return mask.size() == cols ? mask[c] : mask[r * cols + c];
  };
  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (keep(r, c)) m = std::max(m, xv.at(r, c));
    }
    if (m == -std::numeric_limits<double>::infinity()) {
      throw NumericError("masked_softmax: row " + std::to_string(r) + " has every position masked");
    }
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!keep(r, c)) continue;
      out.at(r, c) = std::exp(xv.at(r, c) - m);
      s += out.at(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= s;
  }
  Tensor y = out;
  return logits.tape().record("masked_softmax", std::move(out), {logits},
                              [logits, y = std::move(y)](Tape& t, const Tensor& g) {
                                if (!t.needs_grad(logits)) return;
                                Tensor& gx = t.grad(logits);
                                const std::size_t cols = y.cols(), rows = y.rows();
                                for (std::size_t r = 0; r < rows; ++r) {
                                  const double* yr = y.raw() + r * cols;
                                  const double* gr = g.raw() + r * cols;
                                  const double dotv = k::active().dot(cols, yr, gr);
                                  double* gxr = gx.raw() + r * cols;
                                  for (std::size_t c = 0; c < cols; ++c) gxr[c] += yr[c] * (gr[c] - dotv);
                                }
                              });
}

Var softmax(Var logits) { return masked_softmax(logits, {}); }

Var logsumexp(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw NumericError("logsumexp on a scalar");
  const std::size_t cols = xv.cols(), rows = xv.rows();
  Shape out_shape(xv.shape().begin(), xv.shape().end() - 1);
  Tensor out(out_shape);
  Tensor probs(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.raw() + r * cols;
    const double m = *std::max_element(row, row + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      probs[r * cols + c] = std::exp(row[c] - m);
      s += probs[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] /= s;
    out[r] = m + std::log(s);
  }
  return x.tape().record("logsumexp", std::move(out), {x}, [x, probs = std::move(probs)](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    const std::size_t cols = probs.cols(), rows = probs.rows();
    for (std::size_t r = 0; r < rows; ++r) {
      k::active().axpy(cols, g[r], probs.raw() + r * cols, gx.raw() + r * cols);
    }
  });
}

Var gather_rows(Var table, std::span<const std::size_t> indices) {
  const Tensor& tv = table.value();
  if (tv.rank() == 0) throw NumericError("gather_rows on a scalar");
  const std::size_t rows = tv.dim(0);
  const std::size_t width = rows == 0 ? 0 : tv.size() / rows;
  Shape out_shape = tv.shape();
  out_shape[0] = indices.size();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw NumericError("gather_rows: index " + std::to_string(indices[i]) + " out of range " +
                         std::to_string(rows));
    }
    std::copy_n(tv.raw() + indices[i] * width, width, out.raw() + i * width);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return table.tape().record("gather_rows", std::move(out), {table},
                             [table, idx = std::move(idx), width](Tape& t, const Tensor& g) {
                               if (!t.needs_grad(table)) return;
                               Tensor& gt = t.grad(table);
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                 k::active().add(width, gt.raw() + idx[i] * width, g.raw() + i * width,
                                                 gt.raw() + idx[i] * width);
                               }
                             });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw NumericError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw NumericError("concat axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_error("concat", first, s);
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) shape_error("concat", first, s);
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_at(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const AxisSplit ps = split_at(pv.shape(), axis);
    const std::size_t block = ps.len * ps.inner;
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(pv.raw() + o * block, block, out.raw() + o * os.len * os.inner + offset * os.inner);
    }
    offsets.push_back(offset);
    offset += ps.len;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(
      "concat", std::move(out), inputs, [inputs, offsets, os, axis](Tape& t, const Tensor& g) {
        for (std::size_t pi = 0; pi < inputs.size(); ++pi) {
          const Var& p = inputs[pi];
          if (!t.needs_grad(p)) continue;
          Tensor& gp = t.grad(p);
          const std::size_t len = gp.shape()[axis];
          const std::size_t block = len * os.inner;
          for (std::size_t o = 0; o < os.outer; ++o) {
            const double* src = g.raw() + o * os.len * os.inner + offsets[pi] * os.inner;
            k::active().add(block, gp.raw() + o * block, src, gp.raw() + o * block);
          }
        }
      });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank() || begin >= end || end > xv.dim(axis)) {
    throw NumericError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                       std::to_string(axis) + " of " + shape_string(xv.shape()));
  }
  const AxisSplit s = split_at(xv.shape(), axis);
  Shape out_shape = xv.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t block = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.raw() + o * s.len * s.inner + begin * s.inner, block, out.raw() + o * block);
  }
  return x.tape().record("slice", std::move(out), {x}, [x, s, begin, block](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = gx.raw() + o * s.len * s.inner + begin * s.inner;
      k::active().add(block, dst, g.raw() + o * block, dst);
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record("reshape", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    k::active().add(g.size(), gx.raw(), g.raw(), gx.raw());
  });
}

Var transpose(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw NumericError("transpose needs rank 2, got " + shape_string(xv.shape()));
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  Tensor out(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  }
  return x.tape().record("transpose", std::move(out), {x}, [x, r, c](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    }
  });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data()) s += v;
  return x.tape().record("sum", Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    const double gv = g[0];
    for (double& v : gx.data()) v += gv;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw NumericError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var sum_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  if (axis >= xv.rank()) throw NumericError("sum_axis axis out of range for " + shape_string(xv.shape()));
  const AxisSplit s = split_at(xv.shape(), axis);
  Shape out_shape = xv.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    double* dst = out.raw() + o * s.inner;
    for (std::size_t l = 0; l < s.len; ++l) {
      k::active().add(s.inner, dst, xv.raw() + (o * s.len + l) * s.inner, dst);
    }
  }
  return x.tape().record("sum_axis", std::move(out), {x}, [x, s](Tape& t, const Tensor& g) {
    if (!t.needs_grad(x)) return;
    Tensor& gx = t.grad(x);
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = g.raw() + o * s.inner;
      for (std::size_t l = 0; l < s.len; ++l) {
        double* dst = gx.raw() + (o * s.len + l) * s.inner;
        k::active().add(s.inner, dst, src, dst);
      }
    }
  });
}

}  // namespace docgraph::nn

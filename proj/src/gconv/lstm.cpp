#include "docgraph/gconv/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "docgraph/nn/ops.hpp"

namespace docgraph::gconv {

using nn::Tensor;
using nn::Var;

LstmCell LstmCell::create(nn::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden == 0) throw std::invalid_argument(prefix + ": LSTM sizes must be positive");
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmCell cell;
  cell.input_dim = input_dim;
  cell.hidden = hidden;
  cell.w_input = &store.add(prefix + ".w_input", nn::uniform_tensor({input_dim, 4 * hidden}, limit, rng));
  cell.w_hidden = &store.add(prefix + ".w_hidden", nn::uniform_tensor({hidden, 4 * hidden}, limit, rng));
  Tensor b({4 * hidden});
  for (std::size_t k = hidden; k < 2 * hidden; ++k) b[k] = 1.0;
  cell.bias = &store.add(prefix + ".bias", std::move(b));
  return cell;
}

BiLstm BiLstm::create(nn::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden, std::mt19937_64& rng) {
  BiLstm l;
  l.forward = LstmCell::create(store, prefix + ".fw", input_dim, hidden, rng);
  l.backward = LstmCell::create(store, prefix + ".bw", input_dim, hidden, rng);
  return l;
}

SequenceBatch SequenceBatch::from_lengths(const std::vector<std::size_t>& lengths) {
  SequenceBatch b;
  b.lengths = lengths;
  std::size_t off = 0;
  for (std::size_t len : lengths) {
    b.offsets.push_back(off);
    off += len;
  }
  return b;
}

std::size_t SequenceBatch::total() const {
  std::size_t t = 0;
  for (std::size_t len : lengths) t += len;
  return t;
}

namespace {

struct DirectionResult {
  Var final_state;
  std::vector<Var> steps;  // [B, H] per time step
};

DirectionResult run_direction(const LstmCell& cell, Var inputs, const SequenceBatch& batch, bool reverse,
                              bool keep_steps) {
  nn::Tape& tape = inputs.tape();
  const std::size_t B = batch.count();
  const std::size_t H = cell.hidden;
  const std::size_t max_len = *std::max_element(batch.lengths.begin(), batch.lengths.end());

  const Var projected = nn::add(nn::matmul(inputs, tape.param(*cell.w_input)), tape.param(*cell.bias));
  const Var w_hidden = tape.param(*cell.w_hidden);

  Var h = tape.constant(Tensor({B, H}));
  Var c = tape.constant(Tensor({B, H}));
  DirectionResult out;
  std::vector<std::size_t> rows(B);
  for (std::size_t t = 0; t < max_len; ++t) {
    Tensor mask({B, 1});
    bool all_active = true;
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t len = batch.lengths[b];
      if (t < len) {
        rows[b] = batch.offsets[b] + (reverse ? len - 1 - t : t);
        mask[b] = 1.0;
      } else {
        rows[b] = batch.offsets[b];
        all_active = false;
      }
    }
    const Var gates = nn::add(nn::gather_rows(projected, rows), nn::matmul(h, w_hidden));
    const Var i = nn::sigmoid(nn::slice(gates, 1, 0, H));
    const Var f = nn::sigmoid(nn::slice(gates, 1, H, 2 * H));
    const Var g = nn::tanh(nn::slice(gates, 1, 2 * H, 3 * H));
    const Var o = nn::sigmoid(nn::slice(gates, 1, 3 * H, 4 * H));
    const Var c_new = nn::add(nn::mul(f, c), nn::mul(i, g));
    const Var h_new = nn::mul(o, nn::tanh(c_new));
    if (keep_steps) out.steps.push_back(h_new);
    if (all_active) {
      c = c_new;
      h = h_new;
    } else {
      const Var m = tape.constant(std::move(mask));
      c = nn::add(c, nn::mul(m, nn::sub(c_new, c)));
      h = nn::add(h, nn::mul(m, nn::sub(h_new, h)));
    }
  }
  out.final_state = h;
  return out;
}

// Reorders step-major outputs [T*B, H] into packed token order.
Var token_order(const DirectionResult& r, const SequenceBatch& batch, bool reverse) {
  const std::size_t B = batch.count();
  const Var stacked = nn::concat(r.steps, 0);
  std::vector<std::size_t> idx;
  idx.reserve(batch.total());
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t len = batch.lengths[b];
    for (std::size_t pos = 0; pos < len; ++pos) {
      const std::size_t t = reverse ? len - 1 - pos : pos;
      idx.push_back(t * B + b);
    }
  }
  return nn::gather_rows(stacked, idx);
}

}  // namespace

BiLstmOutput run_bilstm(const BiLstm& lstm, Var inputs, const SequenceBatch& batch, bool token_states) {
  if (batch.count() == 0) throw std::invalid_argument("run_bilstm: empty batch");
  if (batch.offsets.size() != batch.count()) throw std::invalid_argument("run_bilstm: offsets/lengths mismatch");
  const auto& shape = inputs.shape();
  if (shape.size() != 2 || shape[1] != lstm.forward.input_dim) {
    throw nn::NumericError("run_bilstm: input " + nn::shape_string(shape) + " does not match input width " +
                           std::to_string(lstm.forward.input_dim));
  }
  for (std::size_t b = 0; b < batch.count(); ++b) {
    if (batch.lengths[b] == 0) throw std::invalid_argument("run_bilstm: sequence of length 0");
    if (batch.offsets[b] + batch.lengths[b] > shape[0]) throw std::invalid_argument("run_bilstm: sequence out of range");
  }
  const DirectionResult fw = run_direction(lstm.forward, inputs, batch, false, token_states);
  const DirectionResult bw = run_direction(lstm.backward, inputs, batch, true, token_states);
  BiLstmOutput out;
  out.final_states = nn::concat({fw.final_state, bw.final_state}, 1);
  if (token_states) {
    out.token_states = nn::concat({token_order(fw, batch, false), token_order(bw, batch, true)}, 1);
  }
  return out;
}

}  // namespace docgraph::gconv

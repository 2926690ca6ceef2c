#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "docgraph/nn/params.hpp"
#include "docgraph/nn/tape.hpp"

namespace docgraph::gconv {

/// One LSTM direction. Gate blocks in the 4H axis are ordered i, f, g, o.
struct LstmCell {
  nn::Parameter* w_input = nullptr;   // [in, 4H]
  nn::Parameter* w_hidden = nullptr;  // [H, 4H]
  nn::Parameter* bias = nullptr;      // [4H], forget block starts at 1
  std::size_t input_dim = 0;
  std::size_t hidden = 0;

  static LstmCell create(nn::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden, std::mt19937_64& rng);
};

struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  static BiLstm create(nn::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                       std::size_t hidden, std::mt19937_64& rng);
  std::size_t output_dim() const { return 2 * forward.hidden; }
};

/// Variable-length sequences packed back to back: sequence b covers rows
/// [offsets[b], offsets[b] + lengths[b]) of the input matrix.
struct SequenceBatch {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> lengths;

  static SequenceBatch from_lengths(const std::vector<std::size_t>& lengths);
  std::size_t count() const { return lengths.size(); }
  std::size_t total() const;
};

struct BiLstmOutput {
  nn::Var final_states;  // [B, 2H]: last forward state | last backward state
  nn::Var token_states;  // [total, 2H], only when requested
};

/// Runs both directions over every sequence of the batch at once. Every
/// length must be at least 1.
BiLstmOutput run_bilstm(const BiLstm& lstm, nn::Var inputs, const SequenceBatch& batch, bool token_states);

}  // namespace docgraph::gconv

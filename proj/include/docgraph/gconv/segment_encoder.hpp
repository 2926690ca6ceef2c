#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "docgraph/gconv/lstm.hpp"
#include "docgraph/nn/params.hpp"
#include "docgraph/nn/tape.hpp"

namespace docgraph::gconv {

/// Token embeddings followed by a single-layer BiLSTM. A segment's node
/// embedding is its final forward state concatenated with its final
/// backward state, so output_dim() = 2 x hidden.
struct SegmentEncoder {
  nn::Parameter* embedding = nullptr;  // [vocab, embed_dim]
  BiLstm lstm;

  static SegmentEncoder create(nn::ParameterStore& store, const std::string& prefix, std::size_t vocab_size,
                               std::size_t embed_dim, std::size_t hidden, std::mt19937_64& rng);

  std::size_t output_dim() const { return lstm.output_dim(); }

  /// [segments, output_dim()]. An empty id list stands for a lone [PAD].
  nn::Var encode(nn::Tape& tape, const std::vector<std::vector<std::size_t>>& segments) const;
};

/// Single-segment convenience; evaluates on a private tape.
nn::Tensor encode_segment(const SegmentEncoder& encoder, const std::vector<std::size_t>& token_ids);

}  // namespace docgraph::gconv

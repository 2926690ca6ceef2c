#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "docgraph/doc/tags.hpp"
#include "docgraph/doc/tokenizer.hpp"
#include "docgraph/doc/vocab.hpp"
#include "docgraph/gconv/lstm.hpp"
#include "docgraph/nn/params.hpp"
#include "docgraph/nn/tape.hpp"
#include "docgraph/tagger/crf.hpp"

namespace docgraph::tagger {

struct TaggerDims {
  std::size_t vocab = 3;
  std::size_t embed_dim = 64;  // d_tok
  std::size_t graph_dim = 0;   // width of the graph embedding fused into each token; 0 for none
  std::size_t hidden = 64;     // per direction
  std::size_t tags = 1;
};

/// Token embedding e(.), BiLSTM, emission projection and CRF.
struct TaggerParams {
  TaggerDims dims;
  nn::Parameter* embedding = nullptr;  // [vocab, embed_dim], U(-0.1, 0.1)
  gconv::BiLstm lstm;
  nn::Parameter* w_out = nullptr;  // [2 hidden, tags]
  nn::Parameter* b_out = nullptr;
  CrfParams crf;

  static TaggerParams create(nn::ParameterStore& store, const std::string& prefix, const TaggerDims& dims,
                             std::mt19937_64& rng);
};

/// Overwrites embedding rows with vectors from a text file holding a word
/// followed by embed_dim numbers per line. Returns the number of rows set.
std::size_t load_pretrained_vectors(TaggerParams& params, const doc::Vocabulary& vocab,
                                    const std::filesystem::path& path);

/// u_k = [e(x_k) | g_k] for packed token ids; g_k is the graph embedding row
/// of the segment owning token k. Without graph rows, u_k = e(x_k).
nn::Var fuse_inputs(nn::Tape& tape, const TaggerParams& params, const std::vector<std::size_t>& token_ids,
                    nn::Var graph_rows = {}, const std::vector<std::size_t>& owner = {});

/// Per-token emission scores [total, tags] for packed sequences.
nn::Var emissions(const TaggerParams& params, nn::Var fused, const gconv::SequenceBatch& batch);

struct EntitySpan {
  std::string entity_type;
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
  std::string value;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

/// Repairs stray I-X into B-X, then returns every maximal B-X I-X* run.
std::vector<EntitySpan> decode_entities(const std::vector<int>& tags, const std::vector<std::string>& tokens,
                                        const doc::TagSet& tagset,
                                        doc::TokenizerMode mode = doc::TokenizerMode::word);

/// Inverse of decode_entities for non-overlapping spans.
std::vector<int> encode_entities(const std::vector<EntitySpan>& spans, std::size_t length, const doc::TagSet& tagset);

}  // namespace docgraph::tagger

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/tokenizer.hpp"

namespace docgraph::train {

enum class Mode { baseline1, baseline2, gcn, gcn_multitask };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);
bool uses_graph(Mode mode);

struct Ablation {
  bool no_edge_features = false;
  bool no_text_features = false;
  bool no_attention = false;

  bool any() const { return no_edge_features || no_text_features || no_attention; }
  /// "full", or the active flags joined by '+'.
  std::string label() const;
};

struct ModelDims {
  std::size_t token_embed = 64;     // tagger d_tok
  std::size_t tagger_hidden = 64;   // per direction
  std::size_t segment_embed = 64;   // segment encoder token embedding
  std::size_t encoder_hidden = 32;  // per direction, so d_node = 64
  std::size_t graph_hidden = 64;    // triplet MLP hidden width
  std::size_t node_out = 64;        // d_node'
  std::size_t edge_out = 16;        // d_edge'
};

struct TrainConfig {
  Mode mode = Mode::gcn;
  Ablation ablation;
  ModelDims dims;
  std::size_t layers = 2;
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double grad_clip = 5.0;
  double dropout = 0.0;
  std::size_t patience = 10;  // epochs without validation gain; 0 disables early stopping
  double overlap_threshold = 0.7;
  doc::TokenizerMode tokenizer = doc::TokenizerMode::word;
  /// Entity schema; empty means every type seen in the training annotations, sorted.
  std::vector<std::string> entity_types;
  std::string pretrained_vectors;  // optional word-vector text file
  std::size_t jobs = 1;            // threads for evaluation

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace docgraph::train

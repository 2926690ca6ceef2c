#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/document.hpp"
#include "docgraph/doc/graph.hpp"
#include "docgraph/doc/tags.hpp"
#include "docgraph/doc/vocab.hpp"
#include "docgraph/gconv/graph_conv.hpp"
#include "docgraph/gconv/segment_encoder.hpp"
#include "docgraph/nn/params.hpp"
#include "docgraph/tagger/tagger.hpp"
#include "docgraph/train/config.hpp"

namespace docgraph::train {

/// Every learnable piece of one configuration. Which parts exist depends on
/// the mode: baselines have only the tagger, graph modes add the segment
/// encoder and graph layers, gcn_multitask adds the segment classifier and
/// the two task log-variances.
struct Model {
  TrainConfig config;
  doc::TagSet tagset;
  doc::Vocabulary vocab;
  std::unique_ptr<nn::ParameterStore> store = std::make_unique<nn::ParameterStore>();

  std::optional<gconv::SegmentEncoder> encoder;
  std::vector<gconv::GraphConvLayer> layers;
  tagger::TaggerParams tagger_params;
  nn::Parameter* classifier_w = nullptr;  // [d_node', entity types + 1]
  nn::Parameter* classifier_b = nullptr;
  nn::Parameter* task_log_vars = nullptr;  // [2]: extraction, segment classification

  bool multitask() const { return classifier_w != nullptr; }
  std::size_t class_count() const { return tagset.entity_count() + 1; }
};

/// Validates the config and initializes every parameter from config.seed.
Model build_model(const TrainConfig& config, doc::TagSet tagset, doc::Vocabulary vocab);

/// One document turned into model inputs.
struct PreparedDocument {
  const doc::Document* source = nullptr;
  doc::DocumentGraph graph;
  std::vector<std::vector<std::size_t>> token_ids;  // per segment, may be empty
  bool labeled = false;
  std::vector<std::vector<int>> gold_tags;          // per segment, per token
  std::vector<std::size_t> segment_class;
  std::size_t aligned = 0;
  std::vector<std::string> warnings;
};

PreparedDocument prepare_document(const Model& model, const doc::Document& doc, bool with_labels);

/// Tagger sequences for a document: one per segment (empty segments become a
/// lone [PAD]), or for baseline2 one sequence over the reading order with
/// [SEP] between consecutive segments.
struct SequenceLayout {
  gconv::SequenceBatch batch;
  std::vector<std::size_t> token_ids;
  /// For each packed token: owning segment, and its token index there or
  /// npos for padding and separators.
  std::vector<std::size_t> owner;
  std::vector<std::size_t> position;
};

SequenceLayout sequence_layout(const Model& model, const PreparedDocument& doc);

struct ForwardResult {
  SequenceLayout layout;
  nn::Var emissions;                 // [tokens, K]
  nn::Var node_embeddings;           // graph modes only
  std::vector<nn::Var> attention;    // graph modes only
  nn::Var class_logits;              // multitask only
};

/// dropout_rng non-null applies dropout with config.dropout to tagger inputs.
ForwardResult forward(nn::Tape& tape, const Model& model, const PreparedDocument& doc,
                      std::mt19937_64* dropout_rng = nullptr);

struct LossParts {
  double extraction = 0.0;      // -sum over sequences of CRF log-likelihood
  double classification = 0.0;  // mean BCE, multitask only
  double total = 0.0;
};

/// Training objective of one labeled document.
nn::Var document_loss(nn::Tape& tape, const Model& model, const PreparedDocument& doc, LossParts* parts = nullptr,
                      std::mt19937_64* dropout_rng = nullptr);

struct ExtractedEntity {
  std::string entity_type;
  std::string value;
  int segment_id = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct DocumentPrediction {
  std::string doc_id;
  std::vector<std::vector<int>> tags;  // per segment
  std::vector<ExtractedEntity> entities;
  std::vector<std::size_t> segment_class;  // multitask only: argmax per segment
  std::vector<nn::Tensor> attention;       // graph modes only
};

/// Graph stage, tagger, Viterbi and span decoding for one document.
DocumentPrediction tag_document(const Model& model, const doc::Document& doc);
DocumentPrediction predict(const Model& model, const PreparedDocument& doc);

/// {"doc_id", "entities": [{"type", "value", "segment_id", "token_range"}]}
nlohmann::json extraction_to_json(const DocumentPrediction& prediction);

/// Model checkpoint: config, schema, vocabulary and every parameter.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace docgraph::train

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docgraph/doc/document.hpp"
#include "docgraph/train/model.hpp"

namespace docgraph::train {

struct Score {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t support() const { return tp + fn; }
  double precision() const;
  double recall() const;
  /// 2PR / (P + R), 0 when both are 0.
  double f1() const;
  Score& operator+=(const Score& o);
};

struct Metrics {
  std::map<std::string, Score> per_type;
  Score micro;
  /// Gold entities whose value also appears as a gold entity of another type
  /// in the same document, against predictions carrying one of those values.
  Score ambiguous;
  std::optional<double> segment_accuracy;  // auxiliary classifier, multitask only
  std::size_t documents = 0;
};

/// Entity-level exact match on (type, normalized value); each gold entity
/// matches at most one prediction. predictions[i] belongs to gold[i].
Metrics score_predictions(const std::vector<doc::Document>& gold, const std::vector<DocumentPrediction>& predictions,
                          const std::vector<std::string>& entity_types,
                          doc::TokenizerMode mode = doc::TokenizerMode::word);

/// Tags every document (fanned over `jobs` threads) and scores it.
Metrics evaluate(const Model& model, const std::vector<doc::Document>& corpus, std::size_t jobs = 1);

/// Predictions for every document, in corpus order.
std::vector<DocumentPrediction> predict_corpus(const Model& model, const std::vector<doc::Document>& corpus,
                                               std::size_t jobs = 1);

/// {"mode", "seed", "per_type": {type: {p, r, f1, support}}, "micro_f1", ...}
nlohmann::json metrics_to_json(const Metrics& metrics, const TrainConfig& config);

}  // namespace docgraph::train

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "docgraph/doc/document.hpp"
#include "docgraph/train/config.hpp"
#include "docgraph/train/model.hpp"

namespace docgraph::train {

/// A non-finite loss or forward value. The message names epoch and document.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;    // mean per-document objective over the epoch
  double val_f1 = 0.0;  // NaN without a validation corpus
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch (last epoch without validation)
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  std::size_t aligned = 0;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Schema from config.entity_types, else every annotated type, sorted.
doc::TagSet schema_for(const std::vector<doc::Document>& corpus, const TrainConfig& config);

/// One Adam step per document in a seeded shuffled order, gradients clipped
/// to config.grad_clip, early stopping on validation micro-F1.
TrainResult train(const std::vector<doc::Document>& train_docs, const std::vector<doc::Document>& val_docs,
                  const TrainConfig& config, const TrainHooks& hooks = {});

/// "epoch,loss,val_f1" then one row per epoch.
std::string history_to_csv(const std::vector<EpochRecord>& history);

}  // namespace docgraph::train

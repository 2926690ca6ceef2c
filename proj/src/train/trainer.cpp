#include "docgraph/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "docgraph/nn/optim.hpp"
#include "docgraph/tagger/tagger.hpp"
#include "docgraph/train/evaluate.hpp"

namespace docgraph::train {

doc::TagSet schema_for(const std::vector<doc::Document>& corpus, const TrainConfig& config) {
  if (!config.entity_types.empty()) return doc::TagSet(config.entity_types);
  std::set<std::string> types;
  for (const auto& d : corpus) {
    for (const auto& a : d.annotations) types.insert(a.entity_type);
  }
  return doc::TagSet(std::vector<std::string>(types.begin(), types.end()));
}

namespace {

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::vector<nn::Tensor> snapshot(const nn::ParameterStore& store) {
  std::vector<nn::Tensor> out;
  for (const nn::Parameter* p : store.all()) out.push_back(p->value);
  return out;
}

void restore(nn::ParameterStore& store, const std::vector<nn::Tensor>& values) {
  std::size_t i = 0;
  for (nn::Parameter* p : store.all()) p->value = values[i++];
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainResult train(const std::vector<doc::Document>& train_docs, const std::vector<doc::Document>& val_docs,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train_docs.empty()) throw std::invalid_argument("train: training corpus is empty");
  TrainResult result;
  result.model = build_model(config, schema_for(train_docs, config), doc::Vocabulary::build(train_docs));
  Model& model = result.model;
  if (!config.pretrained_vectors.empty()) {
    tagger::load_pretrained_vectors(model.tagger_params, model.vocab, config.pretrained_vectors);
  }

  std::vector<PreparedDocument> prepared;
  prepared.reserve(train_docs.size());
  for (const auto& d : train_docs) {
    prepared.push_back(prepare_document(model, d, true));
    const auto& p = prepared.back();
    result.aligned += p.aligned;
    result.dropped += d.annotations.size() - p.aligned;
    result.warnings.insert(result.warnings.end(), p.warnings.begin(), p.warnings.end());
  }
  if (result.aligned == 0) throw std::invalid_argument("train: no annotation could be aligned to a segment");

  const auto params = model.store->all();
  nn::AdamState adam;
  nn::AdamConfig adam_config;
  adam_config.lr = config.learning_rate;
  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0xd1b54a32d192ed03ULL);

  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  const bool validate = !val_docs.empty();
  std::vector<nn::Tensor> best = snapshot(*model.store);
  result.best_val_f1 = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, order_rng);
    double total = 0.0;
    for (std::size_t idx : order) {
      const PreparedDocument& doc = prepared[idx];
      const std::string where = "epoch " + std::to_string(epoch) + ", document '" + doc.source->doc_id + "'";
      nn::Tape tape;
      LossParts parts;
      nn::Var loss;
      try {
        loss = document_loss(tape, model, doc, &parts, &dropout_rng);
      } catch (const nn::NumericError& e) {
        throw TrainingDivergence("training diverged at " + where + ": " + e.what());
      }
      if (!std::isfinite(parts.total)) throw TrainingDivergence("training diverged at " + where + ": loss is not finite");
      tape.backward(loss);
      const double norm = nn::clip_grad_norm(params, config.grad_clip);
      if (!std::isfinite(norm)) throw TrainingDivergence("training diverged at " + where + ": gradient is not finite");
      nn::adam_step(params, adam, adam_config);
      nn::zero_gradients(params);
      total += parts.total;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = total / static_cast<double>(prepared.size());
    rec.val_f1 = validate ? evaluate(model, val_docs, config.jobs).micro.f1() : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (!validate) {
      result.best_epoch = epoch;
      continue;
    }
    if (rec.val_f1 > result.best_val_f1) {
      result.best_val_f1 = rec.val_f1;
      result.best_epoch = epoch;
      best = snapshot(*model.store);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (validate) restore(*model.store, best);
  return result;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,loss,val_f1\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.loss) + "," + format_double(r.val_f1) + "\n";
  }
  return out;
}

}  // namespace docgraph::train

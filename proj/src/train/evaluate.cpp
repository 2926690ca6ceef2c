#include "docgraph/train/evaluate.hpp"

#include <set>
#include <stdexcept>
#include <thread>

#include "docgraph/doc/tokenizer.hpp"

namespace docgraph::train {

double Score::precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
double Score::recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
double Score::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Score& Score::operator+=(const Score& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

namespace {

using Key = std::pair<std::string, std::string>;  // (type, normalized value)

// Greedy one-to-one matching; returns per-type counts.
std::map<std::string, Score> match(const std::vector<Key>& gold, const std::vector<Key>& predicted) {
  std::map<std::string, Score> out;
  std::multiset<Key> open(gold.begin(), gold.end());
  for (const Key& p : predicted) {
    auto it = open.find(p);
    if (it != open.end()) {
      ++out[p.first].tp;
      open.erase(it);
    } else {
      ++out[p.first].fp;
    }
  }
  for (const Key& g : open) ++out[g.first].fn;
  return out;
}

}  // namespace

Metrics score_predictions(const std::vector<doc::Document>& gold, const std::vector<DocumentPrediction>& predictions,
                          const std::vector<std::string>& entity_types, doc::TokenizerMode mode) {
  if (gold.size() != predictions.size()) throw std::invalid_argument("score_predictions: corpus/prediction count mismatch");
  Metrics m;
  m.documents = gold.size();
  for (const auto& t : entity_types) m.per_type[t];
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (gold[d].doc_id != predictions[d].doc_id) {
      throw std::invalid_argument("score_predictions: prediction for '" + predictions[d].doc_id + "' paired with '" +
                                  gold[d].doc_id + "'");
    }
    std::vector<Key> g;
    for (const auto& a : gold[d].annotations) g.emplace_back(a.entity_type, doc::normalize_value(a.value, mode));
    std::vector<Key> p;
    for (const auto& e : predictions[d].entities) p.emplace_back(e.entity_type, doc::normalize_value(e.value, mode));

    for (const auto& [type, s] : match(g, p)) {
      m.per_type[type] += s;
      m.micro += s;
    }

    std::set<std::string> ambiguous_values;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[i].second == g[j].second && g[i].first != g[j].first) ambiguous_values.insert(g[i].second);
      }
    }
    std::vector<Key> ga, pa;
    for (const Key& k : g) if (ambiguous_values.count(k.second)) ga.push_back(k);
    for (const Key& k : p) if (ambiguous_values.count(k.second)) pa.push_back(k);
    for (const auto& [type, s] : match(ga, pa)) m.ambiguous += s;
  }
  return m;
}

std::vector<DocumentPrediction> predict_corpus(const Model& model, const std::vector<doc::Document>& corpus,
                                               std::size_t jobs) {
  std::vector<DocumentPrediction> out(corpus.size());
  auto work = [&](std::size_t first) {
    for (std::size_t i = first; i < corpus.size(); i += jobs) out[i] = tag_document(model, corpus[i]);
  };
  if (jobs <= 1 || corpus.size() < 2) {
    jobs = 1;
    work(0);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t t = 0; t < jobs; ++t) {
    threads.emplace_back([&, t] {
      try {
        work(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Metrics evaluate(const Model& model, const std::vector<doc::Document>& corpus, std::size_t jobs) {
  const auto predictions = predict_corpus(model, corpus, jobs);
  Metrics m = score_predictions(corpus, predictions, model.tagset.entity_types(), model.config.tokenizer);
  if (model.multitask()) {
    std::size_t correct = 0, total = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const auto labels = prepare_document(model, corpus[d], true);
      for (std::size_t s = 0; s < labels.segment_class.size(); ++s) {
        correct += labels.segment_class[s] == predictions[d].segment_class[s];
        ++total;
      }
    }
    m.segment_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
  return m;
}

nlohmann::json metrics_to_json(const Metrics& metrics, const TrainConfig& config) {
  auto score_json = [](const Score& s) {
    return nlohmann::json{{"p", s.precision()}, {"r", s.recall()}, {"f1", s.f1()}, {"support", s.support()},
                          {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
  };
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, s] : metrics.per_type) per_type[type] = score_json(s);
  nlohmann::json j = {{"mode", to_string(config.mode)},
                      {"ablation", config.ablation.label()},
                      {"layers", config.layers},
                      {"seed", config.seed},
                      {"documents", metrics.documents},
                      {"per_type", std::move(per_type)},
                      {"micro_precision", metrics.micro.precision()},
                      {"micro_recall", metrics.micro.recall()},
                      {"micro_f1", metrics.micro.f1()},
                      {"ambiguous", score_json(metrics.ambiguous)}};
  if (metrics.segment_accuracy) j["segment_accuracy"] = *metrics.segment_accuracy;
  return j;
}

}  // namespace docgraph::train

#include "docgraph/train/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace docgraph::train {

Mode parse_mode(std::string_view name) {
  if (name == "baseline1") return Mode::baseline1;
  if (name == "baseline2") return Mode::baseline2;
  if (name == "gcn") return Mode::gcn;
  if (name == "gcn_multitask") return Mode::gcn_multitask;
  throw std::invalid_argument("mode: unknown value '" + std::string(name) +
                              "' (expected baseline1, baseline2, gcn or gcn_multitask)");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::baseline1:
      return "baseline1";
    case Mode::baseline2:
      return "baseline2";
    case Mode::gcn:
      return "gcn";
    case Mode::gcn_multitask:
      return "gcn_multitask";
  }
  return "?";
}

bool uses_graph(Mode mode) { return mode == Mode::gcn || mode == Mode::gcn_multitask; }

std::string Ablation::label() const {
  std::string s;
  auto add = [&s](const char* name) {
    if (!s.empty()) s += '+';
    s += name;
  };
  if (no_edge_features) add("no_edge_features");
  if (no_text_features) add("no_text_features");
  if (no_attention) add("no_attention");
  return s.empty() ? "full" : s;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (ablation.any() && !uses_graph(mode)) fail("ablate", "ablation flags require mode gcn or gcn_multitask");
  if (uses_graph(mode) && layers == 0) fail("model.layers", "must be at least 1");
  const std::pair<const char*, std::size_t> sizes[] = {
      {"model.token_embed", dims.token_embed},       {"model.tagger_hidden", dims.tagger_hidden},
      {"model.segment_embed", dims.segment_embed},   {"model.encoder_hidden", dims.encoder_hidden},
      {"model.graph_hidden", dims.graph_hidden},     {"model.node_out", dims.node_out},
      {"model.edge_out", dims.edge_out}};
  for (const auto& [name, v] : sizes) {
    if (v == 0) fail(name, "must be positive");
  }
  if (epochs == 0) fail("train.epochs", "must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("train.learning_rate", "must be positive");
  if (!(grad_clip > 0.0)) fail("train.grad_clip", "must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("train.dropout", "must lie in [0, 1)");
  if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) fail("train.overlap_threshold", "must lie in (0, 1]");
  if (jobs == 0) fail("jobs", "must be positive");
  std::set<std::string> seen;
  for (const auto& t : entity_types) {
    if (t.empty()) fail("model.entity_types", "empty type name");
    if (!seen.insert(t).second) fail("model.entity_types", "duplicate type '" + t + "'");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"mode", to_string(c.mode)},
      {"ablation",
       {{"no_edge_features", c.ablation.no_edge_features},
        {"no_text_features", c.ablation.no_text_features},
        {"no_attention", c.ablation.no_attention}}},
      {"dims",
       {{"token_embed", c.dims.token_embed},
        {"tagger_hidden", c.dims.tagger_hidden},
        {"segment_embed", c.dims.segment_embed},
        {"encoder_hidden", c.dims.encoder_hidden},
        {"graph_hidden", c.dims.graph_hidden},
        {"node_out", c.dims.node_out},
        {"edge_out", c.dims.edge_out}}},
      {"layers", c.layers},
      {"epochs", c.epochs},
      {"learning_rate", c.learning_rate},
      {"seed", c.seed},
      {"grad_clip", c.grad_clip},
      {"dropout", c.dropout},
      {"patience", c.patience},
      {"overlap_threshold", c.overlap_threshold},
      {"tokenizer", doc::to_string(c.tokenizer)},
      {"entity_types", c.entity_types},
      {"pretrained_vectors", c.pretrained_vectors},
      {"jobs", c.jobs},
  };
}

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(where + key + ": wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw std::invalid_argument(where + it.key() + ": unknown key");
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  reject_unknown(j,
                 {"mode", "ablation", "dims", "layers", "epochs", "learning_rate", "seed", "grad_clip", "dropout",
                  "patience", "overlap_threshold", "tokenizer", "entity_types", "pretrained_vectors", "jobs"},
                 "");
  TrainConfig c;
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("ablation")) {
    const auto& a = j.at("ablation");
    reject_unknown(a, {"no_edge_features", "no_text_features", "no_attention"}, "ablation.");
    read(a, "no_edge_features", c.ablation.no_edge_features, "ablation.");
    read(a, "no_text_features", c.ablation.no_text_features, "ablation.");
    read(a, "no_attention", c.ablation.no_attention, "ablation.");
  }
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    reject_unknown(d,
                   {"token_embed", "tagger_hidden", "segment_embed", "encoder_hidden", "graph_hidden", "node_out",
                    "edge_out"},
                   "dims.");
    read(d, "token_embed", c.dims.token_embed, "dims.");
    read(d, "tagger_hidden", c.dims.tagger_hidden, "dims.");
    read(d, "segment_embed", c.dims.segment_embed, "dims.");
    read(d, "encoder_hidden", c.dims.encoder_hidden, "dims.");
    read(d, "graph_hidden", c.dims.graph_hidden, "dims.");
    read(d, "node_out", c.dims.node_out, "dims.");
    read(d, "edge_out", c.dims.edge_out, "dims.");
  }
  read(j, "layers", c.layers, "");
  read(j, "epochs", c.epochs, "");
  read(j, "learning_rate", c.learning_rate, "");
  read(j, "seed", c.seed, "");
  read(j, "grad_clip", c.grad_clip, "");
  read(j, "dropout", c.dropout, "");
  read(j, "patience", c.patience, "");
  read(j, "overlap_threshold", c.overlap_threshold, "");
  if (j.contains("tokenizer")) c.tokenizer = doc::parse_tokenizer_mode(j.at("tokenizer").get<std::string>());
  read(j, "entity_types", c.entity_types, "");
  read(j, "pretrained_vectors", c.pretrained_vectors, "");
  read(j, "jobs", c.jobs, "");
  return c;
}

}  // namespace docgraph::train

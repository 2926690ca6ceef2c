#include "run_config.hpp"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace docgraph::cli {

namespace {

const std::set<std::string> kGeneratorKeys = {
    "n_documents",  "n_templates",        "jitter", "min_distractors", "max_distractors", "min_item_rows",
    "max_item_rows", "empty_segment_rate", "train_fraction", "val_fraction", "test_fraction", "page_w", "page_h"};
const std::set<std::string> kDimKeys = {"token_embed", "tagger_hidden", "segment_embed", "encoder_hidden",
                                        "graph_hidden", "node_out",     "edge_out"};
const std::set<std::string> kModelKeys = {"mode",       "layers",       "entity_types",     "tokenizer",
                                          "pretrained_vectors", "no_edge_features", "no_text_features",
                                          "no_attention"};
const std::set<std::string> kTrainKeys = {"epochs", "learning_rate", "grad_clip", "dropout", "patience",
                                          "overlap_threshold"};
const std::set<std::string> kAblateKeys = {"cells", "layers", "seeds"};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Numbers and booleans become JSON scalars, anything else a string.
nlohmann::json scalar(const std::string& text) {
  if (text == "true" || text == "false") return text == "true";
  try {
    std::size_t used = 0;
    if (text.find_first_of(".eE") == std::string::npos && text.find('-') == std::string::npos) {
      const unsigned long long v = std::stoull(text, &used);
      if (used == text.size()) return v;
    }
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

const ConfigTree* section(const ConfigTree& tree, const std::string& name, const std::set<std::string>& known) {
  const auto child = tree.get_child_optional(name);
  if (!child) return nullptr;
  for (const auto& [key, value] : *child) {
    if (!known.count(key)) throw ConfigError(name + "." + key + ": unknown key");
    if (!value.empty()) throw ConfigError(name + "." + key + ": nested keys are not allowed");
  }
  return &*child;
}

}  // namespace

ConfigTree read_config_file(const std::filesystem::path& path) {
  ConfigTree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  const std::set<std::string> sections = {"generator", "model", "train", "ablate"};
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) throw ConfigError(path.string() + ": unknown section or top-level key '" + name + "'");
  }
  return tree;
}

void apply_override(ConfigTree& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
    throw ConfigError("--set " + assignment + ": expected section.key=value");
  }
  tree.put(boost::property_tree::ptree::path_type(assignment.substr(0, eq), '.'), assignment.substr(eq + 1));
}

synth::GeneratorConfig generator_config(const ConfigTree& tree, std::uint64_t seed) {
  nlohmann::json j = nlohmann::json::object();
  if (const ConfigTree* s = section(tree, "generator", kGeneratorKeys)) {
    for (const auto& [key, value] : *s) j[key] = scalar(value.data());
  }
  j["seed"] = seed;
  try {
    synth::GeneratorConfig c = synth::generator_config_from_json(j);
    c.validate();
    return c;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

train::TrainConfig train_config(const ConfigTree& tree, std::uint64_t seed, std::size_t jobs) {
  nlohmann::json j = nlohmann::json::object();
  if (const ConfigTree* s = section(tree, "model", [] {
        auto keys = kModelKeys;
        keys.insert(kDimKeys.begin(), kDimKeys.end());
        return keys;
      }())) {
    for (const auto& [key, value] : *s) {
      const std::string& text = value.data();
      if (kDimKeys.count(key)) {
        j["dims"][key] = scalar(text);
      } else if (key.rfind("no_", 0) == 0) {
        j["ablation"][key] = scalar(text);
      } else if (key == "entity_types") {
        j[key] = split_list(text);
      } else if (key == "mode" || key == "tokenizer" || key == "pretrained_vectors") {
        j[key] = text;
      } else {
        j[key] = scalar(text);
      }
    }
  }
  if (const ConfigTree* s = section(tree, "train", kTrainKeys)) {
    for (const auto& [key, value] : *s) j[key] = scalar(value.data());
  }
  j["seed"] = seed;
  j["jobs"] = jobs;
  try {
    train::TrainConfig c = train::train_config_from_json(j);
    c.validate();
    return c;
  } catch (const std::invalid_argument& e) {
    // Parser messages name the JSON key; report the INI section.key instead.
    std::string msg = e.what();
    std::string key = msg.substr(0, msg.find(':'));
    if (key.rfind("dims.", 0) == 0 || key.rfind("ablation.", 0) == 0) key = key.substr(key.find('.') + 1);
    if (kModelKeys.count(key) || kDimKeys.count(key)) {
      msg = "model." + key + msg.substr(msg.find(':'));
    } else if (kTrainKeys.count(key)) {
      msg = "train." + key + msg.substr(msg.find(':'));
    }
    throw ConfigError(msg);
  }
}

std::vector<GridCell> ablation_grid(const ConfigTree& tree, const train::TrainConfig& base) {
  std::vector<std::string> cells = {"full", "no_edge_features", "no_text_features", "no_attention"};
  std::vector<std::size_t> layers = {base.layers};
  std::size_t seeds = 1;
  if (const ConfigTree* s = section(tree, "ablate", kAblateKeys)) {
    if (auto v = s->get_optional<std::string>("cells")) cells = split_list(*v);
    if (auto v = s->get_optional<std::string>("layers")) {
      layers.clear();
      for (const auto& item : split_list(*v)) {
        const nlohmann::json n = scalar(item);
        if (!n.is_number_unsigned() || n.get<std::size_t>() == 0) {
          throw ConfigError("ablate.layers: '" + item + "' is not a positive integer");
        }
        layers.push_back(n.get<std::size_t>());
      }
    }
    if (auto v = s->get_optional<std::string>("seeds")) {
      const nlohmann::json n = scalar(*v);
      if (!n.is_number_unsigned() || n.get<std::size_t>() == 0) throw ConfigError("ablate.seeds: must be a positive integer");
      seeds = n.get<std::size_t>();
    }
  }
  if (cells.empty()) throw ConfigError("ablate.cells: empty grid");
  if (layers.empty()) throw ConfigError("ablate.layers: empty list");

  std::vector<GridCell> out;
  for (const auto& cell : cells) {
    train::TrainConfig c = base;
    c.ablation = {};
    if (cell == "baseline1" || cell == "baseline2" || cell == "gcn" || cell == "gcn_multitask") {
      c.mode = train::parse_mode(cell);
    } else if (cell != "full") {
      if (!train::uses_graph(c.mode)) c.mode = train::Mode::gcn;
      std::stringstream in(cell);
      std::string flag;
      while (std::getline(in, flag, '+')) {
        if (flag == "no_edge_features") c.ablation.no_edge_features = true;
        else if (flag == "no_text_features") c.ablation.no_text_features = true;
        else if (flag == "no_attention") c.ablation.no_attention = true;
        else throw ConfigError("ablate.cells: unknown cell '" + cell + "'");
      }
    }
    // Depth only matters for graph models; baselines get one cell per seed.
    const std::vector<std::size_t> depths = train::uses_graph(c.mode) ? layers : std::vector<std::size_t>{base.layers};
    for (std::size_t l : depths) {
      for (std::size_t k = 0; k < seeds; ++k) {
        GridCell g;
        g.config = c;
        g.config.layers = l;
        g.config.seed = base.seed + k;
        g.name = std::string(train::to_string(c.mode)) + "/" + c.ablation.label() + "/L" + std::to_string(l) + "/s" +
                 std::to_string(g.config.seed);
        try {
          g.config.validate();
        } catch (const std::invalid_argument& e) {
          throw ConfigError(g.name + ": " + e.what());
        }
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

nlohmann::json tree_to_json(const ConfigTree& tree) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, child] : tree) {
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [key, value] : child) s[key] = value.data();
    j[name] = std::move(s);
  }
  return j;
}

}  // namespace docgraph::cli

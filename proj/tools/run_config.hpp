#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "docgraph/synth/generator.hpp"
#include "docgraph/train/config.hpp"

namespace docgraph::cli {

/// Bad flag, config file or config value. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI document with sections [generator], [model], [train] and [ablate].
using ConfigTree = boost::property_tree::ptree;

ConfigTree read_config_file(const std::filesystem::path& path);
/// "section.key=value"; later overrides win.
void apply_override(ConfigTree& tree, const std::string& assignment);

synth::GeneratorConfig generator_config(const ConfigTree& tree, std::uint64_t seed);
train::TrainConfig train_config(const ConfigTree& tree, std::uint64_t seed, std::size_t jobs);

/// One cell of an ablation grid.
struct GridCell {
  std::string name;  // e.g. "gcn/no_edge_features/L2/s1"
  train::TrainConfig config;
};

/// [ablate] cells = comma list of "full", mode names, or ablation flags joined
/// by '+'; layers = comma list; seeds = count of seeds starting at `seed`.
std::vector<GridCell> ablation_grid(const ConfigTree& tree, const train::TrainConfig& base);

/// Every value of the tree as a JSON object of sections, for manifests.
nlohmann::json tree_to_json(const ConfigTree& tree);

}  // namespace docgraph::cli

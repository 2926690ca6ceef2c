#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "docgraph/nn/params.hpp"

namespace docgraph::nn {

inline constexpr int kCheckpointFormatVersion = 1;

/// {format_version, config, parameters: {name -> {shape, values}}}
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json parameters = nlohmann::json::object();
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json parameters_to_json(const ParameterStore& store);
/// Copies values into an existing store. Every stored parameter must be
/// present with a matching shape.
void load_parameters(const nlohmann::json& parameters, ParameterStore& store);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace docgraph::nn

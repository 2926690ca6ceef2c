#include "docgraph/nn/checkpoint.hpp"

#include <fstream>

namespace docgraph::nn {

using nlohmann::json;

json parameters_to_json(const ParameterStore& store) {
  json out = json::object();
  for (const Parameter* p : store.all()) {
    out[p->name] = {{"shape", p->value.shape()}, {"values", p->value.storage()}};
  }
  return out;
}

void load_parameters(const json& parameters, ParameterStore& store) {
  for (Parameter* p : store.all()) {
    if (!parameters.contains(p->name)) throw CheckpointError("checkpoint lacks parameter '" + p->name + "'");
    const json& entry = parameters.at(p->name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p->value.shape()) {
      throw CheckpointError("parameter '" + p->name + "' has shape " + shape_string(shape) +
                            " in checkpoint but " + shape_string(p->value.shape()) + " in the model");
    }
    auto values = entry.at("values").get<std::vector<double>>();
    p->value = Tensor(shape, std::move(values));
    p->grad = Tensor(shape);
  }
  if (parameters.size() != store.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(parameters.size()) + " parameters, model has " +
                          std::to_string(store.size()));
  }
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  return json{{"format_version", ckpt.format_version}, {"config", ckpt.config}, {"parameters", ckpt.parameters}};
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  if (!j.is_object() || !j.contains("format_version")) throw CheckpointError("checkpoint has no format_version");
  c.format_version = j.at("format_version").get<int>();
  if (c.format_version != kCheckpointFormatVersion) {
    throw CheckpointError("unsupported checkpoint format_version " + std::to_string(c.format_version) +
                          " (expected " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  c.config = j.value("config", json::object());
  c.parameters = j.at("parameters");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out << checkpoint_to_json(ckpt).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace docgraph::nn

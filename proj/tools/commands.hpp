#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace docgraph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// What a run did. Written last, as manifest.json in the output directory.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<std::string> outputs;  // file names relative to the output directory
  double duration_seconds = 0.0;

  nlohmann::json to_json() const;
};

std::string version_string();

/// Parses argv and runs one subcommand; returns the process exit code.
int run(int argc, char** argv);

}  // namespace docgraph::cli

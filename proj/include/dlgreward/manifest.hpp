#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dlgreward {

inline constexpr const char* kToolName = "dlgreward";
inline constexpr const char* kToolVersion = "0.1.0";

// Streaming FNV-1a over the file's bytes, rendered as "fnv1a64:<hex>".
std::string file_digest(const std::string& path);

struct Manifest {
  std::string subcommand;
  nlohmann::ordered_json config;  // resolved settings for the invocation
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
};

std::string manifest_path_for(const std::string& output_path);

// Deterministic JSON (no timestamps, no environment capture).
void write_manifest(const std::string& path, const Manifest& manifest);

}  // namespace dlgreward

#include "dlgreward/manifest.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "dlgreward/error.hpp"

namespace dlgreward {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_io("cannot open: " + path);
  }
  std::uint64_t h = 14695981039346656037ull;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  if (in.bad()) {
    throw_io("read failed: " + path);
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + hex;
}

std::string manifest_path_for(const std::string& output_path) {
  return output_path + ".manifest.json";
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  nlohmann::ordered_json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["subcommand"] = manifest.subcommand;
  doc["config"] = manifest.config;
  doc["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, digest] : manifest.inputs) {
    doc["inputs"].push_back({{"path", p}, {"digest", digest}});
  }
  doc["outputs"] = nlohmann::ordered_json::array();
  for (const auto& [p, digest] : manifest.outputs) {
    doc["outputs"].push_back({{"path", p}, {"digest", digest}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw_io("cannot open for writing: " + path);
  }
  out << doc.dump(2) << '\n';
  out.flush();
  if (!out) {
    throw_io("write failed: " + path);
  }
}

}  // namespace dlgreward

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace jsi {

/// Hex SHA-1 of "blob <size>\0<content>", as git hashes file contents.
std::string git_blob_hash(const std::string& content);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string output_dir;
  std::string started;   // ISO-8601 UTC
  std::string finished;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  /// Writes `run.json` into `output_dir`.
  void write() const;
};

std::string utc_timestamp();

}  // namespace jsi

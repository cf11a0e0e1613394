#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace asep {

/// Library version string.
const char* version();

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Record of one command invocation, sufficient to replay it.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;  // argument vector after the program name
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version;
  double wall_seconds = 0.0;
  std::string output_digest;  // sha256_hex of the primary output
  bool deterministic = true;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace asep

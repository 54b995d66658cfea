#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riskfuse/json_io.hpp"
#include "riskfuse/params.hpp"

namespace riskfuse {

inline constexpr const char* kToolVersion = "1.0.0";

/// Provenance written next to every artifact as `<artifact>.manifest.json`.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_hash;  // sha256 of the config text, or of the joined arguments
  std::string parameter_set;
  std::map<std::string, std::string> parameter_checksums;
  std::optional<std::uint64_t> seed;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> outputs;  // artifact path -> sha256

  json to_json() const;
};

RunManifest manifest_from_json(const json& j);

/// ISO-8601 UTC, second resolution.
std::string utc_timestamp();

RunManifest begin_manifest(const std::string& command, const std::vector<std::string>& arguments,
                           const ParameterSet* params, std::optional<std::uint64_t> seed,
                           const std::string& config_text = {});

/// Records the artifact checksum, stamps `finished` and writes `<artifact>.manifest.json`.
std::filesystem::path write_manifest(RunManifest manifest, const std::filesystem::path& artifact);

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

}  // namespace riskfuse

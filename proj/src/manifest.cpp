#include "riskfuse/manifest.hpp"

#include <chrono>
#include <ctime>

#include "riskfuse/errors.hpp"

namespace riskfuse {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["config_hash"] = config_hash;
  j["parameter_set"] = parameter_set;
  j["parameter_checksums"] = parameter_checksums;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["tool_version"] = tool_version;
  j["started"] = started;
  j["finished"] = finished;
  j["outputs"] = outputs;
  return j;
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.value("arguments", std::vector<std::string>{});
    m.config_hash = j.value("config_hash", "");
    m.parameter_set = j.value("parameter_set", "");
    m.parameter_checksums = j.value("parameter_checksums", std::map<std::string, std::string>{});
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) m.seed = it->get<std::uint64_t>();
    m.tool_version = j.value("tool_version", "");
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run manifest: ") + e.what());
  }
}

RunManifest begin_manifest(const std::string& command, const std::vector<std::string>& arguments,
                           const ParameterSet* params, std::optional<std::uint64_t> seed,
                           const std::string& config_text) {
  RunManifest m;
  m.command = command;
  m.arguments = arguments;
  if (config_text.empty()) {
    std::string joined;
    for (const auto& a : arguments) joined += a + '\n';
    m.config_hash = sha256_hex(joined);
  } else {
    m.config_hash = sha256_hex(config_text);
  }
  if (params) {
    m.parameter_set = params->name + "@" + params->version;
    m.parameter_checksums = params->checksums;
  }
  m.seed = seed;
  m.started = utc_timestamp();
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact) {
  return artifact.string() + ".manifest.json";
}

std::filesystem::path write_manifest(RunManifest manifest, const std::filesystem::path& artifact) {
  if (std::filesystem::exists(artifact)) manifest.outputs[artifact.filename().string()] = sha256_file(artifact);
  manifest.finished = utc_timestamp();
  const auto path = manifest_path_for(artifact);
  write_text_file(path, manifest.to_json().dump(2) + "\n");
  return path;
}

}  // namespace riskfuse

#include "doctest.h"

#include <filesystem>

#include "oracles.hpp"
#include "riskfuse/manifest.hpp"

using namespace riskfuse;
namespace fs = std::filesystem;

TEST_SUITE("manifest") {
  TEST_CASE("sidecar records inputs and the artifact checksum") {
    const fs::path dir = fs::temp_directory_path() / "riskfuse_manifest_test";
    fs::create_directories(dir);
    const fs::path artifact = dir / "out.ndjson";
    write_text_file(artifact, "{\"x\":1}\n");

    auto m = begin_manifest("simulate", {"--config", "a.json"}, &oracle::params(), 42, "{\"n\": 3}");
    CHECK(m.config_hash == sha256_hex("{\"n\": 3}"));
    CHECK(m.parameter_set == "default@1.0.0");
    auto path = write_manifest(m, artifact);
    CHECK(path == manifest_path_for(artifact));
    CHECK(path.filename() == "out.ndjson.manifest.json");

    auto back = manifest_from_json(json::parse(read_text_file(path)));
    CHECK(back.command == "simulate");
    CHECK(back.arguments == std::vector<std::string>{"--config", "a.json"});
    CHECK(back.seed == 42u);
    CHECK(back.tool_version == std::string(kToolVersion));
    CHECK(back.parameter_checksums == oracle::params().checksums);
    CHECK(back.outputs.at("out.ndjson") == sha256_hex("{\"x\":1}\n"));
    CHECK_FALSE(back.finished.empty());
    fs::remove_all(dir);
  }

  TEST_CASE("without a config the arguments are hashed") {
    auto a = begin_manifest("score", {"--tau", "5"}, nullptr, std::nullopt);
    auto b = begin_manifest("score", {"--tau", "10"}, nullptr, std::nullopt);
    CHECK(a.config_hash != b.config_hash);
    CHECK_FALSE(a.seed.has_value());
    CHECK(utc_timestamp().size() == 20);
  }
}

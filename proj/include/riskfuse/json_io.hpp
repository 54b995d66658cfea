#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace riskfuse {

using json = nlohmann::json;

/// Serialize with every floating-point value printed as a 17-significant-digit
/// decimal, so values round-trip exactly. Integers, strings and literals are
/// emitted as nlohmann would.
std::string dump17(const json& value);

/// Format one double with 17 significant digits.
std::string format17(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Parse a newline-delimited JSON file; blank lines are skipped.
std::vector<json> read_ndjson(const std::filesystem::path& path);

}  // namespace riskfuse

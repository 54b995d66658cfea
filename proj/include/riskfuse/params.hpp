#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "riskfuse/mendelian.hpp"
#include "riskfuse/penetrance_mod.hpp"
#include "riskfuse/relative_hazard.hpp"

namespace riskfuse {

/// Everything the scoring models need, loaded from one directory whose
/// manifest.json lists every file with its SHA-256 checksum.
struct ParameterSet {
  std::string name;
  std::string version;
  std::filesystem::path directory;
  std::map<std::string, std::string> checksums;  // file name -> sha256 hex

  PenetranceTable penetrance;
  RelativeHazardModel relative_hazard;
  NormalizationTable normalization;
  StratumRules stratum_rules;
};

/// Loads and validates a parameter directory. Throws ParameterError on a
/// missing file, checksum mismatch or invalid table.
ParameterSet load_parameter_set(const std::filesystem::path& directory);

/// Location of the shipped default parameter set.
std::filesystem::path default_parameter_directory();

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& file);

/// Minimal CSV reader for the parameter tables: header row, comma separated,
/// no quoting. '#' lines are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};
CsvTable parse_csv(std::string_view text, const std::string& source = "csv");

}  // namespace riskfuse

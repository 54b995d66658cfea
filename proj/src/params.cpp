#include "riskfuse/params.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "riskfuse/errors.hpp"
#include "riskfuse/json_io.hpp"

namespace riskfuse {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const fs::path& file) { return sha256_hex(read_text_file(file)); }

fs::path default_parameter_directory() {
  if (const char* env = std::getenv("RISKFUSE_PARAMS")) return env;
  return fs::path(RISKFUSE_SOURCE_DIR) / "params" / "default";
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParameterError(where + ": not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& where) {
  double v = to_double(s, where);
  if (v != static_cast<int>(v)) throw ParameterError(where + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

Race race_key(const std::string& s, const std::string& where) {
  auto r = race_from_string(s);
  if (!r || *r == Race::unknown) throw ParameterError(where + ": unknown race '" + s + "'");
  return *r;
}

std::optional<Race> race_or_all(const std::string& s, const std::string& where) {
  if (s == "all") return std::nullopt;
  return race_key(s, where);
}

Sex sex_key(const std::string& s, const std::string& where) {
  if (s == "female") return Sex::female;
  if (s == "male") return Sex::male;
  throw ParameterError(where + ": unknown sex '" + s + "'");
}

AgeBand band_key(const std::string& s, const std::string& where) {
  if (s == "lt50") return AgeBand::under_50;
  if (s == "ge50") return AgeBand::fifty_plus;
  throw ParameterError(where + ": unknown age band '" + s + "'");
}

// Age-indexed table: "age" column with 1..94 plus named curves.
std::map<std::string, std::vector<double>> age_columns(const CsvTable& t, const std::string& file) {
  int age_col = t.column("age");
  if (age_col < 0) throw ParameterError(file + ": missing 'age' column");
  if (t.rows.size() != static_cast<std::size_t>(kMaxAge))
    throw ParameterError(file + ": expected 94 age rows, got " + std::to_string(t.rows.size()));
  std::map<std::string, std::vector<double>> out;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (static_cast<int>(c) == age_col) continue;
    auto& curve = out[t.header[c]];
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto where = file + ":" + std::to_string(r + 2);
      if (to_int(t.rows[r][age_col], where) != static_cast<int>(r) + 1)
        throw ParameterError(where + ": ages must run 1..94 in order");
      curve.push_back(to_double(t.rows[r][c], where));
    }
  }
  return out;
}

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(key);
  while (std::getline(in, part, ':')) parts.push_back(part);
  return parts;
}

void require_columns(const CsvTable& t, const std::string& file, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (t.column(n) < 0) throw ParameterError(file + ": missing column '" + n + "'");
}

void load_penetrance(const CsvTable& t, PenetranceTable& table) {
  for (auto& [key, curve] : age_columns(t, "penetrance.csv")) {
    auto parts = split_key(key);
    if (parts.size() != 4) throw ParameterError("penetrance.csv: bad column '" + key + "'");
    CancerSite site;
    if (parts[0] == "breast")
      site = CancerSite::breast;
    else if (parts[0] == "ovarian")
      site = CancerSite::ovarian;
    else
      throw ParameterError("penetrance.csv: unknown cancer '" + parts[0] + "'");
    int g = to_int(parts[2], "penetrance.csv column " + key);
    if (g < 0 || g > 3) throw ParameterError("penetrance.csv: genotype out of range in '" + key + "'");
    table.set_penetrance(site, sex_key(parts[1], "penetrance.csv"), static_cast<Genotype>(g),
                         race_or_all(parts[3], "penetrance.csv"), std::move(curve));
  }
}

void load_mortality(const CsvTable& t, PenetranceTable& table) {
  for (auto& [key, curve] : age_columns(t, "mortality.csv")) {
    auto parts = split_key(key);
    if (parts.size() != 2) throw ParameterError("mortality.csv: bad column '" + key + "'");
    table.set_mortality(sex_key(parts[0], "mortality.csv"), race_or_all(parts[1], "mortality.csv"), std::move(curve));
  }
}

void load_allele_frequencies(const CsvTable& t, PenetranceTable& table) {
  require_columns(t, "allele_freq.csv", {"locus", "ethnicity", "frequency"});
  std::map<std::string, AlleleFrequencies> by_ethnicity;
  std::map<std::string, int> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto where = "allele_freq.csv:" + std::to_string(r + 2);
    const auto& row = t.rows[r];
    const auto& locus = row[t.column("locus")];
    const auto& eth = row[t.column("ethnicity")];
    double f = to_double(row[t.column("frequency")], where);
    if (locus == "BRCA1")
      by_ethnicity[eth].brca1 = f;
    else if (locus == "BRCA2")
      by_ethnicity[eth].brca2 = f;
    else
      throw ParameterError(where + ": unknown locus '" + locus + "'");
    ++seen[eth];
  }
  for (const char* eth : {"ashkenazi", "general"}) {
    if (seen[eth] != 2) throw ParameterError(std::string("allele_freq.csv: need BRCA1 and BRCA2 rows for ") + eth);
    table.set_allele_frequencies(std::string(eth) == "ashkenazi", by_ethnicity[eth]);
  }
}

void load_coefficients(const CsvTable& t, RelativeHazardModel& model) {
  require_columns(t, "relhaz_coefficients.csv", {"race", "index", "beta"});
  std::map<Race, std::array<bool, 19>> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto where = "relhaz_coefficients.csv:" + std::to_string(r + 2);
    const auto& row = t.rows[r];
    Race race = race_key(row[t.column("race")], where);
    int k = to_int(row[t.column("index")], where);
    if (k < 1 || k > 19) throw ParameterError(where + ": coefficient index must be 1..19");
    model.coefficients[race].beta[k - 1] = to_double(row[t.column("beta")], where);
    seen[race][k - 1] = true;
  }
  for (const auto& [race, flags] : seen)
    for (int k = 0; k < 19; ++k)
      if (!flags[k])
        throw ParameterError("relhaz_coefficients.csv: beta " + std::to_string(k + 1) + " missing for " +
                             std::string(to_string(race)));
}

void load_baseline(const CsvTable& t, RelativeHazardModel& model) {
  require_columns(t, "bcrat_baseline.csv",
                  {"race", "interval_start", "interval_end", "breast_hazard", "competing_hazard"});
  std::map<Race, int> count;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto where = "bcrat_baseline.csv:" + std::to_string(r + 2);
    const auto& row = t.rows[r];
    Race race = race_key(row[t.column("race")], where);
    double start = to_double(row[t.column("interval_start")], where);
    double end = to_double(row[t.column("interval_end")], where);
    const auto at = std::find(kBaselineCuts.begin(), kBaselineCuts.end() - 1, start);
    const int cell = static_cast<int>(at - kBaselineCuts.begin());
    if (at == kBaselineCuts.end() - 1 || end != kBaselineCuts[cell + 1])
      throw ParameterError(where + ": intervals must be the 13 cells 20-25, 25-30, ..., 75-80, 80-90");
    double hb = to_double(row[t.column("breast_hazard")], where);
    double hd = to_double(row[t.column("competing_hazard")], where);
    if (hb < 0.0 || hd < 0.0) throw ParameterError(where + ": negative hazard");
    model.baseline[race].breast[cell] = hb;
    model.baseline[race].competing[cell] = hd;
    ++count[race];
  }
  for (const auto& [race, n] : count)
    if (n != kBaselineIntervals)
      throw ParameterError("bcrat_baseline.csv: expected 13 intervals for " + std::string(to_string(race)));
}

void load_attributable_risk(const CsvTable& t, RelativeHazardModel& model, NormalizationTable& norm) {
  require_columns(t, "attributable_risk.csv", {"race", "band", "one_minus_ar"});
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto where = "attributable_risk.csv:" + std::to_string(r + 2);
    const auto& row = t.rows[r];
    Race race = race_key(row[t.column("race")], where);
    int band = static_cast<int>(band_key(row[t.column("band")], where));
    double v = to_double(row[t.column("one_minus_ar")], where);
    if (!(v > 0.0)) throw ParameterError(where + ": (1 - AR) must be positive");
    norm.one_minus_ar[race][band] = v;
  }
  for (auto& [race, base] : model.baseline) {
    auto it = norm.one_minus_ar.find(race);
    if (it == norm.one_minus_ar.end())
      throw ParameterError("attributable_risk.csv: missing race " + std::string(to_string(race)));
    base.one_minus_ar = it->second;
  }
}

int category_index(const std::string& factor, const std::string& category, const std::string& where) {
  static const std::map<std::string, std::vector<std::string>> kCategories{
      {"menarche", {"ge14", "12_13", "lt12"}},
      {"biopsies", {"0", "1", "ge2"}},
      {"hyperplasia", {"0", "1", "unknown"}},
  };
  auto it = kCategories.find(factor);
  if (it == kCategories.end()) throw ParameterError(where + ": unknown factor '" + factor + "'");
  for (std::size_t i = 0; i < it->second.size(); ++i)
    if (it->second[i] == category) return static_cast<int>(i);
  throw ParameterError(where + ": unknown category '" + category + "' for " + factor);
}

void load_covariates(const CsvTable& t, RelativeHazardModel& model) {
  require_columns(t, "covariate_distribution.csv", {"race", "band", "factor", "category", "probability"});
  static const std::vector<std::string> kFirstBirth{"lt20", "20_24", "25_29", "gt29"};
  static const std::vector<std::string> kRelatives{"0", "1", "ge2"};
  std::map<Race, std::array<CovariateDistribution, 2>> dist;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    auto where = "covariate_distribution.csv:" + std::to_string(r + 2);
    const auto& row = t.rows[r];
    Race race = race_key(row[t.column("race")], where);
    int band = static_cast<int>(band_key(row[t.column("band")], where));
    auto it = dist.find(race);
    if (it == dist.end()) {
      // start from all-zero tables so that omitted categories mean probability 0
      std::array<CovariateDistribution, 2> empty;
      for (auto& d : empty) d.menarche = d.biopsies = d.hyperplasia = {0.0, 0.0, 0.0};
      it = dist.emplace(race, empty).first;
    }
    auto& d = it->second[band];
    const auto& factor = row[t.column("factor")];
    const auto& category = row[t.column("category")];
    double p = to_double(row[t.column("probability")], where);
    if (factor == "first_birth_relatives") {
      auto colon = category.find(':');
      if (colon == std::string::npos) throw ParameterError(where + ": joint category must be 'x3:x4'");
      auto fb = std::find(kFirstBirth.begin(), kFirstBirth.end(), category.substr(0, colon));
      auto rel = std::find(kRelatives.begin(), kRelatives.end(), category.substr(colon + 1));
      if (fb == kFirstBirth.end() || rel == kRelatives.end())
        throw ParameterError(where + ": unknown joint category '" + category + "'");
      d.first_birth_relatives[fb - kFirstBirth.begin()][rel - kRelatives.begin()] = p;
    } else {
      int c = category_index(factor, category, where);
      (factor == "menarche" ? d.menarche : factor == "biopsies" ? d.biopsies : d.hyperplasia)[c] = p;
    }
  }
  for (auto& [race, bands] : dist) {
    for (auto& d : bands) {
      try {
        d.validate();
      } catch (const ParameterError& e) {
        throw ParameterError("covariate_distribution.csv (" + std::string(to_string(race)) + "): " + e.what());
      }
    }
  }
  model.covariates = std::move(dist);
}

}  // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParameterError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                           " fields, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParameterError(source + ": empty table");
  return t;
}

ParameterSet load_parameter_set(const fs::path& directory) {
  ParameterSet ps;
  ps.directory = directory;
  auto manifest_path = directory / "manifest.json";
  if (!fs::exists(manifest_path)) throw ParameterError("parameter manifest not found: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw ParameterError("manifest.json: " + std::string(e.what()));
  }
  ps.name = manifest.value("name", std::string("unnamed"));
  ps.version = manifest.value("version", std::string("0"));
  if (!manifest.contains("files") || !manifest["files"].is_object())
    throw ParameterError("manifest.json: missing 'files' object");

  std::map<std::string, std::string> contents;
  for (const auto& [file, digest] : manifest["files"].items()) {
    auto path = directory / file;
    if (!fs::exists(path)) throw ParameterError("parameter file missing: " + path.string());
    auto text = read_text_file(path);
    auto actual = sha256_hex(text);
    if (actual != digest.get<std::string>())
      throw ParameterError("checksum mismatch for " + file + ": manifest " + digest.get<std::string>() + ", file " +
                           actual);
    ps.checksums[file] = actual;
    contents[file] = std::move(text);
  }
  auto need = [&](const std::string& file) -> const std::string& {
    auto it = contents.find(file);
    if (it == contents.end()) throw ParameterError("manifest.json does not list required file " + file);
    return it->second;
  };

  load_penetrance(parse_csv(need("penetrance.csv"), "penetrance.csv"), ps.penetrance);
  load_mortality(parse_csv(need("mortality.csv"), "mortality.csv"), ps.penetrance);
  load_allele_frequencies(parse_csv(need("allele_freq.csv"), "allele_freq.csv"), ps.penetrance);
  ps.penetrance.finalize();

  load_coefficients(parse_csv(need("relhaz_coefficients.csv"), "relhaz_coefficients.csv"), ps.relative_hazard);
  load_baseline(parse_csv(need("bcrat_baseline.csv"), "bcrat_baseline.csv"), ps.relative_hazard);
  load_attributable_risk(parse_csv(need("attributable_risk.csv"), "attributable_risk.csv"), ps.relative_hazard,
                         ps.normalization);
  load_covariates(parse_csv(need("covariate_distribution.csv"), "covariate_distribution.csv"), ps.relative_hazard);
  if (!ps.relative_hazard.coefficients.count(Race::white) || !ps.relative_hazard.baseline.count(Race::white))
    throw ParameterError("relative-hazard parameters must include race 'white'");

  if (contents.count("stratum_rules.json"))
    ps.stratum_rules = parse_stratum_rules(json::parse(contents["stratum_rules.json"]));
  else
    ps.stratum_rules = default_stratum_rules();
  return ps;
}

}  // namespace riskfuse

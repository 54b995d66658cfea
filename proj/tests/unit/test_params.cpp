#include "doctest.h"

#include <filesystem>

#include "oracles.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/params.hpp"

using namespace riskfuse;
namespace fs = std::filesystem;

namespace {

fs::path scratch_copy(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("riskfuse_params_" + name);
  fs::remove_all(dir);
  fs::copy(default_parameter_directory(), dir, fs::copy_options::recursive);
  return dir;
}

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("shipped set loads with checksums") {
    const auto& p = oracle::params();
    CHECK(p.name == "default");
    CHECK(p.checksums.size() == 8);
    for (const auto& [file, hash] : p.checksums) CHECK(sha256_file(p.directory / file) == hash);
  }

  TEST_CASE("checksum mismatch is rejected") {
    auto dir = scratch_copy("tamper");
    auto text = read_text_file(dir / "allele_freq.csv");
    write_text_file(dir / "allele_freq.csv", text + "\n# edited\n");
    CHECK_THROWS_AS(load_parameter_set(dir), ParameterError);
    fs::remove_all(dir);
  }

  TEST_CASE("missing file is rejected") {
    auto dir = scratch_copy("missing");
    fs::remove(dir / "mortality.csv");
    CHECK_THROWS_AS(load_parameter_set(dir), ParameterError);
    fs::remove_all(dir);
  }

  TEST_CASE("penetrance violating the hazard constraint is rejected") {
    PenetranceTable t;
    std::vector<double> pen(kMaxAge, 0.008), mort(kMaxAge, 0.3);
    for (auto g : kGenotypes) {
      t.set_penetrance(CancerSite::breast, Sex::female, g, std::nullopt, pen);
      t.set_penetrance(CancerSite::ovarian, Sex::female, g, std::nullopt, std::vector<double>(kMaxAge, 0.0));
      t.set_penetrance(CancerSite::breast, Sex::male, g, std::nullopt, std::vector<double>(kMaxAge, 0.0));
    }
    t.set_mortality(Sex::female, std::nullopt, mort);
    t.set_mortality(Sex::male, std::nullopt, mort);
    t.set_allele_frequencies(true, {0.01, 0.01});
    t.set_allele_frequencies(false, {0.001, 0.001});
    // heavy mortality leaves too few survivors for the stated penetrance
    CHECK_THROWS_AS(t.finalize(), ParameterError);
  }

  TEST_CASE("csv reader") {
    auto t = parse_csv("# comment\na,b\n1,2\n3,4\n");
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.rows.size() == 2);
    CHECK(t.column("b") == 1);
    CHECK(t.column("c") == -1);
  }
}

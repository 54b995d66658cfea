#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskfuse/pedigree.hpp"

namespace riskfuse {

/// Joint BRCA1/BRCA2 carrier status. Code 3 is a carrier at both loci.
enum class Genotype : std::uint8_t { noncarrier = 0, brca1 = 1, brca2 = 2, both = 3 };

inline constexpr std::array<Genotype, 4> kGenotypes{Genotype::noncarrier, Genotype::brca1, Genotype::brca2,
                                                    Genotype::both};

constexpr int index(Genotype g) { return static_cast<int>(g); }
constexpr bool carries_brca1(Genotype g) { return (index(g) & 1) != 0; }
constexpr bool carries_brca2(Genotype g) { return (index(g) & 2) != 0; }
constexpr Genotype make_genotype(bool brca1, bool brca2) {
  return static_cast<Genotype>((brca1 ? 1 : 0) | (brca2 ? 2 : 0));
}

/// Per-locus mutant allele frequencies.
struct AlleleFrequencies {
  double brca1 = 0.0;
  double brca2 = 0.0;
};

/// Cause-specific hazards from crude per-year penetrance P(T=t, J=B):
/// hazard(t) = pen(t) / prod_{u<t} (1 - hazard(u) - mortality(u)).
/// Index 0 holds age 1. Throws ParameterError naming the age when a
/// denominator is not positive or a hazard leaves [0, 1].
std::vector<double> hazard_from_penetrance(std::span<const double> penetrance, std::span<const double> mortality);

/// Inverse of hazard_from_penetrance: pen(t) = hazard(t) prod_{u<t} (1 - hazard(u) - mortality(u)).
std::vector<double> penetrance_from_hazard(std::span<const double> hazard, std::span<const double> mortality);

/// Age-indexed Mendelian model inputs: crude penetrance per (cancer, sex,
/// genotype, race), competing mortality per (sex, race), allele frequencies
/// per ethnicity. Race lookups fall back to an "all" entry, then to white.
class PenetranceTable {
 public:
  void set_penetrance(CancerSite cancer, Sex sex, Genotype g, std::optional<Race> race, std::vector<double> curve);
  void set_mortality(Sex sex, std::optional<Race> race, std::vector<double> curve);
  void set_allele_frequencies(bool ashkenazi, AlleleFrequencies f);

  /// Checks ranges and the hazard constraint, and derives female breast
  /// hazards. Must be called once after all setters.
  void finalize();

  std::span<const double> penetrance(CancerSite cancer, Sex sex, Genotype g, Race race) const;
  std::span<const double> mortality(Sex sex, Race race) const;
  /// Female breast-cancer cause-specific hazard for genotype g.
  std::span<const double> breast_hazard(Genotype g, Race race) const;
  AlleleFrequencies allele_frequencies(bool ashkenazi) const;

 private:
  const std::vector<double>* find(const std::map<std::string, std::vector<double>>& m, const std::string& prefix,
                                  Race race) const;

  std::map<std::string, std::vector<double>> penetrance_;
  std::map<std::string, std::vector<double>> mortality_;
  std::map<std::string, std::vector<double>> breast_hazard_;
  std::optional<AlleleFrequencies> ashkenazi_;
  std::optional<AlleleFrequencies> general_;
  bool finalized_ = false;
};

struct GenotypePosterior {
  std::array<double, 4> probs{1.0, 0.0, 0.0, 0.0};
  double operator[](Genotype g) const { return probs[index(g)]; }
};

// --- Mendelian building blocks ----------------------------------------------

/// Founder genotype distribution with independent loci; a locus is carried
/// when at least one of two alleles is mutant.
std::array<double, 4> founder_prior(AlleleFrequencies f);

/// P(child | mother, father). A carrier parent transmits the mutant allele
/// with probability 1/2 at each locus; loci are independent.
double transmission(Genotype child, Genotype mother, Genotype father);

/// P(H_r | genotype) for one member under conditional independence of
/// breast and ovarian phenotypes. Prophylactic surgery censors the
/// corresponding cancer at the surgery age; a genetic test is a point mass.
std::array<double, 4> phenotype_likelihood(const Relative& member, Race race, const PenetranceTable& table);

/// Race used for a member's tables: own race, else the proband's, else white.
Race effective_race(const Relative& member, const Pedigree& p);

/// Proband genotype posterior by peeling over the nuclear families of the pedigree.
/// Missing connecting relatives are treated as unobserved.
GenotypePosterior carrier_posterior(const Pedigree& p, const PenetranceTable& table);

/// Probability of breast cancer in (a, a+tau] given survival to a under
/// cause-specific hazards (index 0 = age 1).
double future_risk(std::span<const double> hazard, std::span<const double> mortality, int a, int tau);

double genotype_future_risk(Genotype g, int a, int tau, const PenetranceTable& table, Race race);

/// Mixture of genotype-specific risks over the carrier posterior.
double brcapro_risk(const GenotypePosterior& posterior, int a, int tau, const PenetranceTable& table, Race race);
double brcapro_risk(const Pedigree& p, int a, int tau, const PenetranceTable& table);

}  // namespace riskfuse

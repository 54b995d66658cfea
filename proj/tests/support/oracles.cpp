#include "oracles.hpp"

#include <cmath>
#include <functional>

namespace oracle {

using namespace riskfuse;
using Vec4 = std::array<double, 4>;

const ParameterSet& params() {
  static const ParameterSet p = load_parameter_set(default_parameter_directory());
  return p;
}

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1)); }
bool coin(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace

Pedigree random_pedigree(Rng& rng, int max_members) {
  static constexpr Relation kPool[] = {
      Relation::mother, Relation::father, Relation::sister, Relation::brother, Relation::daughter, Relation::son,
      Relation::maternal_grandmother, Relation::maternal_grandfather, Relation::paternal_grandmother,
      Relation::paternal_grandfather, Relation::maternal_aunt, Relation::maternal_uncle, Relation::paternal_aunt,
      Relation::paternal_uncle};
  const int n = uniform_int(rng, 1, max_members);
  const bool ashkenazi = coin(rng, 0.5);
  const Race race = static_cast<Race>(uniform_int(rng, 0, 4));
  const int proband_age = uniform_int(rng, 20, 80);
  bool tested = false;

  std::vector<Relative> members;
  std::vector<Relation> used;
  auto age_for = [&](Relation r) {
    int base = proband_age;
    switch (relation_degree(r) == 0 ? 0 : static_cast<int>(r)) {
      case static_cast<int>(Relation::mother):
      case static_cast<int>(Relation::father): base += uniform_int(rng, 18, 40); break;
      case static_cast<int>(Relation::daughter):
      case static_cast<int>(Relation::son): base -= uniform_int(rng, 18, 35); break;
      case static_cast<int>(Relation::sister):
      case static_cast<int>(Relation::brother): base += uniform_int(rng, -10, 10); break;
      case static_cast<int>(Relation::maternal_grandmother):
      case static_cast<int>(Relation::maternal_grandfather):
      case static_cast<int>(Relation::paternal_grandmother):
      case static_cast<int>(Relation::paternal_grandfather): base += uniform_int(rng, 40, 70); break;
      default: base += uniform_int(rng, 15, 40); break;
    }
    return std::clamp(base, 1, kMaxAge);
  };

  for (int k = 0; k < n; ++k) {
    Relation rel = Relation::proband;
    if (k > 0) {
      do {
        rel = kPool[uniform_int(rng, 0, static_cast<int>(std::size(kPool)) - 1)];
      } while (relation_degree(rel) > 0 && std::find(used.begin(), used.end(), rel) != used.end() &&
               (rel == Relation::mother || rel == Relation::father || rel == Relation::maternal_grandmother ||
                rel == Relation::maternal_grandfather || rel == Relation::paternal_grandmother ||
                rel == Relation::paternal_grandfather));
    }
    used.push_back(rel);
    Relative m;
    m.id = k + 1;
    m.relation = rel;
    m.sex = relation_sex(rel);
    m.current_age_or_death_age = rel == Relation::proband ? proband_age : age_for(rel);
    m.alive = rel == Relation::proband || coin(rng, 0.6);
    m.ashkenazi = ashkenazi;
    m.race = coin(rng, 0.8) ? race : Race::unknown;
    const int age = m.current_age_or_death_age;
    auto onset = [&] { return uniform_int(rng, std::min(age, 20), age); };
    if (m.sex == Sex::female) {
      if (coin(rng, 0.25)) m.breast_cancer = onset();
      if (coin(rng, 0.1)) m.ovarian_cancer = onset();
      if (coin(rng, 0.05)) m.prophylactic_mastectomy_age = std::max(m.breast_cancer.value_or(1), onset());
      if (!m.ovarian_cancer && coin(rng, 0.05)) m.prophylactic_oophorectomy_age = onset();
    } else if (coin(rng, 0.05)) {
      m.breast_cancer = onset();
    }
    if (!tested && coin(rng, 0.08)) {
      tested = true;
      m.genetic_test = static_cast<GeneticTest>(uniform_int(rng, 0, 3));
    }
    members.push_back(m);
  }
  return Pedigree(std::move(members));
}

namespace {

Vec4 prior_from(AlleleFrequencies f) {
  const double q1 = 1.0 - (1.0 - f.brca1) * (1.0 - f.brca1);
  const double q2 = 1.0 - (1.0 - f.brca2) * (1.0 - f.brca2);
  return {(1 - q1) * (1 - q2), q1 * (1 - q2), (1 - q1) * q2, q1 * q2};
}

// P(child carries locus) = 1 - prod over parents of (1 - 1/2 [parent carries])
double locus_transmission(bool child, bool mother, bool father) {
  const double carry = 1.0 - (mother ? 0.5 : 1.0) * (father ? 0.5 : 1.0);
  return child ? carry : 1.0 - carry;
}

double transmit(int child, int mother, int father) {
  return locus_transmission(child & 1, mother & 1, father & 1) * locus_transmission(child & 2, mother & 2, father & 2);
}

struct Node {
  Vec4 lik;
  int mother = -1;
  int father = -1;
};

}  // namespace

GenotypePosterior brute_force_posterior(const Pedigree& p, const PenetranceTable& table) {
  const Vec4 flat{1, 1, 1, 1};
  auto lik = [&](const Relative& m) { return phenotype_likelihood(m, effective_race(m, p), table); };
  auto has = [&](Relation r) { return !p.with_relation(r).empty(); };
  auto single = [&](Relation r) { return has(r) ? lik(*p.with_relation(r).front()) : flat; };

  std::vector<Node> nodes;
  auto add = [&](Vec4 l, int mo, int fa) {
    nodes.push_back({l, mo, fa});
    return static_cast<int>(nodes.size()) - 1;
  };

  bool upper = false;
  for (const auto& m : p.members())
    if (m.relation != Relation::proband && m.relation != Relation::daughter && m.relation != Relation::son) upper = true;

  int mother = -1, father = -1;
  if (upper) {
    auto side = [&](Relation parent, Relation gm, Relation gf, Relation aunt, Relation uncle) {
      int pm = -1, pf = -1;
      if (has(gm) || has(gf) || has(aunt) || has(uncle)) {
        pm = add(single(gm), -1, -1);
        pf = add(single(gf), -1, -1);
        for (const auto& m : p.members())
          if (m.relation == aunt || m.relation == uncle) add(lik(m), pm, pf);
      }
      return add(single(parent), pm, pf);
    };
    mother = side(Relation::mother, Relation::maternal_grandmother, Relation::maternal_grandfather,
                  Relation::maternal_aunt, Relation::maternal_uncle);
    father = side(Relation::father, Relation::paternal_grandmother, Relation::paternal_grandfather,
                  Relation::paternal_aunt, Relation::paternal_uncle);
    for (const auto& m : p.members())
      if (m.relation == Relation::sister || m.relation == Relation::brother) add(lik(m), mother, father);
  }
  const int proband = add(lik(p.proband()), mother, father);
  if (has(Relation::daughter) || has(Relation::son)) {
    const int spouse = add(flat, -1, -1);
    for (const auto& m : p.members())
      if (m.relation == Relation::daughter || m.relation == Relation::son) add(lik(m), proband, spouse);
  }

  const Vec4 prior = prior_from(table.allele_frequencies(p.proband().ashkenazi));
  std::vector<int> g(nodes.size());
  Vec4 joint{};
  std::function<void(std::size_t, double)> visit = [&](std::size_t k, double prod) {
    if (k == nodes.size()) {
      joint[static_cast<std::size_t>(g[static_cast<std::size_t>(proband)])] += prod;
      return;
    }
    const auto& n = nodes[k];
    for (int v = 0; v < 4; ++v) {
      const double f = n.mother < 0 ? prior[static_cast<std::size_t>(v)]
                                    : transmit(v, g[static_cast<std::size_t>(n.mother)], g[static_cast<std::size_t>(n.father)]);
      const double term = prod * f * n.lik[static_cast<std::size_t>(v)];
      if (term == 0.0) continue;
      g[k] = v;
      visit(k + 1, term);
    }
  };
  visit(0, 1.0);
  const double total = joint[0] + joint[1] + joint[2] + joint[3];
  GenotypePosterior out;
  for (std::size_t i = 0; i < 4; ++i) out.probs[i] = joint[i] / total;
  return out;
}

McEstimate mc_cumulative_incidence(std::span<const double> breast, std::span<const double> death, int a, int tau,
                                   long n, std::uint64_t seed) {
  Rng rng = substream(seed, 0, 0x6d63);
  long cases = 0;
  for (long i = 0; i < n; ++i) {
    for (int t = a + 1; t <= a + tau; ++t) {
      const auto k = static_cast<std::size_t>(t - 1);
      const double u = uniform01(rng);
      if (u < breast[k]) {
        ++cases;
        break;
      }
      if (u < breast[k] + death[k]) break;
    }
  }
  const double p = static_cast<double>(cases) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    Eigen::VectorXd v = mu.cwiseProduct(Eigen::VectorXd::Ones(mu.size()) - mu);
    Eigen::VectorXd z = eta + (y - mu).cwiseQuotient(v);
    Eigen::VectorXd ww = w.cwiseProduct(v);
    Eigen::MatrixXd xtwx = x.transpose() * ww.asDiagonal() * x;
    Eigen::VectorXd next = xtwx.ldlt().solve(x.transpose() * ww.cwiseProduct(z));
    const double step = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (step < 1e-13) break;
  }
  return beta;
}

double printed_relative_hazard(double age, const RiskFactors& x, const std::array<double, 19>& b) {
  auto I = [](bool c) { return c ? 1.0 : 0.0; };
  const bool known_menarche = x.age_at_menarche.has_value();
  const int x1 = x.age_at_menarche.value_or(99);
  const int x2 = x.num_biopsies == BiopsyCount::one ? 1 : x.num_biopsies == BiopsyCount::two_or_more ? 2 : 0;
  const int x3 = x.age_first_live_birth.value_or(25);
  const int x4 = x.affected_first_degree;
  const bool old = age >= 50;
  double lp = b[0] * I(known_menarche && x1 >= 12 && x1 <= 13) + b[1] * I(known_menarche && x1 < 12) +
              b[2] * I(x2 == 1) + b[3] * I(x2 >= 2) + b[4] * I(old) * I(x2 == 1) + b[5] * I(old) * I(x2 >= 1) +
              b[6] * I(x3 >= 20 && x3 <= 24) + b[7] * I(x3 >= 25 && x3 <= 29) + b[8] * I(x3 > 29) +
              b[9] * I(x4 == 1) + b[10] * I(x4 >= 2) +
              b[11] * I(x3 >= 20 && x3 <= 24) * I(x4 == 1) + b[12] * I(x3 >= 25 && x3 <= 29) * I(x4 == 1) +
              b[13] * I(x3 > 29) * I(x4 == 1) + b[14] * I(x3 >= 20 && x3 <= 24) * I(x4 >= 2) +
              b[15] * I(x3 >= 25 && x3 <= 29) * I(x4 >= 2) + b[16] * I(x3 > 29) * I(x4 >= 2) +
              b[17] * I(x2 > 0) * I(x.atypical_hyperplasia == Hyperplasia::no) +
              b[18] * I(x2 > 0) * I(x.atypical_hyperplasia == Hyperplasia::yes);
  return std::exp(lp);
}

}  // namespace oracle

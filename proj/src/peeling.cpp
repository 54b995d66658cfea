// Elston-Stewart peeling over the fixed nuclear-family layout of a
// first/second-degree pedigree:
//
//   maternal grandparents -> {mother, maternal aunts/uncles}
//   paternal grandparents -> {father, paternal aunts/uncles}
//   mother x father       -> {proband, sisters, brothers}
//   proband x spouse      -> {daughters, sons}
//
// A family is instantiated only when one of its members is observed;
// connecting individuals that are not in the pedigree carry a flat likelihood.

#include <numeric>

#include "riskfuse/errors.hpp"
#include "riskfuse/mendelian.hpp"

namespace riskfuse {

namespace {

using Vec4 = std::array<double, 4>;
using Mat44 = std::array<Vec4, 4>;

constexpr Vec4 kFlat{1.0, 1.0, 1.0, 1.0};

struct Members {
  const Pedigree& pedigree;
  const PenetranceTable& table;

  bool has(Relation r) const {
    for (const auto& m : pedigree.members())
      if (m.relation == r) return true;
    return false;
  }

  Vec4 likelihood(const Relative& m) const {
    return phenotype_likelihood(m, effective_race(m, pedigree), table);
  }

  // Likelihood of a singleton relation, flat when unobserved.
  Vec4 single(Relation r) const {
    for (const auto& m : pedigree.members())
      if (m.relation == r) return likelihood(m);
    return kFlat;
  }

  std::vector<Vec4> all(std::initializer_list<Relation> relations) const {
    std::vector<Vec4> out;
    for (const auto& m : pedigree.members())
      for (auto r : relations)
        if (m.relation == r) out.push_back(likelihood(m));
    return out;
  }
};

// S[m][f] = prod over children of sum_g T(g | m, f) L_child(g)
Mat44 sibship(const std::vector<Vec4>& children) {
  Mat44 s;
  for (auto gm : kGenotypes) {
    for (auto gf : kGenotypes) {
      double prod = 1.0;
      for (const auto& lik : children) {
        double sum = 0.0;
        for (auto g : kGenotypes) sum += transmission(g, gm, gf) * lik[index(g)];
        prod *= sum;
      }
      s[index(gm)][index(gf)] = prod;
    }
  }
  return s;
}

// Likelihood of everything above-and-beside `child` as a function of its
// genotype: sum over the parents' genotypes of their anterior terms, the
// child's transmission probability and the other offspring of the couple.
Vec4 anterior(const Vec4& mother_term, const Vec4& father_term, const std::vector<Vec4>& other_children) {
  Mat44 sibs = sibship(other_children);
  Vec4 out{};
  for (auto g : kGenotypes) {
    double sum = 0.0;
    for (auto gm : kGenotypes) {
      if (mother_term[index(gm)] == 0.0) continue;
      for (auto gf : kGenotypes) {
        sum += mother_term[index(gm)] * father_term[index(gf)] * transmission(g, gm, gf) *
               sibs[index(gm)][index(gf)];
      }
    }
    out[index(g)] = sum;
  }
  return out;
}

Vec4 times(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0], a[1] * b[1], a[2] * b[2], a[3] * b[3]};
}

// Anterior term of one of the proband's parents, multiplied by the parent's
// own likelihood. Grandparents are founders.
Vec4 parent_term(const Members& m, const Vec4& prior, Relation parent, Relation grandmother, Relation grandfather,
                 Relation aunt, Relation uncle) {
  Vec4 own = m.single(parent);
  bool family_observed = m.has(grandmother) || m.has(grandfather) || m.has(aunt) || m.has(uncle);
  if (!family_observed) return times(own, prior);
  Vec4 gm = times(prior, m.single(grandmother));
  Vec4 gf = times(prior, m.single(grandfather));
  return times(own, anterior(gm, gf, m.all({aunt, uncle})));
}

}  // namespace

GenotypePosterior carrier_posterior(const Pedigree& p, const PenetranceTable& table) {
  Members m{p, table};
  const Vec4 prior = founder_prior(table.allele_frequencies(p.proband().ashkenazi));

  bool parents_observed = false;
  for (const auto& r : p.members())
    if (r.relation != Relation::proband && r.relation != Relation::daughter && r.relation != Relation::son)
      parents_observed = true;

  Vec4 upper = prior;
  if (parents_observed) {
    Vec4 mother = parent_term(m, prior, Relation::mother, Relation::maternal_grandmother,
                              Relation::maternal_grandfather, Relation::maternal_aunt, Relation::maternal_uncle);
    Vec4 father = parent_term(m, prior, Relation::father, Relation::paternal_grandmother,
                              Relation::paternal_grandfather, Relation::paternal_aunt, Relation::paternal_uncle);
    upper = anterior(mother, father, m.all({Relation::sister, Relation::brother}));
  }

  Vec4 lower = kFlat;
  auto children = m.all({Relation::daughter, Relation::son});
  if (!children.empty()) {
    // posterior term: sum over the unobserved co-parent (a founder)
    Mat44 kids = sibship(children);
    for (auto g : kGenotypes) {
      double sum = 0.0;
      for (auto gs : kGenotypes) sum += prior[index(gs)] * kids[index(g)][index(gs)];
      lower[index(g)] = sum;
    }
  }

  Vec4 joint = times(times(upper, m.likelihood(p.proband())), lower);
  double total = std::accumulate(joint.begin(), joint.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("pedigree has zero likelihood under the genotype model");
  GenotypePosterior post;
  for (int i = 0; i < 4; ++i) post.probs[i] = joint[i] / total;
  return post;
}

}  // namespace riskfuse

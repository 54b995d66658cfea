#include "doctest.h"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "oracles.hpp"
#include "riskfuse/errors.hpp"
#include "riskfuse/relative_hazard.hpp"

using namespace riskfuse;

namespace {

const RelativeHazardModel& model() { return oracle::params().relative_hazard; }

std::vector<RiskFactors> covariate_grid() {
  std::vector<RiskFactors> out;
  for (std::optional<int> men : {std::optional<int>{}, std::optional<int>{15}, std::optional<int>{12},
                                 std::optional<int>{11}})
    for (auto bio : {BiopsyCount::zero, BiopsyCount::one, BiopsyCount::two_or_more, BiopsyCount::unknown})
      for (std::optional<int> birth : {std::optional<int>{}, std::optional<int>{18}, std::optional<int>{22},
                                       std::optional<int>{27}, std::optional<int>{33}})
        for (int x4 : {0, 1, 2, 4})
          for (auto hyp : {Hyperplasia::no, Hyperplasia::yes, Hyperplasia::unknown}) {
            RiskFactors x;
            x.age_at_menarche = men;
            x.num_biopsies = bio;
            x.age_first_live_birth = birth;
            x.affected_first_degree = x4;
            x.atypical_hyperplasia = hyp;
            out.push_back(x);
          }
  return out;
}

// Continuous-time risk by adaptive quadrature of the cause-specific density;
// the cumulative hazard is itself integrated numerically.
double quadrature_risk(double a, double tau, const RiskFactors& x, const BaselineHazard& base,
                       const RelHazCoefficients& beta) {
  using boost::math::quadrature::gauss_kronrod;
  auto breast = [&](double t) {
    const int cell = std::clamp(static_cast<int>(std::upper_bound(kBaselineCuts.begin(), kBaselineCuts.end(), t) -
                                                 kBaselineCuts.begin()) - 1, 0, kBaselineIntervals - 1);
    return base.breast[cell] * base.one_minus_ar[t >= 50 ? 1 : 0] * oracle::printed_relative_hazard(t, x, beta.beta);
  };
  auto competing = [&](double t) {
    const int cell = std::clamp(static_cast<int>(std::upper_bound(kBaselineCuts.begin(), kBaselineCuts.end(), t) -
                                                 kBaselineCuts.begin()) - 1, 0, kBaselineIntervals - 1);
    return base.competing[cell];
  };
  auto cumulative = [&](double t) {
    double s = 0.0;
    for (double lo = a; lo < t; lo = std::min(t, std::floor(lo) + 1.0)) {
      const double hi = std::min(t, std::floor(lo) + 1.0);
      s += gauss_kronrod<double, 15>::integrate([&](double u) { return breast(u) + competing(u); }, lo, hi, 0);
    }
    return s;
  };
  double risk = 0.0;
  for (double lo = a; lo < a + tau; lo += 1.0) {
    risk += gauss_kronrod<double, 15>::integrate([&](double t) { return breast(t) * std::exp(-cumulative(t)); },
                                                 lo, std::min(lo + 1.0, a + tau), 0);
  }
  return risk;
}

}  // namespace

TEST_SUITE("relative_hazard") {
  TEST_CASE("relative hazard equals the indicator formula on every category") {
    for (Race race : {Race::white, Race::black, Race::hispanic, Race::asian}) {
      const auto& beta = model().coefficients_for(race);
      for (const auto& x : covariate_grid())
        for (double age : {20.0, 49.0, 50.0, 75.0})
          CHECK(relative_hazard(age, x, beta) ==
                doctest::Approx(oracle::printed_relative_hazard(age, x, beta.beta)).epsilon(1e-14));
    }
  }

  TEST_CASE("single indicators") {
    RelHazCoefficients beta;
    for (int k = 0; k < 19; ++k) beta.beta[k] = 0.01 * (k + 1);
    RiskFactors x;
    x.num_biopsies = BiopsyCount::zero;
    x.age_at_menarche = 15;
    x.age_first_live_birth = 18;
    CHECK(relative_hazard(40, x, beta) == 1.0);
    x.affected_first_degree = 3;
    CHECK(relative_hazard(40, x, beta) == doctest::Approx(std::exp(beta(11))).epsilon(1e-15));
    x.affected_first_degree = 0;
    x.age_at_menarche = 11;
    CHECK(relative_hazard(40, x, beta) == doctest::Approx(std::exp(beta(2))).epsilon(1e-15));
    x.age_at_menarche.reset();
    CHECK(relative_hazard(40, x, beta) == 1.0);
  }

  TEST_CASE("attributable fraction normalises the expected relative hazard") {
    for (Race race : {Race::white, Race::black}) {
      for (auto band : {AgeBand::under_50, AgeBand::fifty_plus}) {
        const auto& d = model().covariates_for(race, band);
        const auto& beta = model().coefficients_for(race);
        const double ar = attributable_fraction(d, beta, band);
        CHECK(ar < 1.0);
        // shipped distributions reproduce the shipped normalisation factors
        CHECK(1.0 - ar == doctest::Approx(oracle::params().normalization.factor(race, band)).epsilon(1e-12));
        CHECK(expected_relative_hazard(d, beta, band) * (1.0 - ar) == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("covariate distribution validation") {
    CovariateDistribution d;
    d.first_birth_relatives[0][0] = 1.0;
    CHECK_NOTHROW(d.validate());
    d.menarche = {0.5, 0.4, 0.0};
    CHECK_THROWS_AS(d.validate(), ParameterError);
  }

  TEST_CASE("baseline grid cells") {
    CHECK(baseline_cell(20.0) == 0);
    CHECK(baseline_cell(24.999) == 0);
    CHECK(baseline_cell(50.0) == 6);
    CHECK(baseline_cell(79.5) == 11);
    CHECK(baseline_cell(85.0) == 12);
    CHECK(baseline_cell(89.9) == 12);
    CHECK(baseline_cell(10.0) == 0);
  }

  TEST_CASE("closed-form absolute risk matches quadrature") {
    const auto& base = model().baseline_for(Race::white);
    const auto& beta = model().coefficients_for(Race::white);
    auto grid = covariate_grid();
    for (std::size_t k = 0; k < grid.size(); k += 97)
      for (auto [a, tau] : {std::pair{20.0, 10.0}, std::pair{45.0, 10.0}, std::pair{62.0, 5.0}, std::pair{78.0, 12.0}}) {
        const double closed = bcrat_absolute_risk(a, tau, grid[k], base, beta);
        CHECK(closed == doctest::Approx(quadrature_risk(a, tau, grid[k], base, beta)).epsilon(1e-9));
      }
  }

  TEST_CASE("risk is monotone in the horizon and bounded by one minus survival") {
    const auto& base = model().baseline_for(Race::white);
    const auto& beta = model().coefficients_for(Race::white);
    RiskFactors x;
    double prev = 0.0;
    for (int tau = 0; tau <= 50; ++tau) {
      const double r = bcrat_absolute_risk(40, tau, x, base, beta);
      CHECK(r >= prev);
      CHECK(r <= 1.0 - bcrat_survival(40, tau, x, base, beta) + 1e-15);
      prev = r;
    }
  }

  TEST_CASE("domain limits") {
    const auto& base = model().baseline_for(Race::white);
    const auto& beta = model().coefficients_for(Race::white);
    RiskFactors x;
    CHECK_THROWS_AS(bcrat_absolute_risk(19, 5, x, base, beta), DomainError);
    CHECK_THROWS_AS(bcrat_absolute_risk(86, 5, x, base, beta), DomainError);
    CHECK_NOTHROW(bcrat_absolute_risk(85, 5, x, base, beta));
  }
}

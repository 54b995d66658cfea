#include "doctest.h"

#include <cmath>
#include <numeric>

#include "riskfuse/importance.hpp"
#include "riskfuse/rng.hpp"

using namespace riskfuse;

namespace {

double normal(Rng& rng) {
  // Box-Muller
  const double u = 1.0 - uniform01(rng), v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("importance") {
  TEST_CASE("shifted Gaussian: weights track the true density ratio") {
    Rng rng = substream(41, 0);
    Eigen::MatrixXd train(1500, 2), target(1500, 2);
    for (int i = 0; i < 1500; ++i) {
      train.row(i) << normal(rng), normal(rng);
      target.row(i) << normal(rng) + 0.7, normal(rng);
    }
    auto fit = importance_weights(train, target);
    REQUIRE(fit.weights.size() == 1500);
    CHECK(mean(fit.weights) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> truth(1500);
    for (int i = 0; i < 1500; ++i) truth[i] = std::exp(0.7 * train(i, 0) - 0.245);
    CHECK(correlation(fit.weights, truth) > 0.6);
    // reweighted training mean moves to the target mean
    double shifted = 0.0;
    for (int i = 0; i < 1500; ++i) shifted += fit.weights[static_cast<std::size_t>(i)] * train(i, 0) / 1500;
    CHECK(shifted == doctest::Approx(0.7).epsilon(0.25));
    for (double w : fit.weights) CHECK(w >= 0.0);
    CHECK(fit.centers == 100);
  }

  TEST_CASE("no shift gives nearly uniform weights") {
    Rng rng = substream(42, 0);
    Eigen::MatrixXd train(1000, 1), target(1000, 1);
    for (int i = 0; i < 1000; ++i) {
      train(i, 0) = normal(rng);
      target(i, 0) = normal(rng);
    }
    auto fit = importance_weights(train, target);
    double sd = 0.0;
    for (double w : fit.weights) sd += (w - 1.0) * (w - 1.0);
    CHECK(std::sqrt(sd / 1000) < 0.3);
  }

  TEST_CASE("constant features carry no information") {
    Eigen::MatrixXd train = Eigen::MatrixXd::Constant(50, 2, 3.0), target = Eigen::MatrixXd::Constant(40, 2, 3.0);
    auto fit = importance_weights(train, target);
    for (double w : fit.weights) CHECK(w == doctest::Approx(1.0));
  }

  TEST_CASE("deterministic for a fixed seed") {
    Rng rng = substream(43, 0);
    Eigen::MatrixXd train(300, 1), target(300, 1);
    for (int i = 0; i < 300; ++i) {
      train(i, 0) = normal(rng);
      target(i, 0) = normal(rng) + 1.0;
    }
    CHECK(importance_weights(train, target).weights == importance_weights(train, target).weights);
  }
}

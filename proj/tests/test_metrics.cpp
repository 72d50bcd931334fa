#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "calib/metrics.hpp"
#include "calib/pav.hpp"
#include "calib/rng.hpp"
#include "test_util.hpp"

using namespace calib;

namespace {

std::vector<std::vector<double>> to_binary_rows(const std::vector<double>& scores) {
  std::vector<std::vector<double>> rows;
  for (double s : scores) rows.push_back({1.0 - s, s});
  return rows;
}

}  // namespace

TEST_CASE("discrete ece on tiny groups") {
  // two samples at forecast 0.2 with labels {0,1}
  const auto rows = to_binary_rows({0.2, 0.2});
  const std::vector<int> labels{0, 1};
  const std::vector<double> w{1.0, 1.0};
  CHECK(ece_discrete(rows, labels, w, 2) == doctest::Approx(0.3).epsilon(1e-12));

  // one-hot forecasts equal to labels
  std::vector<std::vector<double>> onehot{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<int> l3{0, 1, 2};
  const std::vector<double> w3{1, 1, 1};
  CHECK(ece_discrete(onehot, l3, w3, 3) == 0.0);
}

TEST_CASE("calibrator outputs achieve zero ece on their fit set") {
  const auto prob = testutil::random_binary(150, 3, true);
  const auto fitted = pav_fitted_values(prob.scores, prob.targets, prob.weights);
  std::vector<int> labels(prob.targets.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = prob.targets[i] > 0.5 ? 1 : 0;
  }
  const double e = ece_discrete(to_binary_rows(fitted), labels, prob.weights, 2);
  CHECK(e <= 1e-12);
}

TEST_CASE("binned ece") {
  {
    // forecasts identically the base rate
    std::vector<std::vector<double>> rows(8, std::vector<double>{0.5, 0.5});
    const std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1};
    const std::vector<double> w(8, 1.0);
    CHECK(ece_binned(rows, labels, w, 10) <= 1e-12);
  }
  {
    // m = 1 collapses to |base rate - mean forecast|
    const auto rows = to_binary_rows({0.1, 0.4, 0.6, 0.9});
    const std::vector<int> labels{0, 1, 1, 1};
    const std::vector<double> w(4, 1.0);
    const double expect = std::abs(0.75 - 0.5);
    CHECK(ece_binned(rows, labels, w, 1) == doctest::Approx(expect).epsilon(1e-12));
  }
  {
    // estimator sensitivity on skewed forecasts: different m, different value
    Rng rng(5);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<double> w;
    for (int i = 0; i < 400; ++i) {
      const double s = std::pow(rng.uniform(), 4.0);
      rows.push_back({1.0 - s, s});
      labels.push_back(rng.uniform() < 0.3 + 0.4 * s ? 1 : 0);
      w.push_back(1.0);
    }
    const double e10 = ece_binned(rows, labels, w, 10);
    const double e100 = ece_binned(rows, labels, w, 100);
    CHECK(e10 != e100);
  }
  CHECK_THROWS_AS(ece_binned(to_binary_rows({0.5}), std::vector<int>{0},
                             std::vector<double>{1.0}, 0),
                  ContractError);
}

TEST_CASE("cross entropy closed forms") {
  {
    std::vector<std::vector<double>> rows{{0, 1, 0}, {1, 0, 0}};
    const std::vector<int> labels{1, 0};
    const std::vector<double> w{1, 1};
    const auto ce = cross_entropy(rows, labels, w, 0.0);
    CHECK(ce.h == 0.0);
    CHECK(ce.h_finite);
  }
  {
    const int k = 5;
    std::vector<std::vector<double>> rows(7, std::vector<double>(k, 1.0 / k));
    const std::vector<int> labels{0, 1, 2, 3, 4, 0, 1};
    const std::vector<double> w(7, 1.0);
    const auto ce = cross_entropy(rows, labels, w, 0.0);
    CHECK(ce.h == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  {
    std::vector<std::vector<double>> rows{{1, 0}};
    const std::vector<int> labels{1};
    const std::vector<double> w{1};
    const auto ce = cross_entropy(rows, labels, w, 0.0);
    CHECK_FALSE(ce.h_finite);
    CHECK(std::isinf(ce.h));
  }
}

TEST_CASE("regularized cross entropy dominates the plain one") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<double> w;
    for (int i = 0; i < 50; ++i) {
      const double s = 0.05 + 0.9 * rng.uniform();
      rows.push_back({1.0 - s, s});
      labels.push_back(rng.uniform() < s ? 1 : 0);
      w.push_back(1.0);
    }
    const double lambda = rng.uniform() * 0.2;
    const auto ce = cross_entropy(rows, labels, w, lambda);
    CHECK(ce.h_reg >= ce.h - 1e-12);
  }
}

TEST_CASE("decomposition identities") {
  {
    // calibrated groups: kl term vanishes
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 4; ++i) {
      rows.push_back({0.25, 0.75});
      labels.push_back(i == 0 ? 0 : 1);
    }
    const std::vector<double> w(4, 1.0);
    const auto d = decomposition_check(rows, labels, w, 2);
    CHECK(d.finite);
    CHECK(d.kl_term <= 1e-12);
    CHECK(std::abs(d.h - d.refinement) <= 1e-12);
  }
  {
    // single group, uniform forecast, pure labels
    std::vector<std::vector<double>> rows{{0.5, 0.5}, {0.5, 0.5}};
    const std::vector<int> labels{0, 0};
    const std::vector<double> w{1, 1};
    const auto d = decomposition_check(rows, labels, w, 2);
    CHECK(d.h == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(d.refinement == 0.0);
    CHECK(d.kl_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(d.residual <= 1e-10);
  }
  {
    // zero empirical mass where the forecast is positive: flagged infinite
    std::vector<std::vector<double>> rows{{0.5, 0.5}};
    // label class 1 only; forecast gives zero class... construct q with a zero
    std::vector<std::vector<double>> rows2{{1.0, 0.0}, {1.0, 0.0}};
    const std::vector<int> labels2{0, 1};
    const std::vector<double> w2{1, 1};
    const auto d = decomposition_check(rows2, labels2, w2, 2);
    CHECK_FALSE(d.finite);
  }
  // random interior cases: residual is numerically zero
  Rng rng(13);
  for (int t = 0; t < 40; ++t) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const int groups = 2 + static_cast<int>(rng.below(6));
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<double> w;
    for (int g = 0; g < groups; ++g) {
      std::vector<double> q(k);
      double sum = 0.0;
      for (int c = 0; c < k; ++c) {
        q[c] = 0.05 + rng.uniform();
        sum += q[c];
      }
      for (double& v : q) v /= sum;
      const int sz = 1 + static_cast<int>(rng.below(20));
      for (int i = 0; i < sz; ++i) {
        rows.push_back(q);
        labels.push_back(static_cast<int>(rng.below(k)));
        w.push_back(0.5 + rng.uniform());
      }
    }
    const auto d = decomposition_check(rows, labels, w,
                                       static_cast<int>(rows[0].size()));
    REQUIRE(d.finite);
    CHECK(d.residual <= 1e-10);
  }
}

TEST_CASE("metrics report serializes infinities as flagged nulls") {
  MetricsReport r;
  r.ece = 0.25;
  r.cross_entropy = std::numeric_limits<double>::infinity();
  r.ce_finite = false;
  r.regularized_cross_entropy = 1.5;
  r.ce_reg_finite = true;
  r.auc_or_vus = 0.75;
  r.n_bins_or_leaves = 3;
  r.k = 2;
  const std::string j = r.to_json();
  CHECK(j.find("\"cross_entropy\":null") != std::string::npos);
  CHECK(j.find("\"cross_entropy_finite\":false") != std::string::npos);
  CHECK(j.find("\"auc_or_vus\":0.75") != std::string::npos);
}

TEST_CASE("binned ece collapses to discrete ece when bins align with the support") {
  // distinct forecasts centered in separate bins of a 10-bin grid
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<double> w;
  Rng rng(21);
  for (double s : {0.15, 0.45, 0.85}) {
    for (int i = 0; i < 30; ++i) {
      rows.push_back({1.0 - s, s});
      labels.push_back(rng.uniform() < s ? 1 : 0);
      w.push_back(1.0);
    }
  }
  const double binned = ece_binned(rows, labels, w, 10);
  const double discrete = ece_discrete(rows, labels, w, 2);
  CHECK(binned == doctest::Approx(discrete).epsilon(1e-12));
}

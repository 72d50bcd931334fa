#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calib/dataset_io.hpp"
#include "calib/pav.hpp"
#include "calib/roc.hpp"
#include "calib/rng.hpp"
#include "calib/simplex.hpp"
#include "test_util.hpp"

using namespace calib;

namespace {

// fraction of correctly ordered (class0, class1) pairs, ties counting half
double pairwise_auc(std::span<const double> scores, std::span<const int> labels,
                    std::span<const double> weights) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 1) continue;
      const double w = weights[i] * weights[j];
      den += w;
      if (scores[i] < scores[j]) num += w;
      else if (scores[i] == scores[j]) num += 0.5 * w;
    }
  }
  return num / den;
}

bool same_point(const std::vector<double>& a, const std::vector<double>& b,
                double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

// set equality up to tolerance, by lexicographic sort
bool same_point_set(std::vector<std::vector<double>> a,
                    std::vector<std::vector<double>> b, double tol) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_point(a[i], b[i], tol)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("sroc curve endpoints and separation") {
  // perfectly separated
  const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> w{1, 1, 1, 1};
  const RocGraph g = sroc_curve(s, y, w);
  bool has11 = false, has01 = false, has10 = false;
  for (const auto& p : g.points) {
    if (same_point(p, {1.0, 1.0}, 0.0)) has11 = true;
    if (same_point(p, {0.0, 1.0}, 0.0)) has01 = true;
    if (same_point(p, {1.0, 0.0}, 0.0)) has10 = true;
  }
  CHECK(has11);
  CHECK(has01);
  CHECK(has10);

  // constant scores: only the two corners
  const std::vector<double> sc{0.5, 0.5, 0.5};
  const std::vector<int> yc{0, 1, 0};
  const RocGraph gc = sroc_curve(sc, yc, std::vector<double>{1, 1, 1});
  REQUIRE(gc.size() == 2);
  CHECK(same_point(gc.points[0], {0.0, 1.0}, 0.0));
  CHECK(same_point(gc.points[1], {1.0, 0.0}, 0.0));

  CHECK_THROWS_AS(sroc_curve(sc, std::vector<int>{0, 0, 0},
                             std::vector<double>{1, 1, 1}),
                  ContractError);
}

TEST_CASE("sroc points match direct conditional counting") {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const std::vector<int> y{0, 1, 0, 1};
  const std::vector<double> w{1, 1, 1, 1};
  const RocGraph g = sroc_curve(s, y, w);
  REQUIRE(g.size() == 5);
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double gamma = g.thresholds[t].coords[1];
    double c0 = 0, n0 = 0, c1 = 0, n1 = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (y[i] == 0) {
        n0 += 1;
        if (s[i] <= gamma) c0 += 1;
      } else {
        n1 += 1;
        if (s[i] > gamma) c1 += 1;
      }
    }
    CHECK(g.points[t][0] == doctest::Approx(c0 / n0).epsilon(1e-15));
    CHECK(g.points[t][1] == doctest::Approx(c1 / n1).epsilon(1e-15));
  }
}

TEST_CASE("csd and gcm on the hand example") {
  const std::vector<double> y{1.0, 0.0, 1.0};
  const CsdGraph c = csd(y);
  REQUIRE(c.points.size() == 4);
  CHECK(c.points[0] == std::array<double, 2>{0.0, 0.0});
  CHECK(c.points[1] == std::array<double, 2>{1.0, 1.0});
  CHECK(c.points[2] == std::array<double, 2>{2.0, 1.0});
  CHECK(c.points[3] == std::array<double, 2>{3.0, 2.0});
  const CsdGraph hull = gcm(c);
  REQUIRE(hull.points.size() == 3);
  CHECK(hull.points[0] == std::array<double, 2>{0.0, 0.0});
  CHECK(hull.points[1] == std::array<double, 2>{2.0, 1.0});
  CHECK(hull.points[2] == std::array<double, 2>{3.0, 2.0});

  const auto slopes = gcm_left_derivatives(c, hull);
  CHECK(slopes[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(slopes[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(slopes[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("strictly convex diagrams are their own minorant") {
  const std::vector<double> y{0.0, 0.5, 1.0};
  const CsdGraph c = csd(y);
  const CsdGraph hull = gcm(c);
  CHECK(hull.points == c.points);
}

TEST_CASE("gcm slopes equal pav values on random data") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto prob = testutil::random_binary(50, seed, true);
    std::vector<std::size_t> order(prob.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return prob.scores[a] < prob.scores[b];
    });
    std::vector<double> targets, weights, scores;
    for (std::size_t i : order) {
      targets.push_back(prob.targets[i]);
      weights.push_back(prob.weights[i]);
      scores.push_back(prob.scores[i]);
    }
    const auto slopes = gcm_left_derivatives(csd(targets, weights),
                                             gcm(csd(targets, weights)));
    const auto fitted = pav_fitted_values(scores, targets, weights);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(std::abs(slopes[i] - fitted[i]) <= 1e-12);
    }
  }
}

TEST_CASE("convex hull of an already concave curve is the identity") {
  RocGraph g;
  g.k = 2;
  for (auto [x, y] : {std::pair{0.0, 1.0}, {0.6, 0.9}, {0.9, 0.6}, {1.0, 0.0}}) {
    g.points.push_back({x, y});
    g.thresholds.push_back(AffineThreshold({1.0 - x, x}));
  }
  const RocGraph hull = convex_hull_roc(g);
  CHECK(hull.points == g.points);
}

TEST_CASE("collinear interior hull points are dropped") {
  RocGraph g;
  g.k = 2;
  for (auto [x, y] : {std::pair{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}}) {
    g.points.push_back({x, y});
    g.thresholds.push_back(AffineThreshold({1.0 - x, x}));
  }
  const RocGraph hull = convex_hull_roc(g);
  REQUIRE(hull.size() == 2);
  CHECK(same_point(hull.points[0], {0.0, 1.0}, 0.0));
  CHECK(same_point(hull.points[1], {1.0, 0.0}, 0.0));
}

TEST_CASE("hull vertices equal the calibrated curve points") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto prob = testutil::random_binary(60, seed, seed % 2 == 0);
    const RocGraph raw = sroc_curve(prob.scores,
                                    [&] {
                                      std::vector<int> l(prob.targets.size());
                                      for (std::size_t i = 0; i < l.size(); ++i) {
                                        l[i] = prob.targets[i] > 0.5 ? 1 : 0;
                                      }
                                      return l;
                                    }(),
                                    prob.weights);
    const RocGraph hull = convex_hull_roc(raw);
    const auto fitted = pav_fitted_values(prob.scores, prob.targets, prob.weights);
    std::vector<int> labels(prob.targets.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = prob.targets[i] > 0.5 ? 1 : 0;
    }
    const RocGraph cal = sroc_curve(fitted, labels, prob.weights);
    CHECK(same_point_set(hull.points, cal.points, 1e-12));

    CHECK(auc(cal) >= auc(raw) - 1e-12);
  }
}

TEST_CASE("auc basics and pairwise oracle") {
  {
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    const std::vector<int> y{0, 0, 1, 1};
    const std::vector<double> w{1, 1, 1, 1};
    CHECK(auc(sroc_curve(s, y, w)) == doctest::Approx(1.0).epsilon(1e-15));
  }
  {
    const std::vector<double> s{0.5, 0.5, 0.5};
    const std::vector<int> y{0, 1, 0};
    const std::vector<double> w{1, 1, 1};
    CHECK(auc(sroc_curve(s, y, w)) == doctest::Approx(0.5).epsilon(1e-15));
  }
  {
    const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
    const std::vector<int> y{0, 1, 0, 1};
    const std::vector<double> w{1, 1, 1, 1};
    CHECK(auc(sroc_curve(s, y, w)) ==
          doctest::Approx(pairwise_auc(s, y, w)).epsilon(1e-12));
  }
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto prob = testutil::random_binary(40, seed, true, seed % 3 == 0);
    std::vector<int> labels(prob.targets.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = prob.targets[i] > 0.5 ? 1 : 0;
    }
    const double trap = auc(sroc_curve(prob.scores, labels, prob.weights));
    const double pair = pairwise_auc(prob.scores, labels, prob.weights);
    CHECK(std::abs(trap - pair) <= 1e-12);
  }

  RocGraph single;
  single.k = 2;
  single.points.push_back({0.5, 0.5});
  single.thresholds.push_back(AffineThreshold({0.5, 0.5}));
  CHECK_THROWS_AS(auc(single), ContractError);
}

TEST_CASE("roc surface reduces to the sroc curve for K=2") {
  const auto prob = testutil::random_binary(50, 5, true);
  const Dataset ds = testutil::binary_dataset(prob);
  const RocGraph curve = sroc_curve(ds);
  const RocGraph surf = roc_surface(ds, curve.thresholds);
  REQUIRE(surf.size() == curve.size());
  for (std::size_t i = 0; i < surf.size(); ++i) {
    CHECK(same_point(surf.points[i], curve.points[i], 1e-12));
  }
}

TEST_CASE("roc surface corner thresholds and pure synthetic data") {
  const Dataset ds = synth_simplex(200, 3, 0.0, 3);
  {
    const std::vector<AffineThreshold> t{AffineThreshold({-1.0, 1.0, 1.0})};
    const RocGraph g = roc_surface(ds, t);
    REQUIRE(g.size() == 1);
    CHECK(same_point(g.points[0], {1.0, 0.0, 0.0}, 0.0));
  }
  {
    const double third = 1.0 / 3.0;
    const std::vector<AffineThreshold> t{AffineThreshold({third, third, third})};
    const RocGraph g = roc_surface(ds, t);
    REQUIRE(g.size() == 1);
    CHECK(same_point(g.points[0], {1.0, 1.0, 1.0}, 0.0));
  }
  {
    Dataset missing = ds;
    for (auto& s : missing.samples) {
      if (s.label == 2) s.label = 0;
    }
    const std::vector<AffineThreshold> t{AffineThreshold({1.0, 0.0, 0.0})};
    CHECK_THROWS_AS(roc_surface(missing, t), ContractError);
  }
  CHECK_THROWS_AS(roc_surface(ds, std::vector<AffineThreshold>{}), ContractError);
}

TEST_CASE("threshold grid enumerates the clipped lattice") {
  {
    const auto lattice = lattice_thresholds(2, 0.5);
    REQUIRE(lattice.size() == 7);
    for (double t : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0}) {
      bool found = false;
      for (const auto& g : lattice) {
        if (g.coords[1] == t && g.coords[0] == 1.0 - t) found = true;
      }
      CHECK(found);
    }
  }
  {
    // independent enumeration for K=3, step 1
    const auto lattice = lattice_thresholds(3, 1.0);
    std::vector<std::vector<double>> expect;
    for (double a : {-1.0, 0.0, 1.0, 2.0}) {
      for (double b : {-1.0, 0.0, 1.0, 2.0}) {
        for (double c : {-1.0, 0.0, 1.0, 2.0}) {
          if (std::abs(a + b + c - 1.0) <= 1e-9) expect.push_back({a, b, c});
        }
      }
    }
    std::vector<std::vector<double>> got;
    for (const auto& g : lattice) got.push_back(g.coords);
    CHECK(same_point_set(got, expect, 0.0));
  }
  {
    const Dataset ds = synth_simplex(10, 2, 0.0, 1);
    const auto grid = default_threshold_grid(ds, 0.5);
    CHECK(grid.size() >= 7 + 1);  // lattice plus data points (deduplicated)
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(lattice_thresholds(4, 1e-5)),
                       doctest::Contains("cap"), ContractError);
}

TEST_CASE("vus handles degenerate graphs and tracks auc for K=2") {
  {
    RocGraph g;
    g.k = 3;
    g.points.push_back({1.0, 1.0, 1.0});
    g.thresholds.push_back(AffineThreshold({1.0 / 3, 1.0 / 3, 1.0 / 3}));
    const VusResult r = vus(g, 20000, 1);
    CHECK(r.value == 1.0);
  }
  {
    RocGraph g;
    g.k = 2;
    g.points.push_back({0.0, 0.0});
    g.thresholds.push_back(AffineThreshold({0.5, 0.5}));
    CHECK(vus(g, 20000, 1).value <= 1e-4);
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto prob = testutil::random_binary(400, seed);
    std::vector<int> labels(prob.targets.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      labels[i] = prob.targets[i] > 0.5 ? 1 : 0;
    }
    const RocGraph curve = sroc_curve(prob.scores, labels, prob.weights);
    const double area = auc(curve);
    const VusResult mc = vus(curve, 100000, seed);
    CHECK(std::abs(mc.value - area) <= 0.01);
  }
}

TEST_CASE("vus is monotone in the point set and deterministic") {
  RocGraph g;
  g.k = 3;
  g.points.push_back({0.6, 0.5, 0.4});
  g.thresholds.push_back(AffineThreshold({0.2, 0.3, 0.5}));
  const VusResult base = vus(g, 50000, 9);
  const VusResult again = vus(g, 50000, 9);
  CHECK(base.value == again.value);

  g.points.push_back({0.3, 0.9, 0.2});
  g.thresholds.push_back(AffineThreshold({0.5, 0.0, 0.5}));
  const VusResult more = vus(g, 50000, 9);
  CHECK(more.value >= base.value);
}

TEST_CASE("partition realizability and witnesses") {
  Rng rng(17);
  // identity partitions are always realizable by the probing threshold itself
  const Dataset ds = synth_simplex(40, 3, 0.2, 5);
  std::vector<std::vector<double>> raw;
  for (const auto& s : ds.samples) raw.push_back(s.p);
  std::vector<AffineThreshold> gammas;
  for (int i = 0; i < 8; ++i) {
    gammas.push_back(AffineThreshold(ds.samples[rng.below(ds.size())].p));
  }
  CHECK(is_roc_monotone(raw, raw, gammas));

  for (const auto& gamma : gammas) {
    std::vector<int> labels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      labels[i] = assign_region(raw[i], gamma);
    }
    const auto res = realize_partition(raw, labels, 3);
    REQUIRE(res.feasible);
    REQUIRE(res.witness.has_value());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(assign_region(raw[i], *res.witness) == labels[i]);
    }
  }
}

TEST_CASE("pav calibration is roc monotone, order reversal is not") {
  const auto prob = testutil::random_binary(60, 23);
  const auto fitted = pav_fitted_values(prob.scores, prob.targets);
  std::vector<std::vector<double>> raw, cal, rev;
  for (std::size_t i = 0; i < prob.scores.size(); ++i) {
    raw.push_back({1.0 - prob.scores[i], prob.scores[i]});
    cal.push_back({1.0 - fitted[i], fitted[i]});
    rev.push_back({prob.scores[i], 1.0 - prob.scores[i]});
  }
  std::vector<AffineThreshold> gammas;
  for (double s : prob.scores) gammas.push_back(AffineThreshold({1.0 - s, s}));
  CHECK(is_roc_monotone(raw, cal, gammas));

  // order reversal on separated classes breaks monotony
  std::vector<std::vector<double>> sep_raw, sep_rev;
  std::vector<double> sep_scores{0.1, 0.2, 0.8, 0.9};
  for (double s : sep_scores) {
    sep_raw.push_back({1.0 - s, s});
    sep_rev.push_back({s, 1.0 - s});
  }
  const std::vector<AffineThreshold> split{AffineThreshold({0.5, 0.5})};
  CHECK_FALSE(is_roc_monotone(sep_raw, sep_rev, split));
}

TEST_CASE("roc csv export carries coordinates and thresholds") {
  const auto prob = testutil::random_binary(10, 2);
  const Dataset ds = testutil::binary_dataset(prob);
  const RocGraph g = sroc_curve(ds);
  const std::string csv = roc_to_csv(g);
  CHECK(csv.rfind("coord1,coord2,gamma1,gamma2\n", 0) == 0);
  std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == g.size() + 1);
}

#pragma once

#include <cmath>
#include <vector>

#include "calib/rng.hpp"
#include "calib/types.hpp"

namespace testutil {

// Random binary calibration problem: scores in [0,1], Bernoulli labels whose
// rate follows the score, optional weights in (0,2], optional score ties via
// rounding to one decimal.
struct BinaryProblem {
  std::vector<double> scores;
  std::vector<double> targets;  // 0/1
  std::vector<double> weights;
};

inline BinaryProblem random_binary(std::size_t n, std::uint64_t seed,
                                   bool weighted = false, bool gridded = false) {
  calib::Rng rng(calib::splitmix64(seed ^ 0xB1A2C3ULL));
  BinaryProblem p;
  p.scores.resize(n);
  p.targets.resize(n);
  p.weights.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = rng.uniform();
    if (gridded) s = std::round(s * 10.0) / 10.0;
    p.scores[i] = s;
    const double rate = 0.15 + 0.7 * s;
    p.targets[i] = rng.uniform() < rate ? 1.0 : 0.0;
    if (weighted) p.weights[i] = 2.0 - rng.uniform() * 1.999;
  }
  return p;
}

inline calib::Dataset binary_dataset(const BinaryProblem& p) {
  calib::Dataset ds;
  ds.k = 2;
  for (std::size_t i = 0; i < p.scores.size(); ++i) {
    calib::LabeledForecast s;
    s.p = {1.0 - p.scores[i], p.scores[i]};
    s.label = p.targets[i] > 0.5 ? 1 : 0;
    s.weight = p.weights[i];
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace testutil

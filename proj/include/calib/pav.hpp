#pragma once

#include <span>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Piecewise-constant map on the real line: m bins with edges
// boundaries[0] = -inf < boundaries[1] < ... < boundaries[m] = +inf.
// pav_fit produces nondecreasing values; fixed-width binning reuses the
// container without that guarantee.
struct IsotonicModel {
  std::vector<double> boundaries;   // m+1 edges
  std::vector<double> values;       // m bin values
  std::vector<std::size_t> counts;  // samples pooled into each bin

  std::size_t bins() const { return values.size(); }
};

// Weighted isotonic regression by pool-adjacent-violators. Scores need not be
// sorted; tied scores are pooled into one bin before solving. Interior bin
// edges sit at the midpoint between neighbouring bins' extreme scores.
IsotonicModel pav_fit(std::span<const double> scores,
                      std::span<const double> targets,
                      std::span<const double> weights = {});

// Bin lookup; total on the real line.
double pav_predict(const IsotonicModel& model, double score);

// Convenience: fitted value of every input sample, in input order.
std::vector<double> pav_fitted_values(std::span<const double> scores,
                                      std::span<const double> targets,
                                      std::span<const double> weights = {});

}  // namespace calib

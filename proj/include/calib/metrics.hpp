#pragma once

#include <span>
#include <string>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Expected calibration error of forecasts taking finitely many distinct
// values: weighted mean distance between each group's forecast and its
// empirical label distribution. Distance is the absolute class-2 gap for
// K=2 and the L1 norm for K>=3.
double ece_discrete(std::span<const std::vector<double>> forecasts,
                    std::span<const int> labels,
                    std::span<const double> weights, int k);

// ECE under a caller-provided grouping (bin or leaf ids); the group forecast
// is the group's weighted mean forecast.
double ece_grouped(std::span<const int> group_ids,
                   std::span<const std::vector<double>> forecasts,
                   std::span<const int> labels,
                   std::span<const double> weights, int k);

// Regular m-bin discretization of the class-2 probability (binary only).
double ece_binned(std::span<const std::vector<double>> forecasts,
                  std::span<const int> labels,
                  std::span<const double> weights, int m);

constexpr int kDefaultEceBins = 15;

struct CrossEntropyResult {
  double h = 0.0;          // -(1/W) sum w log p[y], nats
  double h_reg = 0.0;      // h - (lambda/W) sum_i w_i sum_k log p_i[k]
  bool h_finite = true;
  bool h_reg_finite = true;
};

// Infinite values are reported as +inf with the flag cleared, never thrown.
CrossEntropyResult cross_entropy(std::span<const std::vector<double>> forecasts,
                                 std::span<const int> labels,
                                 std::span<const double> weights,
                                 double lambda = 0.0);

struct Decomposition {
  double h = 0.0;
  double kl_term = 0.0;      // weighted KL(group empirical || group forecast)
  double refinement = 0.0;   // weighted entropy of group empirical distributions
  double residual = 0.0;     // |h - kl_term - refinement|
  bool finite = true;
};

// Proper-score decomposition of the cross entropy over exact-value groups.
Decomposition decomposition_check(std::span<const std::vector<double>> forecasts,
                                  std::span<const int> labels,
                                  std::span<const double> weights, int k);

struct MetricsReport {
  double ece = 0.0;
  double cross_entropy = 0.0;
  double regularized_cross_entropy = 0.0;
  bool ce_finite = true;
  bool ce_reg_finite = true;
  double auc_or_vus = 0.0;
  std::size_t n_bins_or_leaves = 0;
  int k = 0;

  std::string to_json() const;
};

}  // namespace calib

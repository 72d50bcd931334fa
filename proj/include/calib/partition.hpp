#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "calib/pav.hpp"
#include "calib/types.hpp"

namespace calib {

struct SplitLogEntry {
  std::size_t iteration;  // 1-based ordinal of the applied split
  int region_id;          // node expanded by the split
  AffineThreshold gamma;
  double criterion;       // M value of the applied split
};

// One node of the recursive simplex partition. Every node keeps the leaf
// statistics it had before being expanded, so any prefix of the split
// sequence is itself a usable model.
struct PartitionNode {
  std::vector<double> value;     // Laplace-smoothed mean, sums to 1
  std::vector<double> raw_mean;  // unsmoothed weighted mean of one-hot labels
  std::size_t count = 0;         // calibration samples reaching the node
  double mass = 0.0;             // their total weight
  std::size_t created_at = 0;    // split ordinal that created the node (root: 0)
  bool is_split = false;
  std::size_t expanded_at = 0;   // split ordinal that expanded it (when is_split)
  AffineThreshold gamma;         // splitting threshold (when is_split)
  std::vector<int> children;     // K child node ids (when is_split)
};

struct SimplexPartitionModel {
  int k = 0;
  double alpha = 1.0;
  std::vector<PartitionNode> nodes;  // node 0 is the root, ids in creation order
  std::vector<SplitLogEntry> split_log;

  std::size_t splits() const { return split_log.size(); }
};

// Criterion M: sum over nonempty children of child weight times the L1 gap
// between the region's raw mean and the child's raw mean.
double split_criterion(const Dataset& ds, std::span<const std::size_t> indices,
                       const AffineThreshold& gamma);

struct FitOptions {
  double alpha = 1.0;
  std::size_t max_leaves = 0;   // 0: no cap
  bool data_candidates = true;  // sample points inside each region
  double lattice_step = 0.0;    // > 0: add lattice thresholds routed to the region
  Exec exec = Exec::parallel;
};

// Multi-class isotonic recursive partitioning: recursive simplex splitting
// with the largest admissible criterion, where a split is admissible only if
// the resulting calibrated forecasts stay realizable as raw-forecast
// partitions (checked on the introduced thresholds, the candidate, and the
// current calibrated values). For K=2 this reproduces isotonic regression.
SimplexPartitionModel fit_mc_irp(const Dataset& ds, const FitOptions& options = {});

// Same engine with the admissibility restriction removed; splits whenever the
// criterion is positive and at least two children are nonempty.
SimplexPartitionModel fit_recursive_bins(const Dataset& ds,
                                         const FitOptions& options = {});

// Equal-width binning of the class-2 probability (binary datasets), bin value
// Laplace-smoothed; empty bins fall back to their center.
IsotonicModel fit_fixed_bins(const Dataset& ds, int m, double alpha);

// Route a forecast to its leaf. A cutoff of t applies only the first t splits
// (0 = the single-region model); SIZE_MAX applies the full tree.
std::vector<double> apply_model(const SimplexPartitionModel& model,
                                std::span<const double> p,
                                std::size_t cutoff = SIZE_MAX);
int leaf_id(const SimplexPartitionModel& model, std::span<const double> p,
            std::size_t cutoff = SIZE_MAX);

// Nonempty leaves of the model truncated to the first t splits.
std::size_t leaf_count(const SimplexPartitionModel& model,
                       std::size_t cutoff = SIZE_MAX);

// Thresholds introduced by the applied splits, in order.
std::vector<AffineThreshold> introduced_thresholds(const SimplexPartitionModel& model);

// Binned calibration error for K >= 3: forecasts grouped by the leaf they
// route to, each group represented by its weighted mean forecast.
double ece_by_leaf(const SimplexPartitionModel& model,
                   std::span<const std::vector<double>> forecasts,
                   std::span<const int> labels, std::span<const double> weights);

// split_log as CSV: iteration,region,m,gamma1..gammaK.
std::string split_log_to_csv(const SimplexPartitionModel& model);

}  // namespace calib

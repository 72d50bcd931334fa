#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Finite set of K-dimensional ROC points, each tagged with the threshold that
// generated it. Curve for K=2, surface for K>=3.
struct RocGraph {
  int k = 0;
  std::vector<std::vector<double>> points;
  std::vector<AffineThreshold> thresholds;

  std::size_t size() const { return points.size(); }
};

// Cumulative weight vs cumulative weighted target, prefixed by the origin.
struct CsdGraph {
  std::vector<std::array<double, 2>> points;
};

// Symmetric ROC curve of binary scores: one point per gap between distinct
// score values plus the two extremes. Point = (fraction of class-0 mass with
// score <= gamma, fraction of class-1 mass with score > gamma).
RocGraph sroc_curve(std::span<const double> scores, std::span<const int> labels,
                    std::span<const double> weights = {});
RocGraph sroc_curve(const Dataset& ds);  // scores = class-2 probability
RocGraph sroc_curve(const Dataset& ds, std::span<const double> scores);

// Cumulative sum diagram of targets ordered by ascending score.
CsdGraph csd(std::span<const double> sorted_targets,
             std::span<const double> weights = {});

// Greatest convex minorant (lower convex hull) of a CSD polyline.
CsdGraph gcm(const CsdGraph& c);

// Slope of the GCM segment covering each sample of the diagram; equals the
// isotonic regression values.
std::vector<double> gcm_left_derivatives(const CsdGraph& diagram,
                                         const CsdGraph& minorant);

// Upper concave envelope of an SROC point set, in curve order, ending with
// the (1,0) corner. Interior collinear vertices are dropped.
RocGraph convex_hull_roc(const RocGraph& g);

// Trapezoidal area under the SROC polyline.
double auc(const RocGraph& g);

// ROC surface: coordinate k of the point for threshold gamma is the weighted
// fraction of class-k samples landing in region k. Duplicate points are kept
// once (first threshold wins).
RocGraph roc_surface(std::span<const std::vector<double>> forecasts,
                     std::span<const int> labels, std::span<const double> weights,
                     int k, std::span<const AffineThreshold> thresholds,
                     Exec exec = Exec::parallel);
RocGraph roc_surface(const Dataset& ds, std::span<const AffineThreshold> thresholds,
                     Exec exec = Exec::parallel);

// Regular lattice on the affine plane: K-tuples with coordinates in
// {-1, -1+step, ..., 2} summing to 1. Throws when the enumeration would
// exceed kGridCap points.
std::vector<AffineThreshold> lattice_thresholds(int k, double step);

// Sample points plus the regular lattice, deduplicated.
std::vector<AffineThreshold> default_threshold_grid(const Dataset& ds,
                                                    double lattice_step);

constexpr double kDefaultLatticeStep = 0.5;

struct VusResult {
  double value = 0.0;
  double sigma = 0.0;  // binomial standard error of the estimate
};

// Monte Carlo volume of the region dominated by the graph's points in
// [0,1]^K. The sample stream is split into fixed batches seeded from (seed,
// batch), so results do not depend on the worker count.
VusResult vus(const RocGraph& g, std::size_t mc_samples, std::uint64_t seed,
              Exec exec = Exec::parallel);

// Result of asking whether a sample partition is achievable by thresholding
// a given forecast set.
struct RealizeResult {
  bool feasible = false;
  std::optional<AffineThreshold> witness;  // threshold reproducing the partition
};

// Decides whether some threshold assigns forecast i to region labels[i] for
// every i, and produces such a threshold when one exists.
RealizeResult realize_partition(std::span<const std::vector<double>> forecasts,
                                std::span<const int> labels, int k,
                                bool want_witness = true);

// Feasibility of the aggregated system gamma[b] - gamma[a] >= gaps[a*k+b]
// (strict when b < a), with -inf marking absent constraints. This is the
// argmax tie-break written as difference constraints; realize_partition is
// the per-sample front end.
bool gaps_feasible(std::span<const double> gaps, int k);

// True when, for every gamma, the partition of the calibrated forecasts is
// achievable as a partition of the raw forecasts under some threshold.
bool is_roc_monotone(std::span<const std::vector<double>> raw,
                     std::span<const std::vector<double>> calibrated,
                     std::span<const AffineThreshold> gammas);

// Witness thresholds for each gamma (empty optional where none exists).
std::vector<std::optional<AffineThreshold>> matched_thresholds(
    std::span<const std::vector<double>> raw,
    std::span<const std::vector<double>> calibrated,
    std::span<const AffineThreshold> gammas);

// CSV export: coord1..coordK,gamma1..gammaK.
std::string roc_to_csv(const RocGraph& g);

}  // namespace calib

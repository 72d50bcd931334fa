#pragma once

#include <span>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Index of the maximal coordinate of p - gamma, ties broken by lowest index.
// The K regions {p : assign_region(p, gamma) = k} partition the simplex.
int assign_region(std::span<const double> p, const AffineThreshold& gamma);

// Batch kernel: region of every point under one threshold. Points are stored
// row-major, n rows of dimension k.
void assign_regions(std::span<const double> points_flat, int k,
                    const AffineThreshold& gamma, std::span<int> out,
                    Exec exec = Exec::parallel);

// S_k = indices of `restrict_to` (all of ds when empty) landing in region k.
std::vector<std::vector<std::size_t>> partition_samples(
    const Dataset& ds, const AffineThreshold& gamma,
    std::span<const std::size_t> restrict_to = {});

// Threshold sending every point of the simplex to region `k`: -1 at k,
// 2/(K-1) elsewhere. Witness that trivial partitions are always realizable.
AffineThreshold corner_threshold(int k, int dim);

// Flatten dataset forecasts to row-major storage (kernel input layout).
std::vector<double> flatten_forecasts(const Dataset& ds);

}  // namespace calib

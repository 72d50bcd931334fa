#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calib/roc.hpp"
#include "calib/types.hpp"

namespace calib {

// One row per fitted model size: prefix models for the recursive methods
// (metrics after every applied split), one model per grid value for fixed
// bins. Regularized cross entropy on the calibration split, standard cross
// entropy on the test split.
struct SweepOptions {
  std::vector<std::string> methods;       // of mc-irp | recursive-bins | fixed-bins
  double alpha = 1.0;
  std::vector<std::size_t> leaves_grid;   // fixed-bins sizes; max() caps recursive-bins
  std::size_t vus_samples = 20000;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

// Long-form CSV: method,n_bins,calib_ce_reg,test_ce,calib_auc_or_vus,test_auc_or_vus.
std::string run_sweep(const Dataset& calib_set, const Dataset& test_set,
                      const SweepOptions& options);

}  // namespace calib

#pragma once

#include <span>
#include <vector>

#include "calib/types.hpp"

namespace calib {

// Exact isotonic regression by exhausting every contiguous block partition of
// the sorted sequence and keeping the monotone candidate with least weighted
// squared error. Exponential; limited to n <= 12. Exists purely as an
// independent check on pav_fit and must stay free of its machinery.
std::vector<double> pav_oracle(std::span<const double> scores,
                               std::span<const double> targets,
                               std::span<const double> weights = {});

}  // namespace calib

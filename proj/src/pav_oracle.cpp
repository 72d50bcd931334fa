#include "calib/pav_oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace calib {

std::vector<double> pav_oracle(std::span<const double> scores,
                               std::span<const double> targets,
                               std::span<const double> weights) {
  const std::size_t n = scores.size();
  if (n == 0) throw ContractError("pav_oracle: empty input");
  if (n > 12) throw ContractError("pav_oracle: n > 12 is intractable");
  if (targets.size() != n || (!weights.empty() && weights.size() != n)) {
    throw ContractError("pav_oracle: length mismatch");
  }
  auto w_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Tied scores must share a value, so group them before enumerating.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t pos = 0; pos < n;) {
    std::vector<std::size_t> g;
    const double s = scores[order[pos]];
    while (pos < n && scores[order[pos]] == s) g.push_back(order[pos++]);
    groups.push_back(std::move(g));
  }
  const std::size_t m = groups.size();

  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<double> best(n);
  std::vector<double> cand(n);
  // bit j of mask set => a block boundary after group j
  for (std::uint64_t mask = 0; mask < (1ULL << (m - 1)); ++mask) {
    double sse = 0.0;
    bool monotone = true;
    double prev_mean = -std::numeric_limits<double>::infinity();
    std::size_t start = 0;
    for (std::size_t j = 0; j < m && monotone; ++j) {
      const bool close_block = (j + 1 == m) || ((mask >> j) & 1ULL);
      if (!close_block) continue;
      double wsum = 0.0, wysum = 0.0;
      for (std::size_t g = start; g <= j; ++g) {
        for (std::size_t i : groups[g]) {
          wsum += w_of(i);
          wysum += w_of(i) * targets[i];
        }
      }
      const double mean = wysum / wsum;
      if (mean < prev_mean) {
        monotone = false;
        break;
      }
      prev_mean = mean;
      for (std::size_t g = start; g <= j; ++g) {
        for (std::size_t i : groups[g]) {
          cand[i] = mean;
          const double d = targets[i] - mean;
          sse += w_of(i) * d * d;
        }
      }
      start = j + 1;
    }
    if (monotone && sse < best_sse) {
      best_sse = sse;
      best = cand;
    }
  }
  return best;
}

}  // namespace calib

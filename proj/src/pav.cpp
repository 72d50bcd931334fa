#include "calib/pav.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>

namespace calib {

namespace {

struct Block {
  double wsum;
  double wysum;
  std::size_t count;
  double lo_score;  // smallest score pooled into the block
  double hi_score;  // largest score pooled into the block

  double mean() const { return wysum / wsum; }
};

void check_inputs(std::span<const double> scores, std::span<const double> targets,
                  std::span<const double> weights) {
  if (scores.empty()) throw ContractError("pav: empty input");
  if (targets.size() != scores.size()) {
    throw ContractError("pav: scores and targets differ in length");
  }
  if (!weights.empty() && weights.size() != scores.size()) {
    throw ContractError("pav: weights length mismatch");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw ContractError("pav: weights must be positive");
  }
  bool warned = false;
  for (double y : targets) {
    if ((y < 0.0 || y > 1.0) && !warned) {
      std::cerr << "pav: warning: target " << y
                << " outside [0,1]; fitting proceeds on the raw value\n";
      warned = true;
    }
  }
}

std::vector<Block> solve_blocks(std::span<const double> scores,
                                std::span<const double> targets,
                                std::span<const double> weights) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  auto w_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  std::vector<Block> stack;
  std::size_t pos = 0;
  while (pos < n) {
    // pre-pool tied scores: one bin per distinct score value
    Block b{0.0, 0.0, 0, scores[order[pos]], scores[order[pos]]};
    while (pos < n && scores[order[pos]] == b.lo_score) {
      const std::size_t i = order[pos];
      b.wsum += w_of(i);
      b.wysum += w_of(i) * targets[i];
      b.count += 1;
      ++pos;
    }
    while (!stack.empty() && b.mean() <= stack.back().mean()) {
      const Block& top = stack.back();
      b.wsum += top.wsum;
      b.wysum += top.wysum;
      b.count += top.count;
      b.lo_score = top.lo_score;
      stack.pop_back();
    }
    stack.push_back(b);
  }
  return stack;
}

}  // namespace

IsotonicModel pav_fit(std::span<const double> scores,
                      std::span<const double> targets,
                      std::span<const double> weights) {
  check_inputs(scores, targets, weights);
  const auto blocks = solve_blocks(scores, targets, weights);

  IsotonicModel model;
  model.boundaries.reserve(blocks.size() + 1);
  model.boundaries.push_back(-std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j < blocks.size(); ++j) {
    model.boundaries.push_back(0.5 * (blocks[j - 1].hi_score + blocks[j].lo_score));
  }
  model.boundaries.push_back(std::numeric_limits<double>::infinity());
  for (const Block& b : blocks) {
    model.values.push_back(b.mean());
    model.counts.push_back(b.count);
  }
  return model;
}

double pav_predict(const IsotonicModel& model, double score) {
  if (model.values.empty()) throw ContractError("pav: model is empty");
  // bin j covers [boundaries[j], boundaries[j+1])
  const auto it = std::upper_bound(model.boundaries.begin() + 1,
                                   model.boundaries.end() - 1, score);
  const std::size_t j = static_cast<std::size_t>(it - (model.boundaries.begin() + 1));
  return model.values[j];
}

std::vector<double> pav_fitted_values(std::span<const double> scores,
                                      std::span<const double> targets,
                                      std::span<const double> weights) {
  check_inputs(scores, targets, weights);
  const auto blocks = solve_blocks(scores, targets, weights);
  std::vector<double> fitted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    // blocks are ordered by score; find the block whose range holds scores[i]
    const double s = scores[i];
    std::size_t lo = 0, hi = blocks.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (s > blocks[mid].hi_score) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    fitted[i] = blocks[lo].mean();
  }
  return fitted;
}

}  // namespace calib

#include "calib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"

namespace calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Group {
  double mass = 0.0;
  std::vector<double> label_mass;     // weighted one-hot sums
  std::vector<double> forecast_mass;  // weighted forecast sums
};

template <typename Key>
using GroupMap = std::map<Key, Group>;

void check_lengths(std::span<const std::vector<double>> forecasts,
                   std::span<const int> labels, std::span<const double> weights) {
  if (forecasts.empty()) throw ContractError("metrics: empty input");
  if (labels.size() != forecasts.size() ||
      (!weights.empty() && weights.size() != forecasts.size())) {
    throw ContractError("metrics: input length mismatch");
  }
}

double group_distance(const Group& g, std::span<const double> value, int k) {
  if (k == 2) {
    return std::abs(g.label_mass[1] / g.mass - value[1]);
  }
  double d = 0.0;
  for (int c = 0; c < k; ++c) d += std::abs(g.label_mass[c] / g.mass - value[c]);
  return d;
}

}  // namespace

double ece_discrete(std::span<const std::vector<double>> forecasts,
                    std::span<const int> labels,
                    std::span<const double> weights, int k) {
  check_lengths(forecasts, labels, weights);
  GroupMap<std::vector<double>> groups;
  double total = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    Group& g = groups[forecasts[i]];
    if (g.label_mass.empty()) g.label_mass.assign(k, 0.0);
    g.mass += w;
    g.label_mass[labels[i]] += w;
    total += w;
  }
  double ece = 0.0;
  for (const auto& [value, g] : groups) {
    ece += (g.mass / total) * group_distance(g, value, k);
  }
  return ece;
}

double ece_grouped(std::span<const int> group_ids,
                   std::span<const std::vector<double>> forecasts,
                   std::span<const int> labels,
                   std::span<const double> weights, int k) {
  check_lengths(forecasts, labels, weights);
  if (group_ids.size() != forecasts.size()) {
    throw ContractError("metrics: group ids length mismatch");
  }
  GroupMap<int> groups;
  double total = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    Group& g = groups[group_ids[i]];
    if (g.label_mass.empty()) {
      g.label_mass.assign(k, 0.0);
      g.forecast_mass.assign(k, 0.0);
    }
    g.mass += w;
    g.label_mass[labels[i]] += w;
    for (int c = 0; c < k; ++c) g.forecast_mass[c] += w * forecasts[i][c];
    total += w;
  }
  double ece = 0.0;
  for (const auto& [id, g] : groups) {
    std::vector<double> value(k);
    for (int c = 0; c < k; ++c) value[c] = g.forecast_mass[c] / g.mass;
    ece += (g.mass / total) * group_distance(g, value, k);
  }
  return ece;
}

double ece_binned(std::span<const std::vector<double>> forecasts,
                  std::span<const int> labels,
                  std::span<const double> weights, int m) {
  check_lengths(forecasts, labels, weights);
  if (m < 1) throw ContractError("ece_binned: need at least one bin");
  if (forecasts.front().size() != 2) {
    throw ContractError("ece_binned: regular binning applies to binary forecasts");
  }
  std::vector<int> bins(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double s = forecasts[i][1];
    int b = static_cast<int>(std::floor(s * m));
    bins[i] = std::clamp(b, 0, m - 1);
  }
  return ece_grouped(bins, forecasts, labels, weights, 2);
}

CrossEntropyResult cross_entropy(std::span<const std::vector<double>> forecasts,
                                 std::span<const int> labels,
                                 std::span<const double> weights,
                                 double lambda) {
  check_lengths(forecasts, labels, weights);
  CrossEntropyResult r;
  double total = 0.0;
  double hsum = 0.0;
  double regsum = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w;
    const double py = forecasts[i][labels[i]];
    if (py <= 0.0) {
      r.h_finite = false;
    } else {
      hsum += -w * std::log(py);
    }
    if (lambda != 0.0) {
      for (double pk : forecasts[i]) {
        if (pk <= 0.0) {
          r.h_reg_finite = false;
        } else {
          regsum += w * std::log(pk);
        }
      }
    }
  }
  r.h = r.h_finite ? hsum / total : kInf;
  if (!r.h_finite) r.h_reg_finite = false;
  r.h_reg = r.h_reg_finite ? r.h - (lambda / total) * regsum : kInf;
  return r;
}

Decomposition decomposition_check(std::span<const std::vector<double>> forecasts,
                                  std::span<const int> labels,
                                  std::span<const double> weights, int k) {
  check_lengths(forecasts, labels, weights);
  GroupMap<std::vector<double>> groups;
  double total = 0.0;
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    Group& g = groups[forecasts[i]];
    if (g.label_mass.empty()) g.label_mass.assign(k, 0.0);
    g.mass += w;
    g.label_mass[labels[i]] += w;
    total += w;
  }

  Decomposition d;
  const auto ce = cross_entropy(forecasts, labels, weights, 0.0);
  d.h = ce.h;
  if (!ce.h_finite) d.finite = false;
  for (const auto& [value, g] : groups) {
    const double frac = g.mass / total;
    double kl = 0.0, ent = 0.0;
    for (int c = 0; c < k; ++c) {
      const double e = g.label_mass[c] / g.mass;
      if (e <= 0.0) continue;
      ent += -e * std::log(e);
      if (value[c] <= 0.0) {
        d.finite = false;
        kl = kInf;
      } else if (kl != kInf) {
        kl += e * (std::log(e) - std::log(value[c]));
      }
    }
    d.kl_term += frac * kl;
    d.refinement += frac * ent;
  }
  d.residual = d.finite ? std::abs(d.h - d.kl_term - d.refinement)
                        : std::numeric_limits<double>::quiet_NaN();
  return d;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["ece"] = ece;
  if (ce_finite) {
    j["cross_entropy"] = cross_entropy;
  } else {
    j["cross_entropy"] = nullptr;
  }
  j["cross_entropy_finite"] = ce_finite;
  if (ce_reg_finite) {
    j["regularized_cross_entropy"] = regularized_cross_entropy;
  } else {
    j["regularized_cross_entropy"] = nullptr;
  }
  j["regularized_cross_entropy_finite"] = ce_reg_finite;
  j["auc_or_vus"] = auc_or_vus;
  j["n_bins_or_leaves"] = n_bins_or_leaves;
  j["k"] = k;
  return j.dump();
}

}  // namespace calib

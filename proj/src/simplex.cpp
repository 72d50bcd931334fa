#include "calib/simplex.hpp"

#include <cmath>
#include <cstdlib>

namespace calib {

AffineThreshold::AffineThreshold(std::vector<double> c) : coords(std::move(c)) {
  if (coords.size() < 2) {
    throw ContractError("threshold must have dimension >= 2");
  }
  double s = 0.0;
  for (double v : coords) s += v;
  if (std::abs(s - 1.0) > kSimplexTol) {
    throw ContractError("threshold coordinates must sum to 1, got sum " +
                        std::to_string(s));
  }
}

int assign_region(std::span<const double> p, const AffineThreshold& gamma) {
  if (p.size() != gamma.coords.size()) {
    throw ContractError("dimension mismatch: point has " +
                        std::to_string(p.size()) + " coordinates, threshold " +
                        std::to_string(gamma.coords.size()));
  }
  int best = 0;
  double best_v = p[0] - gamma.coords[0];
  for (std::size_t j = 1; j < p.size(); ++j) {
    const double v = p[j] - gamma.coords[j];
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(j);
    }
  }
  return best;
}

namespace {

inline int region_of_row(const double* row, const double* g, int k) {
  int best = 0;
  double best_v = row[0] - g[0];
  for (int j = 1; j < k; ++j) {
    const double v = row[j] - g[j];
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  return best;
}

}  // namespace

void assign_regions(std::span<const double> points_flat, int k,
                    const AffineThreshold& gamma, std::span<int> out,
                    Exec exec) {
  if (k != gamma.k()) throw ContractError("dimension mismatch in assign_regions");
  const std::size_t n = points_flat.size() / static_cast<std::size_t>(k);
  if (out.size() != n) throw ContractError("output size mismatch in assign_regions");
  const double* pts = points_flat.data();
  const double* g = gamma.coords.data();
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      out[i] = region_of_row(pts + i * k, g, k);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = region_of_row(pts + i * k, g, k);
    }
  }
}

std::vector<std::vector<std::size_t>> partition_samples(
    const Dataset& ds, const AffineThreshold& gamma,
    std::span<const std::size_t> restrict_to) {
  std::vector<std::vector<std::size_t>> sets(ds.k);
  auto place = [&](std::size_t i) {
    const int r = assign_region(ds.samples[i].p, gamma);
    sets[r].push_back(i);
  };
  if (restrict_to.empty()) {
    for (std::size_t i = 0; i < ds.size(); ++i) place(i);
  } else {
    for (std::size_t i : restrict_to) {
      if (i >= ds.size()) throw ContractError("restrict index out of range");
      place(i);
    }
  }
  return sets;
}

AffineThreshold corner_threshold(int k, int dim) {
  std::vector<double> g(dim, 2.0 / (dim - 1));
  g[k] = -1.0;
  return AffineThreshold(std::move(g));
}

std::vector<double> flatten_forecasts(const Dataset& ds) {
  std::vector<double> flat;
  flat.reserve(ds.size() * static_cast<std::size_t>(ds.k));
  for (const auto& s : ds.samples) {
    flat.insert(flat.end(), s.p.begin(), s.p.end());
  }
  return flat;
}

}  // namespace calib

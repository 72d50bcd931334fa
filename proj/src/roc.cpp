#include "calib/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "calib/dataset_io.hpp"
#include "calib/rng.hpp"
#include "calib/simplex.hpp"

namespace calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a,
             const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

}  // namespace

RocGraph sroc_curve(std::span<const double> scores, std::span<const int> labels,
                    std::span<const double> weights) {
  const std::size_t n = scores.size();
  if (labels.size() != n || (!weights.empty() && weights.size() != n)) {
    throw ContractError("sroc: input length mismatch");
  }
  if (n == 0) throw ContractError("sroc: empty input");
  auto w_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ContractError("sroc: labels must be 0 or 1");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // class masses accumulated in sorted order, so the cumulative fractions hit
  // the (1,0) corner exactly
  double mass0 = 0.0, mass1 = 0.0;
  for (std::size_t i : order) (labels[i] == 0 ? mass0 : mass1) += w_of(i);
  if (mass0 <= 0.0 || mass1 <= 0.0) {
    throw ContractError("sroc: both classes must be present");
  }

  RocGraph g;
  g.k = 2;
  auto add_point = [&](double p0, double p1, double t) {
    g.points.push_back({p0, p1});
    g.thresholds.push_back(AffineThreshold({1.0 - t, t}));
  };

  add_point(0.0, 1.0, scores[order.front()] - 1.0);
  double cum0 = 0.0, cum1 = 0.0;
  for (std::size_t pos = 0; pos < n;) {
    const double v = scores[order[pos]];
    while (pos < n && scores[order[pos]] == v) {
      const std::size_t i = order[pos];
      (labels[i] == 0 ? cum0 : cum1) += w_of(i);
      ++pos;
    }
    const double t = (pos < n) ? 0.5 * (v + scores[order[pos]]) : v + 1.0;
    add_point(cum0 / mass0, 1.0 - cum1 / mass1, t);
  }
  return g;
}

RocGraph sroc_curve(const Dataset& ds) {
  std::vector<double> scores(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) scores[i] = ds.samples[i].p[1];
  return sroc_curve(ds, scores);
}

RocGraph sroc_curve(const Dataset& ds, std::span<const double> scores) {
  if (ds.k != 2) throw ContractError("sroc: dataset must be binary");
  std::vector<int> labels(ds.size());
  std::vector<double> weights(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    labels[i] = ds.samples[i].label;
    weights[i] = ds.samples[i].weight;
  }
  return sroc_curve(scores, labels, weights);
}

CsdGraph csd(std::span<const double> sorted_targets, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != sorted_targets.size()) {
    throw ContractError("csd: weights length mismatch");
  }
  CsdGraph c;
  c.points.reserve(sorted_targets.size() + 1);
  c.points.push_back({0.0, 0.0});
  double x = 0.0, y = 0.0;
  for (std::size_t i = 0; i < sorted_targets.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    x += w;
    y += w * sorted_targets[i];
    c.points.push_back({x, y});
  }
  return c;
}

CsdGraph gcm(const CsdGraph& c) {
  CsdGraph hull;
  for (const auto& p : c.points) {
    auto& h = hull.points;
    while (h.size() >= 2 && cross(h[h.size() - 2], h[h.size() - 1], p) <= 0.0) {
      h.pop_back();
    }
    h.push_back(p);
  }
  return hull;
}

std::vector<double> gcm_left_derivatives(const CsdGraph& diagram,
                                         const CsdGraph& minorant) {
  const std::size_t n = diagram.points.size() - 1;
  std::vector<double> out(n);
  std::size_t seg = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    const double xj = diagram.points[j][0];
    while (seg + 1 < minorant.points.size() - 1 && minorant.points[seg + 1][0] < xj) {
      ++seg;
    }
    const auto& a = minorant.points[seg];
    const auto& b = minorant.points[seg + 1];
    out[j - 1] = (b[1] - a[1]) / (b[0] - a[0]);
  }
  return out;
}

RocGraph convex_hull_roc(const RocGraph& g) {
  if (g.k != 2) throw ContractError("convex_hull_roc: curve must be binary");
  if (g.points.empty()) throw ContractError("convex_hull_roc: empty graph");

  // keep the top point of every vertical run; the rest lie on the dominated side
  std::map<double, std::size_t> top;  // x -> index of max-y point
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto [it, inserted] = top.emplace(g.points[i][0], i);
    if (!inserted && g.points[i][1] > g.points[it->second][1]) it->second = i;
  }

  // collinear up to rounding counts as collinear: exact-real collinear triples
  // land at |cross| ~ 1e-17 and must drop like exact ones
  constexpr double kCollinearTol = 1e-12;
  std::vector<std::size_t> chain;  // indices into g
  std::vector<std::array<double, 2>> pts;
  for (const auto& [x, idx] : top) {
    std::array<double, 2> p{g.points[idx][0], g.points[idx][1]};
    while (pts.size() >= 2 &&
           cross(pts[pts.size() - 2], pts[pts.size() - 1], p) >= -kCollinearTol) {
      pts.pop_back();
      chain.pop_back();
    }
    pts.push_back(p);
    chain.push_back(idx);
  }

  RocGraph hull;
  hull.k = 2;
  for (std::size_t idx : chain) {
    hull.points.push_back(g.points[idx]);
    hull.thresholds.push_back(g.thresholds[idx]);
  }
  // the hull descends to the all-in-region-0 corner
  if (hull.points.back()[0] != 1.0 || hull.points.back()[1] != 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.points[i][0] == 1.0 && g.points[i][1] == 0.0) {
        hull.points.push_back(g.points[i]);
        hull.thresholds.push_back(g.thresholds[i]);
        break;
      }
    }
  }
  return hull;
}

double auc(const RocGraph& g) {
  if (g.k != 2) throw ContractError("auc: defined for binary curves");
  if (g.size() < 2) throw ContractError("auc: need at least 2 points");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(g.size());
  for (const auto& p : g.points) pts.push_back({p[0], p[1]});
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] > b[1];
  });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i][0] - pts[i - 1][0]) * 0.5 * (pts[i][1] + pts[i - 1][1]);
  }
  return area;
}

RocGraph roc_surface(std::span<const std::vector<double>> forecasts,
                     std::span<const int> labels, std::span<const double> weights,
                     int k, std::span<const AffineThreshold> thresholds,
                     Exec exec) {
  const std::size_t n = forecasts.size();
  if (labels.size() != n || (!weights.empty() && weights.size() != n)) {
    throw ContractError("roc_surface: input length mismatch");
  }
  if (thresholds.empty()) throw ContractError("roc_surface: no thresholds given");
  auto w_of = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  std::vector<double> class_mass(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw ContractError("roc_surface: label out of range");
    class_mass[labels[i]] += w_of(i);
  }
  for (int c = 0; c < k; ++c) {
    if (class_mass[c] <= 0.0) {
      throw ContractError("roc_surface: class " + std::to_string(c + 1) +
                          " is absent from the data");
    }
  }

  const std::size_t t_count = thresholds.size();
  std::vector<std::vector<double>> raw_points(t_count);
  auto eval_threshold = [&](std::size_t t) {
    const AffineThreshold& gamma = thresholds[t];
    std::vector<double> hit(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int r = assign_region(forecasts[i], gamma);
      if (r == labels[i]) hit[r] += w_of(i);
    }
    for (int c = 0; c < k; ++c) hit[c] /= class_mass[c];
    raw_points[t] = std::move(hit);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(t_count); ++t) {
      eval_threshold(static_cast<std::size_t>(t));
    }
  } else {
    for (std::size_t t = 0; t < t_count; ++t) eval_threshold(t);
  }

  RocGraph g;
  g.k = k;
  std::map<std::vector<double>, bool> seen;
  for (std::size_t t = 0; t < t_count; ++t) {
    auto [it, inserted] = seen.emplace(raw_points[t], true);
    if (inserted) {
      g.points.push_back(raw_points[t]);
      g.thresholds.push_back(thresholds[t]);
    }
  }
  return g;
}

RocGraph roc_surface(const Dataset& ds, std::span<const AffineThreshold> thresholds,
                     Exec exec) {
  std::vector<std::vector<double>> fc(ds.size());
  std::vector<int> labels(ds.size());
  std::vector<double> weights(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    fc[i] = ds.samples[i].p;
    labels[i] = ds.samples[i].label;
    weights[i] = ds.samples[i].weight;
  }
  return roc_surface(fc, labels, weights, ds.k, thresholds, exec);
}

std::vector<AffineThreshold> lattice_thresholds(int k, double step) {
  if (!(step > 0.0)) throw ContractError("grid: lattice step must be positive");
  std::vector<double> grid_values;
  for (double v = -1.0; v <= 2.0 + 1e-12; v += step) grid_values.push_back(v);

  double potential = 1.0;
  for (int d = 0; d < k - 1; ++d) potential *= static_cast<double>(grid_values.size());
  if (potential > 50.0 * static_cast<double>(kGridCap)) {
    throw ContractError("grid: lattice step too small, cap of " +
                        std::to_string(kGridCap) + " points exceeded");
  }

  std::vector<AffineThreshold> out;
  const double gmin = grid_values.front();
  const double gmax = grid_values.back();
  std::vector<double> coords(k);
  auto recurse = [&](auto&& self, int depth, double partial) -> void {
    const int rem = k - depth;
    if (rem == 0) {
      if (std::abs(partial - 1.0) <= kSimplexTol) {
        if (out.size() >= kGridCap) {
          throw ContractError("grid: cap of " + std::to_string(kGridCap) +
                              " points exceeded");
        }
        out.push_back(AffineThreshold(coords));
      }
      return;
    }
    if (partial + rem * gmin > 1.0 + kSimplexTol) return;
    if (partial + rem * gmax < 1.0 - kSimplexTol) return;
    for (double v : grid_values) {
      coords[depth] = v;
      self(self, depth + 1, partial + v);
    }
  };
  recurse(recurse, 0, 0.0);
  return out;
}

std::vector<AffineThreshold> default_threshold_grid(const Dataset& ds,
                                                    double lattice_step) {
  std::map<std::vector<double>, bool> seen;
  std::vector<AffineThreshold> out;
  auto push = [&](const std::vector<double>& coords) {
    if (!seen.emplace(coords, true).second) return;
    if (out.size() >= kGridCap) {
      throw ContractError("grid: cap of " + std::to_string(kGridCap) +
                          " points exceeded");
    }
    out.push_back(AffineThreshold(coords));
  };
  for (const auto& s : ds.samples) push(s.p);
  for (const auto& g : lattice_thresholds(ds.k, lattice_step)) push(g.coords);
  return out;
}

VusResult vus(const RocGraph& g, std::size_t mc_samples, std::uint64_t seed,
              Exec exec) {
  if (g.points.empty()) throw ContractError("vus: empty graph");
  if (mc_samples < 1) throw ContractError("vus: need at least one sample");
  const int k = g.k;

  // only Pareto-maximal points matter for domination
  std::vector<std::vector<double>> pts = g.points;
  std::sort(pts.begin(), pts.end(), std::greater<>());
  std::vector<std::vector<double>> front;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : front) {
      bool le = true;
      for (int c = 0; c < k; ++c) {
        if (p[c] > q[c]) {
          le = false;
          break;
        }
      }
      if (le) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }

  // Pareto points sorted by descending first coordinate have ascending
  // second coordinate, so K=2 domination is a binary search.
  std::vector<std::array<double, 2>> front2;
  if (k == 2) {
    for (const auto& q : front) front2.push_back({q[0], q[1]});
  }

  constexpr std::size_t kBatch = 8192;
  const std::size_t batches = (mc_samples + kBatch - 1) / kBatch;
  std::vector<std::uint64_t> hits(batches, 0);
  auto run_batch = [&](std::size_t b) {
    Rng rng(stream_seed(seed, b));
    const std::size_t count = std::min(kBatch, mc_samples - b * kBatch);
    std::uint64_t h = 0;
    std::vector<double> u(k);
    for (std::size_t s = 0; s < count; ++s) {
      for (int c = 0; c < k; ++c) u[c] = rng.uniform();
      if (k == 2) {
        const auto it = std::lower_bound(
            front2.begin(), front2.end(), u[1],
            [](const std::array<double, 2>& q, double y) { return q[1] < y; });
        if (it != front2.end() && u[0] <= (*it)[0]) ++h;
        continue;
      }
      for (const auto& q : front) {
        bool dom = true;
        for (int c = 0; c < k; ++c) {
          if (u[c] > q[c]) {
            dom = false;
            break;
          }
        }
        if (dom) {
          ++h;
          break;
        }
      }
    }
    hits[b] = h;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(batches); ++b) {
      run_batch(static_cast<std::size_t>(b));
    }
  } else {
    for (std::size_t b = 0; b < batches; ++b) run_batch(b);
  }

  std::uint64_t total = 0;
  for (std::uint64_t h : hits) total += h;
  VusResult r;
  r.value = static_cast<double>(total) / static_cast<double>(mc_samples);
  r.sigma = std::sqrt(r.value * (1.0 - r.value) / static_cast<double>(mc_samples));
  return r;
}

namespace {

// Difference-constraint system gamma[b] - gamma[a] >= D[a][b] (strict when
// b < a), solved over the K threshold coordinates. Feasibility is decided by
// longest-path closure with lexicographic (weight, strict-edge-count) costs.
struct GapMatrix {
  int k;
  std::vector<double> w;  // k*k, -inf where no constraint
  std::vector<int> s;     // strict-edge flags

  explicit GapMatrix(int dim)
      : k(dim), w(static_cast<std::size_t>(dim) * dim, -kInf),
        s(static_cast<std::size_t>(dim) * dim, 0) {}

  double& weight(int a, int b) { return w[static_cast<std::size_t>(a) * k + b]; }
  int& strict(int a, int b) { return s[static_cast<std::size_t>(a) * k + b]; }
};

struct Feasibility {
  bool feasible;
  std::vector<double> potential_w;  // longest-path weight from a virtual source
  std::vector<double> potential_s;  // strict edges along that path
  std::vector<double> potential_e;  // total edges along that path
};

Feasibility solve_gaps(const GapMatrix& gaps) {
  const int k = gaps.k;
  std::vector<double> dw = gaps.w;
  std::vector<double> ds(gaps.s.begin(), gaps.s.end());
  auto at = [k](std::vector<double>& m, int a, int b) -> double& {
    return m[static_cast<std::size_t>(a) * k + b];
  };
  for (int c = 0; c < k; ++c) {
    for (int a = 0; a < k; ++a) {
      if (at(dw, a, c) == -kInf) continue;
      for (int b = 0; b < k; ++b) {
        if (at(dw, c, b) == -kInf) continue;
        const double nw = at(dw, a, c) + at(dw, c, b);
        const double ns = at(ds, a, c) + at(ds, c, b);
        if (nw > at(dw, a, b) || (nw == at(dw, a, b) && ns > at(ds, a, b))) {
          at(dw, a, b) = nw;
          at(ds, a, b) = ns;
        }
      }
    }
  }
  for (int a = 0; a < k; ++a) {
    const double cw = at(dw, a, a);
    if (cw > 0.0 || (cw == 0.0 && at(ds, a, a) > 0.0)) {
      return {false, {}, {}, {}};
    }
  }

  // Longest path from a virtual source with zero edges to every node. The
  // edge-count component hands every tight constraint a positive margin in
  // the witness, so no region assignment rides on an exact floating tie.
  std::vector<double> pw(k, 0.0), ps(k, 0.0), pe(k, 0.0);
  for (int round = 0; round < k + 1; ++round) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        const double ew = gaps.w[static_cast<std::size_t>(a) * k + b];
        if (ew == -kInf) continue;
        const double nw = pw[a] + ew;
        const double ns = ps[a] + gaps.s[static_cast<std::size_t>(a) * k + b];
        const double ne = pe[a] + 1.0;
        if (nw > pw[b] || (nw == pw[b] && ns > ps[b]) ||
            (nw == pw[b] && ns == ps[b] && ne > pe[b])) {
          pw[b] = nw;
          ps[b] = ns;
          pe[b] = ne;
        }
      }
    }
  }
  return {true, std::move(pw), std::move(ps), std::move(pe)};
}

GapMatrix build_gaps(std::span<const std::vector<double>> forecasts,
                     std::span<const int> labels, int k) {
  GapMatrix gaps(k);
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    const int a = labels[i];
    const auto& p = forecasts[i];
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      const double gap = p[b] - p[a];
      if (gap > gaps.weight(a, b)) gaps.weight(a, b) = gap;
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      if (gaps.weight(a, b) != -kInf && b < a) gaps.strict(a, b) = 1;
    }
  }
  return gaps;
}

}  // namespace

bool gaps_feasible(std::span<const double> gaps, int k) {
  GapMatrix m(k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double v = gaps[static_cast<std::size_t>(a) * k + b];
      if (a == b || v == -kInf) continue;
      m.weight(a, b) = v;
      if (b < a) m.strict(a, b) = 1;
    }
  }
  return solve_gaps(m).feasible;
}

RealizeResult realize_partition(std::span<const std::vector<double>> forecasts,
                                std::span<const int> labels, int k,
                                bool want_witness) {
  if (forecasts.size() != labels.size()) {
    throw ContractError("realize_partition: length mismatch");
  }
  const GapMatrix gaps = build_gaps(forecasts, labels, k);
  const Feasibility f = solve_gaps(gaps);
  RealizeResult out;
  out.feasible = f.feasible;
  if (!f.feasible || !want_witness) return out;

  // smallest positive slack bounds how far the margin terms may push
  double min_gap = kInf;
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double ew = gaps.w[static_cast<std::size_t>(a) * k + b];
      if (ew == -kInf) continue;
      const double slack = f.potential_w[b] - f.potential_w[a] - ew;
      if (slack > 0.0 && slack < min_gap) min_gap = slack;
    }
  }
  const double cap = (min_gap == kInf) ? 1e-3 : min_gap / (4.0 * k);
  for (double eps : {cap, 1e-4, 1e-7, 1e-10}) {
    if (eps > cap || eps <= 0.0) continue;
    const double eps2 = eps / (4.0 * k);
    std::vector<double> gcoords(k);
    for (int b = 0; b < k; ++b) {
      gcoords[b] =
          f.potential_w[b] + eps * f.potential_s[b] + eps2 * f.potential_e[b];
    }
    double sum = 0.0;
    for (double v : gcoords) sum += v;
    const double shift = (sum - 1.0) / k;
    for (double& v : gcoords) v -= shift;
    AffineThreshold cand(gcoords);
    bool ok = true;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
      if (assign_region(forecasts[i], cand) != labels[i]) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.witness = std::move(cand);
      return out;
    }
  }
  return out;  // feasible, but no floating-point witness found
}

bool is_roc_monotone(std::span<const std::vector<double>> raw,
                     std::span<const std::vector<double>> calibrated,
                     std::span<const AffineThreshold> gammas) {
  if (raw.size() != calibrated.size()) {
    throw ContractError("is_roc_monotone: forecast sets differ in length");
  }
  if (gammas.empty()) throw ContractError("is_roc_monotone: no thresholds given");
  const int k = gammas.front().k();
  std::vector<int> labels(raw.size());
  for (const auto& gamma : gammas) {
    for (std::size_t i = 0; i < calibrated.size(); ++i) {
      labels[i] = assign_region(calibrated[i], gamma);
    }
    if (!realize_partition(raw, labels, k, /*want_witness=*/false).feasible) {
      return false;
    }
  }
  return true;
}

std::vector<std::optional<AffineThreshold>> matched_thresholds(
    std::span<const std::vector<double>> raw,
    std::span<const std::vector<double>> calibrated,
    std::span<const AffineThreshold> gammas) {
  const int k = gammas.empty() ? 0 : gammas.front().k();
  std::vector<std::optional<AffineThreshold>> out;
  std::vector<int> labels(raw.size());
  for (const auto& gamma : gammas) {
    for (std::size_t i = 0; i < calibrated.size(); ++i) {
      labels[i] = assign_region(calibrated[i], gamma);
    }
    auto res = realize_partition(raw, labels, k, /*want_witness=*/true);
    out.push_back(res.feasible ? res.witness : std::nullopt);
  }
  return out;
}

std::string roc_to_csv(const RocGraph& g) {
  std::ostringstream out;
  for (int c = 1; c <= g.k; ++c) out << "coord" << c << ",";
  for (int c = 1; c <= g.k; ++c) out << "gamma" << c << (c == g.k ? '\n' : ',');
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int c = 0; c < g.k; ++c) out << format_double(g.points[i][c]) << ",";
    for (int c = 0; c < g.k; ++c) {
      out << format_double(g.thresholds[i].coords[c]) << (c + 1 == g.k ? '\n' : ',');
    }
  }
  return out.str();
}

}  // namespace calib

#include "calib/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "calib/dataset_io.hpp"
#include "calib/metrics.hpp"
#include "calib/roc.hpp"
#include "calib/simplex.hpp"

namespace calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RegionCand {
  double m = 0.0;
  std::vector<double> coords;
};

struct OpenRegion {
  int node_id = 0;
  std::vector<std::size_t> indices;
  bool evaluated = false;
  std::vector<RegionCand> cands;  // descending m, ties by ascending coords
};

// Evaluation of one candidate split of a region: per-child membership,
// weighted means, masses, and the criterion value.
struct SplitEval {
  std::vector<std::vector<std::size_t>> child_idx;
  std::vector<std::vector<double>> child_mean;
  std::vector<double> child_mass;
  int nonempty = 0;
  double m = 0.0;
};

class Engine {
 public:
  Engine(const Dataset& ds, const FitOptions& opt, bool monotone)
      : ds_(ds), opt_(opt), monotone_(monotone), k_(ds.k), n_(ds.size()) {
    if (n_ == 0) throw ContractError("fit: empty dataset");
    if (k_ < 2) throw ContractError("fit: need K >= 2");
    model_.k = k_;
    model_.alpha = opt.alpha;
    fc_.resize(n_);
    weights_.resize(n_);
    labels_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      fc_[i] = ds.samples[i].p;
      weights_[i] = ds.samples[i].weight;
      labels_[i] = ds.samples[i].label;
    }
    if (opt.lattice_step > 0.0) {
      lattice_ = default_threshold_grid(ds, opt.lattice_step);
    }
  }

  SimplexPartitionModel run() {
    std::vector<std::size_t> all(n_);
    std::iota(all.begin(), all.end(), 0);
    const int root = make_leaf(all, 0);
    sample_leaf_.assign(n_, root);
    live_leaves_.push_back(root);

    std::vector<OpenRegion> open;
    open.push_back(OpenRegion{root, std::move(all), false, {}});

    std::size_t iter = 0;
    while (true) {
      if (opt_.max_leaves > 0 && live_leaves_.size() >= opt_.max_leaves) break;
      for (auto& r : open) {
        if (!r.evaluated) evaluate_region(r);
      }
      std::erase_if(open, [](const OpenRegion& r) { return r.cands.empty(); });
      if (open.empty()) break;

      std::size_t best = 0;
      for (std::size_t i = 1; i < open.size(); ++i) {
        const double mi = open[i].cands.front().m;
        const double mb = open[best].cands.front().m;
        if (mi > mb || (mi == mb && open[i].node_id < open[best].node_id)) best = i;
      }
      OpenRegion region = std::move(open[best]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(best));

      SplitEval chosen;
      std::vector<double> chosen_coords;
      if (find_split(region, chosen, chosen_coords)) {
        ++iter;
        apply_split(region, chosen, chosen_coords, iter, open);
      }
      // no admissible split: the region is closed and stays a leaf
    }
    return std::move(model_);
  }

 private:
  int make_leaf(const std::vector<std::size_t>& indices, std::size_t created_at) {
    PartitionNode node;
    node.created_at = created_at;
    node.count = indices.size();
    std::vector<double> label_mass(k_, 0.0);
    for (std::size_t i : indices) {
      node.mass += weights_[i];
      label_mass[labels_[i]] += weights_[i];
    }
    node.raw_mean.resize(k_);
    node.value.resize(k_);
    for (int c = 0; c < k_; ++c) {
      node.raw_mean[c] = label_mass[c] / node.mass;
      node.value[c] = (label_mass[c] + opt_.alpha) / (node.mass + opt_.alpha * k_);
    }
    model_.nodes.push_back(std::move(node));

    // gap matrix: entry [r][b] = max over members of p[b] - p[r]
    std::vector<double> gaps(static_cast<std::size_t>(k_) * k_, -kInf);
    for (std::size_t i : indices) {
      const auto& p = fc_[i];
      for (int r = 0; r < k_; ++r) {
        for (int b = 0; b < k_; ++b) {
          if (b == r) continue;
          double& slot = gaps[static_cast<std::size_t>(r) * k_ + b];
          const double gap = p[b] - p[r];
          if (gap > slot) slot = gap;
        }
      }
    }
    node_gaps_.push_back(std::move(gaps));
    return static_cast<int>(model_.nodes.size()) - 1;
  }

  int make_empty_leaf(int parent_id, std::size_t created_at) {
    PartitionNode node;
    node.created_at = created_at;
    node.count = 0;
    node.mass = 0.0;
    // a future forecast routed here falls back to the parent's estimate
    node.raw_mean = model_.nodes[parent_id].raw_mean;
    node.value = model_.nodes[parent_id].value;
    model_.nodes.push_back(std::move(node));
    node_gaps_.emplace_back(static_cast<std::size_t>(k_) * k_, -kInf);
    return static_cast<int>(model_.nodes.size()) - 1;
  }

  SplitEval eval_split(const std::vector<std::size_t>& indices,
                       const std::vector<double>& coords) const {
    SplitEval ev;
    ev.child_idx.resize(k_);
    ev.child_mean.assign(k_, std::vector<double>(k_, 0.0));
    ev.child_mass.assign(k_, 0.0);
    const AffineThreshold gamma(coords);
    for (std::size_t i : indices) {
      const int r = assign_region(fc_[i], gamma);
      ev.child_idx[r].push_back(i);
      ev.child_mass[r] += weights_[i];
      ev.child_mean[r][labels_[i]] += weights_[i];
    }
    return ev;
  }

  void finish_eval(SplitEval& ev, const std::vector<double>& parent_mean) const {
    for (int c = 0; c < k_; ++c) {
      if (ev.child_mass[c] <= 0.0) continue;
      ++ev.nonempty;
      double l1 = 0.0;
      for (int j = 0; j < k_; ++j) {
        ev.child_mean[c][j] /= ev.child_mass[c];
        l1 += std::abs(parent_mean[j] - ev.child_mean[c][j]);
      }
      ev.m += ev.child_mass[c] * l1;
    }
  }

  void evaluate_region(OpenRegion& r) {
    r.evaluated = true;
    std::map<std::vector<double>, bool> seen;
    std::vector<std::vector<double>> coords;
    if (opt_.data_candidates) {
      for (std::size_t i : r.indices) {
        if (seen.emplace(fc_[i], true).second) coords.push_back(fc_[i]);
      }
    }
    for (const auto& g : lattice_) {
      if (route(g.coords, SIZE_MAX) != r.node_id) continue;
      if (seen.emplace(g.coords, true).second) coords.push_back(g.coords);
    }

    const auto& parent_mean = model_.nodes[r.node_id].raw_mean;
    std::vector<double> ms(coords.size(), 0.0);
    auto eval_one = [&](std::size_t c) {
      SplitEval ev = eval_split(r.indices, coords[c]);
      finish_eval(ev, parent_mean);
      ms[c] = (ev.nonempty >= 2 && ev.m > 0.0) ? ev.m : -1.0;
    };
    if (opt_.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 8)
      for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(coords.size()); ++c) {
        eval_one(static_cast<std::size_t>(c));
      }
    } else {
      for (std::size_t c = 0; c < coords.size(); ++c) eval_one(c);
    }

    for (std::size_t c = 0; c < coords.size(); ++c) {
      if (ms[c] > 0.0) r.cands.push_back(RegionCand{ms[c], std::move(coords[c])});
    }
    std::sort(r.cands.begin(), r.cands.end(), [](const RegionCand& a, const RegionCand& b) {
      if (a.m != b.m) return a.m > b.m;
      return a.coords < b.coords;
    });
  }

  // Admissibility: with the candidate applied, every probe threshold must
  // induce a partition of the calibration samples that some raw threshold
  // reproduces. Probes are the introduced thresholds, the candidate, and the
  // distinct calibrated values.
  bool admissible(const OpenRegion& region, const std::vector<double>& cand_coords,
                  const SplitEval& ev) const {
    struct HypLeaf {
      const double* mean;
      const double* gaps;
    };
    std::vector<HypLeaf> leaves;
    leaves.reserve(live_leaves_.size() + static_cast<std::size_t>(k_));
    for (int id : live_leaves_) {
      if (id == region.node_id) continue;
      leaves.push_back({model_.nodes[id].raw_mean.data(), node_gaps_[id].data()});
    }
    std::vector<std::vector<double>> child_gaps(k_);
    for (int c = 0; c < k_; ++c) {
      if (ev.child_mass[c] <= 0.0) continue;
      child_gaps[c].assign(static_cast<std::size_t>(k_) * k_, -kInf);
      for (std::size_t i : ev.child_idx[c]) {
        const auto& p = fc_[i];
        for (int r = 0; r < k_; ++r) {
          for (int b = 0; b < k_; ++b) {
            if (b == r) continue;
            double& slot = child_gaps[c][static_cast<std::size_t>(r) * k_ + b];
            const double gap = p[b] - p[r];
            if (gap > slot) slot = gap;
          }
        }
      }
      leaves.push_back({ev.child_mean[c].data(), child_gaps[c].data()});
    }

    std::set<std::vector<double>> probes;
    for (const auto& g : introduced_) probes.insert(g.coords);
    probes.insert(cand_coords);
    // For K=2 the unrestricted monotony criterion is tractable: probing at
    // every calibrated value decides order preservation exactly, which is
    // what makes the binary algorithm coincide with isotonic regression.
    // In higher dimensions that criterion rejects nearly every split, so the
    // check stays on the splitting points.
    if (k_ == 2) {
      for (const auto& leaf : leaves) {
        probes.insert(std::vector<double>(leaf.mean, leaf.mean + k_));
      }
    }

    std::vector<double> agg(static_cast<std::size_t>(k_) * k_);
    for (const auto& probe : probes) {
      std::fill(agg.begin(), agg.end(), -kInf);
      for (const auto& leaf : leaves) {
        int r = 0;
        double best = leaf.mean[0] - probe[0];
        for (int j = 1; j < k_; ++j) {
          const double v = leaf.mean[j] - probe[j];
          if (v > best) {
            best = v;
            r = j;
          }
        }
        for (int b = 0; b < k_; ++b) {
          if (b == r) continue;
          const double g = leaf.gaps[static_cast<std::size_t>(r) * k_ + b];
          double& slot = agg[static_cast<std::size_t>(r) * k_ + b];
          if (g > slot) slot = g;
        }
      }
      if (!gaps_feasible(agg, k_)) return false;
    }
    return true;
  }

  bool find_split(const OpenRegion& region, SplitEval& out,
                  std::vector<double>& out_coords) {
    const auto& parent_mean = model_.nodes[region.node_id].raw_mean;
    if (!monotone_) {
      const auto& cand = region.cands.front();
      out = eval_split(region.indices, cand.coords);
      finish_eval(out, parent_mean);
      out_coords = cand.coords;
      return true;
    }
    constexpr std::size_t kBlock = 32;
    for (std::size_t start = 0; start < region.cands.size(); start += kBlock) {
      const std::size_t stop = std::min(start + kBlock, region.cands.size());
      std::vector<SplitEval> evals(stop - start);
      std::vector<char> ok(stop - start, 0);
      auto check_one = [&](std::size_t t) {
        evals[t - start] = eval_split(region.indices, region.cands[t].coords);
        finish_eval(evals[t - start], parent_mean);
        ok[t - start] = admissible(region, region.cands[t].coords, evals[t - start]) ? 1 : 0;
      };
      if (opt_.exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t t = static_cast<std::ptrdiff_t>(start);
             t < static_cast<std::ptrdiff_t>(stop); ++t) {
          check_one(static_cast<std::size_t>(t));
        }
      } else {
        for (std::size_t t = start; t < stop; ++t) check_one(t);
      }
      for (std::size_t t = start; t < stop; ++t) {
        if (ok[t - start]) {
          out = std::move(evals[t - start]);
          out_coords = region.cands[t].coords;
          return true;
        }
      }
    }
    return false;
  }

  void apply_split(const OpenRegion& region, SplitEval& ev,
                   const std::vector<double>& coords, std::size_t iter,
                   std::vector<OpenRegion>& open) {
    const int parent = region.node_id;
    std::vector<int> children(k_);
    for (int c = 0; c < k_; ++c) {
      if (ev.child_mass[c] > 0.0) {
        children[c] = make_leaf(ev.child_idx[c], iter);
      } else {
        children[c] = make_empty_leaf(parent, iter);
      }
    }
    PartitionNode& pn = model_.nodes[parent];
    pn.is_split = true;
    pn.expanded_at = iter;
    pn.gamma = AffineThreshold(coords);
    pn.children = children;

    std::erase(live_leaves_, parent);
    for (int c = 0; c < k_; ++c) {
      if (ev.child_mass[c] <= 0.0) continue;
      live_leaves_.push_back(children[c]);
      for (std::size_t i : ev.child_idx[c]) sample_leaf_[i] = children[c];
      open.push_back(OpenRegion{children[c], std::move(ev.child_idx[c]), false, {}});
    }
    introduced_.push_back(AffineThreshold(coords));
    model_.split_log.push_back(SplitLogEntry{iter, parent, AffineThreshold(coords),
                                             /*criterion=*/ev.m});
  }

  int route(const std::vector<double>& p, std::size_t cutoff) const {
    int id = 0;
    while (model_.nodes[id].is_split && model_.nodes[id].expanded_at <= cutoff) {
      const int r = assign_region(p, model_.nodes[id].gamma);
      id = model_.nodes[id].children[r];
    }
    return id;
  }

  const Dataset& ds_;
  FitOptions opt_;
  bool monotone_;
  int k_;
  std::size_t n_;
  std::vector<std::vector<double>> fc_;
  std::vector<double> weights_;
  std::vector<int> labels_;
  std::vector<AffineThreshold> lattice_;

  SimplexPartitionModel model_;
  std::vector<std::vector<double>> node_gaps_;
  std::vector<int> sample_leaf_;
  std::vector<int> live_leaves_;
  std::vector<AffineThreshold> introduced_;
};

}  // namespace

double split_criterion(const Dataset& ds, std::span<const std::size_t> indices,
                       const AffineThreshold& gamma) {
  if (indices.empty()) throw ContractError("split_criterion: empty region");
  std::vector<double> parent_mean(ds.k, 0.0);
  double parent_mass = 0.0;
  for (std::size_t i : indices) {
    parent_mass += ds.samples[i].weight;
    parent_mean[ds.samples[i].label] += ds.samples[i].weight;
  }
  for (double& v : parent_mean) v /= parent_mass;

  std::vector<std::vector<double>> child_mean(ds.k, std::vector<double>(ds.k, 0.0));
  std::vector<double> child_mass(ds.k, 0.0);
  for (std::size_t i : indices) {
    const int r = assign_region(ds.samples[i].p, gamma);
    child_mass[r] += ds.samples[i].weight;
    child_mean[r][ds.samples[i].label] += ds.samples[i].weight;
  }
  double m = 0.0;
  for (int c = 0; c < ds.k; ++c) {
    if (child_mass[c] <= 0.0) continue;
    double l1 = 0.0;
    for (int j = 0; j < ds.k; ++j) {
      l1 += std::abs(parent_mean[j] - child_mean[c][j] / child_mass[c]);
    }
    m += child_mass[c] * l1;
  }
  return m;
}

SimplexPartitionModel fit_mc_irp(const Dataset& ds, const FitOptions& options) {
  return Engine(ds, options, /*monotone=*/true).run();
}

SimplexPartitionModel fit_recursive_bins(const Dataset& ds, const FitOptions& options) {
  return Engine(ds, options, /*monotone=*/false).run();
}

IsotonicModel fit_fixed_bins(const Dataset& ds, int m, double alpha) {
  if (ds.k != 2) throw ContractError("fixed-bins: dataset must be binary");
  if (m < 1) throw ContractError("fixed-bins: need at least one bin");
  std::vector<double> mass(m, 0.0), hit(m, 0.0);
  std::vector<std::size_t> counts(m, 0);
  for (const auto& s : ds.samples) {
    int b = static_cast<int>(std::floor(s.p[1] * m));
    b = std::clamp(b, 0, m - 1);
    mass[b] += s.weight;
    if (s.label == 1) hit[b] += s.weight;
    counts[b] += 1;
  }
  IsotonicModel model;
  model.boundaries.push_back(-kInf);
  for (int b = 1; b < m; ++b) {
    model.boundaries.push_back(static_cast<double>(b) / m);
  }
  model.boundaries.push_back(kInf);
  for (int b = 0; b < m; ++b) {
    if (counts[b] == 0) {
      model.values.push_back((b + 0.5) / m);  // empty bin: center
    } else {
      model.values.push_back((hit[b] + alpha) / (mass[b] + 2.0 * alpha));
    }
    model.counts.push_back(counts[b]);
  }
  return model;
}

std::vector<double> apply_model(const SimplexPartitionModel& model,
                                std::span<const double> p, std::size_t cutoff) {
  return model.nodes[leaf_id(model, p, cutoff)].value;
}

int leaf_id(const SimplexPartitionModel& model, std::span<const double> p,
            std::size_t cutoff) {
  if (static_cast<int>(p.size()) != model.k) {
    throw ContractError("apply: forecast has dimension " + std::to_string(p.size()) +
                        ", model expects " + std::to_string(model.k));
  }
  int id = 0;
  while (model.nodes[id].is_split && model.nodes[id].expanded_at <= cutoff) {
    const int r = assign_region(p, model.nodes[id].gamma);
    id = model.nodes[id].children[r];
  }
  return id;
}

std::size_t leaf_count(const SimplexPartitionModel& model, std::size_t cutoff) {
  std::size_t leaves = 0;
  for (const auto& node : model.nodes) {
    if (node.count == 0) continue;
    if (node.created_at > cutoff) continue;
    if (node.is_split && node.expanded_at <= cutoff) continue;
    ++leaves;
  }
  return leaves;
}

double ece_by_leaf(const SimplexPartitionModel& model,
                   std::span<const std::vector<double>> forecasts,
                   std::span<const int> labels, std::span<const double> weights) {
  std::vector<int> groups(forecasts.size());
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    groups[i] = leaf_id(model, forecasts[i]);
  }
  return ece_grouped(groups, forecasts, labels, weights, model.k);
}

std::vector<AffineThreshold> introduced_thresholds(const SimplexPartitionModel& model) {
  std::vector<AffineThreshold> out;
  out.reserve(model.split_log.size());
  for (const auto& e : model.split_log) out.push_back(e.gamma);
  return out;
}

std::string split_log_to_csv(const SimplexPartitionModel& model) {
  std::ostringstream out;
  out << "iteration,region,m";
  for (int c = 1; c <= model.k; ++c) out << ",gamma" << c;
  out << "\n";
  for (const auto& e : model.split_log) {
    out << e.iteration << "," << e.region_id << "," << format_double(e.criterion);
    for (double v : e.gamma.coords) out << "," << format_double(v);
    out << "\n";
  }
  return out.str();
}

}  // namespace calib

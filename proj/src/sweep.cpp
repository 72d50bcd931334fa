#include "calib/sweep.hpp"

#include <algorithm>
#include <sstream>

#include "calib/dataset_io.hpp"
#include "calib/metrics.hpp"
#include "calib/model_io.hpp"
#include "calib/partition.hpp"
#include "calib/pav.hpp"
#include "calib/simplex.hpp"

namespace calib {

namespace {

struct EvalSet {
  std::vector<std::vector<double>> forecasts;  // filled per row
  std::vector<int> labels;
  std::vector<double> weights;
  const Dataset* ds;
};

EvalSet make_eval_set(const Dataset& ds) {
  EvalSet s;
  s.ds = &ds;
  s.forecasts.resize(ds.size());
  s.labels.resize(ds.size());
  s.weights.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    s.labels[i] = ds.samples[i].label;
    s.weights[i] = ds.samples[i].weight;
  }
  return s;
}

double performance(const EvalSet& s, int k,
                   std::span<const AffineThreshold> vus_thresholds,
                   std::size_t vus_samples, std::uint64_t seed, Exec exec) {
  if (k == 2) {
    std::vector<double> scores(s.forecasts.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = s.forecasts[i][1];
    return auc(sroc_curve(scores, s.labels, s.weights));
  }
  const RocGraph g = roc_surface(s.forecasts, s.labels, s.weights, k,
                                 vus_thresholds, exec);
  return vus(g, vus_samples, seed, exec).value;
}

std::string fmt_ce(const CrossEntropyResult& ce, bool regularized) {
  const bool finite = regularized ? ce.h_reg_finite : ce.h_finite;
  if (!finite) return "inf";
  return format_double(regularized ? ce.h_reg : ce.h);
}

}  // namespace

std::string run_sweep(const Dataset& calib_set, const Dataset& test_set,
                      const SweepOptions& options) {
  if (calib_set.k != test_set.k) {
    throw ContractError("sweep: calibration and test sets disagree on K");
  }
  const int k = calib_set.k;
  const double lambda = options.alpha / static_cast<double>(calib_set.size());

  std::vector<std::size_t> grid = options.leaves_grid;
  if (grid.empty()) grid = {1, 2, 4, 8, 16, 32, 64};
  std::sort(grid.begin(), grid.end());

  EvalSet cal = make_eval_set(calib_set);
  EvalSet tst = make_eval_set(test_set);

  // The calibrated surface is evaluated at the model's own operating points:
  // the thresholds it introduced plus the trivial corners.
  std::vector<AffineThreshold> corners;
  if (k >= 3) {
    for (int c = 0; c < k; ++c) corners.push_back(corner_threshold(c, k));
  }

  std::ostringstream out;
  out << "method,n_bins,calib_ce_reg,test_ce,calib_auc_or_vus,test_auc_or_vus\n";

  auto emit_row = [&](const std::string& method, std::size_t n_bins,
                      std::span<const AffineThreshold> introduced) {
    std::vector<AffineThreshold> vus_thr = corners;
    vus_thr.insert(vus_thr.end(), introduced.begin(), introduced.end());
    const auto ce_cal = cross_entropy(cal.forecasts, cal.labels, cal.weights, lambda);
    const auto ce_tst = cross_entropy(tst.forecasts, tst.labels, tst.weights, 0.0);
    const double perf_cal = performance(cal, k, vus_thr, options.vus_samples,
                                        options.seed, options.exec);
    const double perf_tst = performance(tst, k, vus_thr, options.vus_samples,
                                        options.seed, options.exec);
    out << method << "," << n_bins << "," << fmt_ce(ce_cal, true) << ","
        << fmt_ce(ce_tst, false) << "," << format_double(perf_cal) << ","
        << format_double(perf_tst) << "\n";
  };

  for (const std::string& method : options.methods) {
    if (method == "mc-irp" || method == "recursive-bins") {
      FitOptions fo;
      fo.alpha = options.alpha;
      fo.exec = options.exec;
      fo.max_leaves = (method == "recursive-bins") ? grid.back() : 0;
      const SimplexPartitionModel model = (method == "mc-irp")
                                              ? fit_mc_irp(calib_set, fo)
                                              : fit_recursive_bins(calib_set, fo);
      const auto gammas = introduced_thresholds(model);
      // binary forecasts are canonically (1-v, v) so that methods producing
      // the same model produce byte-identical rows
      auto emit_forecast = [k](const std::vector<double>& value) {
        if (k == 2) return std::vector<double>{1.0 - value[1], value[1]};
        return value;
      };
      for (std::size_t t = 0; t <= model.splits(); ++t) {
        for (std::size_t i = 0; i < calib_set.size(); ++i) {
          cal.forecasts[i] = emit_forecast(apply_model(model, calib_set.samples[i].p, t));
        }
        for (std::size_t i = 0; i < test_set.size(); ++i) {
          tst.forecasts[i] = emit_forecast(apply_model(model, test_set.samples[i].p, t));
        }
        emit_row(method, leaf_count(model, t),
                 std::span<const AffineThreshold>(gammas.data(), t));
      }
    } else if (method == "fixed-bins") {
      for (std::size_t m : grid) {
        const IsotonicModel model =
            fit_fixed_bins(calib_set, static_cast<int>(m), options.alpha);
        for (std::size_t i = 0; i < calib_set.size(); ++i) {
          const double v = pav_predict(model, calib_set.samples[i].p[1]);
          cal.forecasts[i] = {1.0 - v, v};
        }
        for (std::size_t i = 0; i < test_set.size(); ++i) {
          const double v = pav_predict(model, test_set.samples[i].p[1]);
          tst.forecasts[i] = {1.0 - v, v};
        }
        emit_row(method, m, {});
      }
    } else {
      throw InputError("sweep: unknown method '" + method + "'");
    }
  }
  return out.str();
}

}  // namespace calib

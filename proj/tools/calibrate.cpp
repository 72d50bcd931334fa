#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "calib/dataset_io.hpp"
#include "calib/metrics.hpp"
#include "calib/model_io.hpp"
#include "calib/partition.hpp"
#include "calib/pav.hpp"
#include "calib/roc.hpp"
#include "calib/simplex.hpp"
#include "calib/sweep.hpp"

namespace {

using namespace calib;

std::string iso_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CALIB_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct ForecastTable {
  std::vector<std::vector<double>> rows;
  int k = 0;
};

// `apply` accepts both dataset files (p1..pK,y) and bare forecast tables.
ForecastTable load_points(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) throw InputError(path + ": cannot open file");
  std::string header;
  std::getline(probe, header);
  probe.close();
  ForecastTable t;
  if (header.rfind("r1", 0) == 0) {
    t.rows = load_forecasts_csv(path);
    t.k = static_cast<int>(t.rows.front().size());
  } else {
    const Dataset ds = load_csv(path);
    t.k = ds.k;
    for (const auto& s : ds.samples) t.rows.push_back(s.p);
  }
  return t;
}

MetricsReport evaluate_forecasts(const std::vector<std::vector<double>>& forecasts,
                                 const Dataset& labels_ds, int bins, double lambda,
                                 std::size_t vus_samples, double lattice_step,
                                 std::uint64_t seed) {
  if (forecasts.size() != labels_ds.size()) {
    throw InputError("eval: forecast rows (" + std::to_string(forecasts.size()) +
                     ") and label rows (" + std::to_string(labels_ds.size()) +
                     ") are misaligned");
  }
  const int k = static_cast<int>(forecasts.front().size());
  if (k != labels_ds.k) {
    throw ContractError("eval: forecasts have K=" + std::to_string(k) +
                        " but labels have K=" + std::to_string(labels_ds.k));
  }
  std::vector<int> labels(labels_ds.size());
  std::vector<double> weights(labels_ds.size());
  for (std::size_t i = 0; i < labels_ds.size(); ++i) {
    labels[i] = labels_ds.samples[i].label;
    weights[i] = labels_ds.samples[i].weight;
  }

  std::map<std::vector<double>, bool> distinct;
  for (const auto& row : forecasts) distinct.emplace(row, true);
  const bool discrete = distinct.size() < forecasts.size();

  MetricsReport report;
  report.k = k;
  report.n_bins_or_leaves = distinct.size();
  if (discrete || k > 2) {
    report.ece = ece_discrete(forecasts, labels, weights, k);
  } else {
    report.ece = ece_binned(forecasts, labels, weights, bins);
  }
  const auto ce = cross_entropy(forecasts, labels, weights, lambda);
  report.cross_entropy = ce.h;
  report.regularized_cross_entropy = ce.h_reg;
  report.ce_finite = ce.h_finite;
  report.ce_reg_finite = ce.h_reg_finite;

  if (k == 2) {
    std::vector<double> scores(forecasts.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = forecasts[i][1];
    report.auc_or_vus = auc(sroc_curve(scores, labels, weights));
  } else {
    std::vector<AffineThreshold> thresholds = lattice_thresholds(k, lattice_step);
    std::map<std::vector<double>, bool> seen;
    for (const auto& g : thresholds) seen.emplace(g.coords, true);
    for (const auto& [row, unused] : distinct) {
      double s = 0.0;
      for (double v : row) s += v;
      if (std::abs(s - 1.0) <= kSimplexTol && seen.emplace(row, true).second) {
        thresholds.push_back(AffineThreshold(row));
      }
    }
    const RocGraph g = roc_surface(forecasts, labels, weights, k, thresholds);
    report.auc_or_vus = vus(g, vus_samples, seed).value;
  }
  return report;
}

struct FitArgs {
  std::string method;
  std::string input;
  std::string output;
  std::string split_log;
  double alpha = 1.0;
  std::size_t max_leaves = 0;
  double lattice_step = 0.0;
  int bins = 10;
  std::uint64_t seed = default_seed();
};

int run_fit(const FitArgs& args) {
  const Dataset ds = load_csv(args.input);
  ModelFile mf;
  mf.method = args.method;
  mf.k = ds.k;
  mf.alpha = args.alpha;
  mf.n = ds.size();
  mf.seed = args.seed;
  mf.candidate_source =
      args.lattice_step > 0.0
          ? "data+lattice(" + format_double(args.lattice_step) + ")"
          : "data";
  mf.timestamp = iso_timestamp();

  if (args.method == "pav") {
    if (ds.k != 2) {
      throw ContractError("fit: method pav requires K=2, input has K=" +
                          std::to_string(ds.k));
    }
    std::vector<double> scores(ds.size()), targets(ds.size()), weights(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      scores[i] = ds.samples[i].p[1];
      targets[i] = ds.samples[i].label == 1 ? 1.0 : 0.0;
      weights[i] = ds.samples[i].weight;
    }
    mf.binned = pav_fit(scores, targets, weights);
    mf.candidate_source = "scores";
  } else if (args.method == "fixed-bins") {
    mf.binned = fit_fixed_bins(ds, args.bins, args.alpha);
    mf.candidate_source = "regular(" + std::to_string(args.bins) + ")";
  } else if (args.method == "mc-irp" || args.method == "recursive-bins") {
    FitOptions fo;
    fo.alpha = args.alpha;
    fo.max_leaves = args.max_leaves;
    fo.lattice_step = args.lattice_step;
    mf.partition = (args.method == "mc-irp") ? fit_mc_irp(ds, fo)
                                             : fit_recursive_bins(ds, fo);
  } else {
    throw InputError("fit: unknown method '" + args.method + "'");
  }
  save_model(mf, args.output);
  if (!args.split_log.empty()) {
    if (!mf.partition.has_value()) {
      throw ContractError("fit: --split-log applies to mc-irp and recursive-bins");
    }
    std::ofstream log(args.split_log);
    if (!log) throw InputError(args.split_log + ": cannot open for writing");
    log << split_log_to_csv(*mf.partition);
  }

  std::vector<std::vector<double>> calibrated(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    calibrated[i] = apply_model_file(mf, ds.samples[i].p);
  }
  // pav takes no smoothing, so its summary reports the plain cross entropy
  const double lambda =
      args.method == "pav" ? 0.0 : args.alpha / static_cast<double>(ds.size());
  MetricsReport report = evaluate_forecasts(calibrated, ds, kDefaultEceBins, lambda,
                                            20000, kDefaultLatticeStep, args.seed);
  report.n_bins_or_leaves = model_bins(mf);

  nlohmann::json summary = nlohmann::json::parse(report.to_json());
  summary["method"] = args.method;
  summary["n"] = ds.size();
  summary["model"] = args.output;
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_apply(const std::string& model_path, const std::string& input,
              const std::string& output) {
  const ModelFile mf = load_model(model_path);
  const ForecastTable in = load_points(input);
  if (in.k != mf.k) {
    throw ContractError("apply: input has K=" + std::to_string(in.k) +
                        " but model expects K=" + std::to_string(mf.k));
  }
  std::vector<std::vector<double>> out;
  out.reserve(in.rows.size());
  for (const auto& row : in.rows) out.push_back(apply_model_file(mf, row));
  save_forecasts_csv(out, output);
  return 0;
}

struct RocArgs {
  std::string input;
  std::string model;
  std::string prefix = "roc_";
  double lattice_step = kDefaultLatticeStep;
};

int run_roc(const RocArgs& args) {
  const Dataset ds = load_csv(args.input);
  std::vector<AffineThreshold> grid = default_threshold_grid(ds, args.lattice_step);

  std::vector<std::vector<double>> raw(ds.size());
  std::vector<int> labels(ds.size());
  std::vector<double> weights(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    raw[i] = ds.samples[i].p;
    labels[i] = ds.samples[i].label;
    weights[i] = ds.samples[i].weight;
  }

  if (args.model.empty()) {
    const RocGraph g = roc_surface(raw, labels, weights, ds.k, grid);
    std::ofstream out(args.prefix + "raw.csv");
    out << roc_to_csv(g);
    return 0;
  }

  const ModelFile mf = load_model(args.model);
  if (mf.k != ds.k) {
    throw ContractError("roc: input has K=" + std::to_string(ds.k) +
                        " but model expects K=" + std::to_string(mf.k));
  }
  std::vector<std::vector<double>> calibrated(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    calibrated[i] = apply_model_file(mf, ds.samples[i].p);
  }
  std::vector<AffineThreshold> introduced;
  if (mf.partition.has_value()) introduced = introduced_thresholds(*mf.partition);

  std::vector<AffineThreshold> shared = grid;
  shared.insert(shared.end(), introduced.begin(), introduced.end());

  // raw side additionally carries the thresholds matching each introduced split
  std::vector<AffineThreshold> raw_thresholds = shared;
  if (!introduced.empty()) {
    for (const auto& witness : matched_thresholds(raw, calibrated, introduced)) {
      if (witness.has_value()) raw_thresholds.push_back(*witness);
    }
  }

  const RocGraph raw_graph = roc_surface(raw, labels, weights, ds.k, raw_thresholds);
  const RocGraph cal_graph = roc_surface(calibrated, labels, weights, ds.k, shared);
  std::ofstream raw_out(args.prefix + "raw.csv");
  raw_out << roc_to_csv(raw_graph);
  std::ofstream cal_out(args.prefix + "calibrated.csv");
  cal_out << roc_to_csv(cal_graph);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability calibration by isotonic regression and recursive simplex partitioning"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit a calibration model");
  fit->add_option("--method", fit_args.method,
                  "pav | fixed-bins | mc-irp | recursive-bins")->required();
  fit->add_option("--input", fit_args.input, "calibration dataset CSV")->required();
  fit->add_option("--output", fit_args.output, "model JSON path")->required();
  fit->add_option("--alpha", fit_args.alpha, "Laplace smoothing strength");
  fit->add_option("--max-leaves", fit_args.max_leaves, "leaf cap (0: none)");
  fit->add_option("--lattice-step", fit_args.lattice_step,
                  "add lattice candidates with this step (0: data points only)");
  fit->add_option("--bins", fit_args.bins, "bin count for fixed-bins");
  fit->add_option("--seed", fit_args.seed, "seed recorded in the model metadata");
  fit->add_option("--split-log", fit_args.split_log,
                  "also write the applied splits as CSV (recursive methods)");

  std::string apply_model_path, apply_input, apply_output;
  CLI::App* apply = app.add_subcommand("apply", "Calibrate forecasts with a model");
  apply->add_option("--model", apply_model_path, "model JSON")->required();
  apply->add_option("--input", apply_input, "dataset or forecast CSV")->required();
  apply->add_option("--output", apply_output, "calibrated forecast CSV")->required();

  std::string eval_forecasts, eval_labels;
  int eval_bins = kDefaultEceBins;
  double eval_lambda = 0.0;
  double eval_step = kDefaultLatticeStep;
  std::size_t eval_vus_samples = 100000;
  std::uint64_t eval_seed = default_seed();
  CLI::App* eval = app.add_subcommand("eval", "Metrics for a forecast set");
  eval->add_option("--forecasts", eval_forecasts, "forecast CSV (r1..rK)")->required();
  eval->add_option("--labels-from", eval_labels, "dataset CSV supplying labels")->required();
  eval->add_option("--bins", eval_bins, "ECE bins for continuous binary forecasts");
  eval->add_option("--lambda", eval_lambda, "entropy regularization strength");
  eval->add_option("--vus-samples", eval_vus_samples, "Monte Carlo samples for VUS");
  eval->add_option("--lattice-step", eval_step, "lattice step for VUS thresholds");
  eval->add_option("--seed", eval_seed, "Monte Carlo seed");

  std::string sweep_methods = "mc-irp,recursive-bins";
  std::string sweep_calib, sweep_test, sweep_output;
  std::string sweep_grid = "1,2,4,8,16,32,64";
  SweepOptions sweep_opt;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Metrics per model size for several methods");
  sweep->add_option("--methods", sweep_methods, "comma list of methods");
  sweep->add_option("--calib", sweep_calib, "calibration dataset CSV")->required();
  sweep->add_option("--test", sweep_test, "test dataset CSV")->required();
  sweep->add_option("--output", sweep_output, "output CSV path")->required();
  sweep->add_option("--alpha", sweep_opt.alpha, "Laplace smoothing strength");
  sweep->add_option("--max-leaves-grid", sweep_grid,
                    "comma list: fixed-bins sizes; max caps recursive-bins");
  sweep->add_option("--vus-samples", sweep_opt.vus_samples, "Monte Carlo samples");
  sweep->add_option("--seed", sweep_opt.seed, "Monte Carlo seed");
  sweep_opt.seed = default_seed();

  std::size_t synth_n = 1000;
  int synth_k = 3;
  double synth_noise = 0.0;
  std::uint64_t synth_seed = default_seed();
  std::string synth_output;
  CLI::App* synth = app.add_subcommand("synth", "Synthetic simplex dataset");
  synth->add_option("--n", synth_n, "sample count");
  synth->add_option("--k", synth_k, "class count");
  synth->add_option("--noise", synth_noise, "label flip probability");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--output", synth_output, "dataset CSV path")->required();

  RocArgs roc_args;
  CLI::App* roc_cmd = app.add_subcommand("roc", "ROC graph CSVs for plotting");
  roc_cmd->add_option("--input", roc_args.input, "dataset CSV")->required();
  roc_cmd->add_option("--model", roc_args.model, "model JSON (adds calibrated graph)");
  roc_cmd->add_option("--lattice-step", roc_args.lattice_step, "threshold lattice step");
  roc_cmd->add_option("--output-prefix", roc_args.prefix, "prefix for output CSVs");

  try {
    app.parse(argc, argv);
    if (fit->parsed()) return run_fit(fit_args);
    if (apply->parsed()) return run_apply(apply_model_path, apply_input, apply_output);
    if (eval->parsed()) {
      const auto forecasts = load_forecasts_csv(eval_forecasts);
      const Dataset labels = load_csv(eval_labels);
      const MetricsReport report =
          evaluate_forecasts(forecasts, labels, eval_bins, eval_lambda,
                             eval_vus_samples, eval_step, eval_seed);
      std::cout << report.to_json() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      sweep_opt.methods = split_list(sweep_methods);
      sweep_opt.leaves_grid.clear();
      for (const auto& tok : split_list(sweep_grid)) {
        sweep_opt.leaves_grid.push_back(std::strtoull(tok.c_str(), nullptr, 10));
      }
      const Dataset cal = load_csv(sweep_calib);
      const Dataset tst = load_csv(sweep_test);
      const std::string csv = run_sweep(cal, tst, sweep_opt);
      std::ofstream out(sweep_output);
      if (!out) throw InputError(sweep_output + ": cannot open for writing");
      out << csv;
      return 0;
    }
    if (synth->parsed()) {
      const Dataset ds = synth_simplex(synth_n, synth_k, synth_noise, synth_seed);
      save_csv(ds, synth_output);
      return 0;
    }
    if (roc_cmd->parsed()) return run_roc(roc_args);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}

// Timing harness for the data-parallel kernels: each one runs with its serial
// reference and with the OpenMP path, and the outputs are cross-checked.
//
//   calib_bench [n_samples] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "calib/dataset_io.hpp"
#include "calib/partition.hpp"
#include "calib/roc.hpp"
#include "calib/simplex.hpp"

using namespace calib;
using clk = std::chrono::steady_clock;

namespace {

template <typename F>
double time_best(int repeats, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = clk::now();
    fn();
    const double dt = std::chrono::duration<double>(clk::now() - t0).count();
    if (dt < best) best = dt;
  }
  return best;
}

void row(const std::string& name, double serial, double parallel, bool equal) {
  std::printf("%-28s %10.4f ms %10.4f ms %7.2fx   %s\n", name.c_str(),
              serial * 1e3, parallel * 1e3, serial / parallel,
              equal ? "outputs equal" : "OUTPUT MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
#ifdef _OPENMP
  std::printf("OpenMP threads: %d, n = %zu, best of %d runs\n",
              omp_get_max_threads(), n, repeats);
#else
  std::printf("built without OpenMP, n = %zu, best of %d runs\n", n, repeats);
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  const Dataset ds = synth_simplex(n, 3, 0.3, 42);
  const auto flat = flatten_forecasts(ds);
  const AffineThreshold gamma(ds.samples[0].p);

  {
    std::vector<int> a(n), b(n);
    const double ts = time_best(repeats, [&] {
      assign_regions(flat, 3, gamma, a, Exec::serial);
    });
    const double tp = time_best(repeats, [&] {
      assign_regions(flat, 3, gamma, b, Exec::parallel);
    });
    row("assign_regions", ts, tp, a == b);
  }

  {
    const auto grid = default_threshold_grid(
        synth_simplex(std::min<std::size_t>(n, 2000), 3, 0.3, 42), 0.25);
    RocGraph a, b;
    const double ts = time_best(repeats, [&] {
      a = roc_surface(ds, grid, Exec::serial);
    });
    const double tp = time_best(repeats, [&] {
      b = roc_surface(ds, grid, Exec::parallel);
    });
    row("roc_surface", ts, tp, a.points == b.points);
  }

  {
    const RocGraph g = roc_surface(ds, default_threshold_grid(
        synth_simplex(500, 3, 0.3, 42), 0.5));
    VusResult a, b;
    const double ts = time_best(repeats, [&] { a = vus(g, 400000, 7, Exec::serial); });
    const double tp = time_best(repeats, [&] { b = vus(g, 400000, 7, Exec::parallel); });
    row("vus monte carlo", ts, tp, a.value == b.value);
  }

  {
    const Dataset fit_ds = synth_simplex(std::min<std::size_t>(n, 3000), 3, 0.3, 9);
    FitOptions so;
    so.alpha = 1.0;
    so.exec = Exec::serial;
    FitOptions po = so;
    po.exec = Exec::parallel;
    SimplexPartitionModel a, b;
    const double ts = time_best(1, [&] { a = fit_mc_irp(fit_ds, so); });
    const double tp = time_best(1, [&] { b = fit_mc_irp(fit_ds, po); });
    bool equal = a.splits() == b.splits();
    for (std::size_t i = 0; equal && i < a.nodes.size(); ++i) {
      equal = a.nodes[i].value == b.nodes[i].value;
    }
    row("fit_mc_irp (single run)", ts, tp, equal);
  }
  return 0;
}

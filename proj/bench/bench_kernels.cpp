#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "crowdabuse/forest.hpp"
#include "crowdabuse/kernels.hpp"
#include "crowdabuse/rng.hpp"

using namespace crowdabuse;

namespace {

double best_of(int reps, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, double diff) {
  std::printf("%-22s %12.4f %12.4f %8.2fx %12.3e\n", name, serial * 1e3, parallel * 1e3, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings"};
  std::size_t n = 200000, d = 43, k = 4, forest_rows = 20000, trees = 32;
  int reps = 5;
  app.add_option("--rows", n, "samples for the softmax kernels");
  app.add_option("--dim", d, "features");
  app.add_option("--classes", k, "classes");
  app.add_option("--forest-rows", forest_rows, "samples for the forest");
  app.add_option("--trees", trees, "trees");
  app.add_option("--reps", reps, "repetitions, best time is reported");
  CLI11_PARSE(app, argc, argv);

  Rng rng(1);
  std::vector<double> x(n * d), w(k * (d + 1));
  std::vector<int> y(n);
  for (double& v : x) v = rng.normal();
  for (int& v : y) v = static_cast<int>(rng.below(k));
  for (double& v : w) v = 0.1 * rng.normal();
  const kernels::SoftmaxProblem problem{x, y, d, k, 100.0};

  std::printf("threads %d, rows %zu, dim %zu, classes %zu\n", omp_get_max_threads(), n, d, k);
  std::printf("%-22s %12s %12s %9s %12s\n", "kernel", "serial ms", "parallel ms", "speedup", "max |diff|");

  std::vector<double> gs(w.size()), gp(w.size());
  double os = 0, op = 0;
  const double t_gs = best_of(reps, [&] { os = kernels::map_objective_gradient_serial(problem, w, gs); });
  const double t_gp = best_of(reps, [&] { op = kernels::map_objective_gradient_parallel(problem, w, gp); });
  double diff = std::abs(os - op);
  for (std::size_t j = 0; j < w.size(); ++j) diff = std::max(diff, std::abs(gs[j] - gp[j]));
  report("objective+gradient", t_gs, t_gp, diff);

  std::vector<double> ps(n * k), pp(n * k);
  const double t_ps = best_of(reps, [&] { kernels::predict_proba_batch_serial(w, d, k, x, ps); });
  const double t_pp = best_of(reps, [&] { kernels::predict_proba_batch_parallel(w, d, k, x, pp); });
  diff = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) diff = std::max(diff, std::abs(ps[i] - pp[i]));
  report("batch prediction", t_ps, t_pp, diff);

  FeatureMatrix fx;
  for (std::size_t j = 0; j < d; ++j) fx.names.push_back("f" + std::to_string(j));
  fx.data.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(std::min(forest_rows, n) * d));
  std::vector<int> fy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(std::min(forest_rows, n)));
  for (std::size_t i = 0; i < fy.size(); ++i) fy[i] = fx.data[i * d] + fx.data[i * d + 1] > 0 ? 1 : 0;
  ForestConfig fc;
  fc.n_trees = trees;
  fc.max_depth = 12;
  ForestModel serial, parallel;
  fc.parallel = false;
  const double t_fs = best_of(1, [&] { serial = rf_train(fx, fy, {"a", "b"}, fc); });
  fc.parallel = true;
  const double t_fp = best_of(1, [&] { parallel = rf_train(fx, fy, {"a", "b"}, fc); });
  diff = 0;
  for (std::size_t j = 0; j < d; ++j) diff = std::max(diff, std::abs(serial.importances[j] - parallel.importances[j]));
  report("forest training", t_fs, t_fp, diff);
  return 0;
}

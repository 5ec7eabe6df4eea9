#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops of the softmax model. Every kernel has a plain
// serial reference next to the OpenMP version; tests pin them against each
// other and bench/ times them.
//
// Weight layout: K rows of (d + 1) values, column 0 is the intercept.

namespace crowdabuse::kernels {

struct SoftmaxProblem {
  std::span<const double> x;  // n x d, row-major, already standardized
  std::span<const int> y;     // class index per row
  std::size_t dim = 0;
  std::size_t classes = 0;
  double sigma2 = 1.0;  // Gaussian prior variance on non-intercept weights

  std::size_t samples() const noexcept { return y.size(); }
  std::size_t weight_count() const noexcept { return classes * (dim + 1); }
};

/// Rows per block in the parallel reductions. Partial sums are combined in
/// block order, so results do not depend on the thread count.
inline constexpr std::size_t kBlockRows = 1024;

/// Log posterior up to a constant: sum_i log softmax_{y_i}(W x_i) - |W|^2 / (2 sigma2).
double map_objective_serial(const SoftmaxProblem& p, std::span<const double> w);
double map_objective_parallel(const SoftmaxProblem& p, std::span<const double> w);

/// Returns the objective and writes its gradient (same layout as w).
double map_objective_gradient_serial(const SoftmaxProblem& p, std::span<const double> w, std::span<double> grad);
double map_objective_gradient_parallel(const SoftmaxProblem& p, std::span<const double> w, std::span<double> grad);

/// Class probabilities for one standardized row.
void softmax_probabilities(std::span<const double> w, std::size_t dim, std::size_t classes,
                           std::span<const double> x, std::span<double> out);

/// out: n x K probabilities for n standardized rows.
void predict_proba_batch_serial(std::span<const double> w, std::size_t dim, std::size_t classes,
                                std::span<const double> x, std::span<double> out);
void predict_proba_batch_parallel(std::span<const double> w, std::size_t dim, std::size_t classes,
                                  std::span<const double> x, std::span<double> out);

}  // namespace crowdabuse::kernels

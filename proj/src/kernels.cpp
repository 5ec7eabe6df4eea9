#include "crowdabuse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace crowdabuse::kernels {

namespace {

// Scores z_k = b_k + w_k . x into z.
void scores(std::span<const double> w, std::size_t dim, std::size_t classes, const double* x, double* z) {
  const std::size_t stride = dim + 1;
  for (std::size_t k = 0; k < classes; ++k) {
    const double* wk = w.data() + k * stride;
    double s = wk[0];
    for (std::size_t j = 0; j < dim; ++j) s += wk[j + 1] * x[j];
    z[k] = s;
  }
}

// Turns scores into probabilities in place, returns log-sum-exp.
double softmax_inplace(double* z, std::size_t classes) {
  const double m = *std::max_element(z, z + classes);
  double sum = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    z[k] = std::exp(z[k] - m);
    sum += z[k];
  }
  for (std::size_t k = 0; k < classes; ++k) z[k] /= sum;
  return m + std::log(sum);
}

double prior_term(const SoftmaxProblem& p, std::span<const double> w, double* grad) {
  const std::size_t stride = p.dim + 1;
  double sq = 0.0;
  for (std::size_t k = 0; k < p.classes; ++k)
    for (std::size_t j = 1; j < stride; ++j) {
      const double v = w[k * stride + j];
      sq += v * v;
      if (grad) grad[k * stride + j] -= v / p.sigma2;
    }
  return -sq / (2.0 * p.sigma2);
}

// Likelihood over rows [begin, end); accumulates into grad when non-null.
double likelihood_range(const SoftmaxProblem& p, std::span<const double> w, std::size_t begin, std::size_t end,
                        double* grad, double* z) {
  const std::size_t stride = p.dim + 1;
  double total = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double* xi = p.x.data() + i * p.dim;
    const auto yi = static_cast<std::size_t>(p.y[i]);
    scores(w, p.dim, p.classes, xi, z);
    const double zy = z[yi];
    const double lse = softmax_inplace(z, p.classes);
    total += zy - lse;
    if (!grad) continue;
    for (std::size_t k = 0; k < p.classes; ++k) {
      const double r = (k == yi ? 1.0 : 0.0) - z[k];
      double* gk = grad + k * stride;
      gk[0] += r;
      for (std::size_t j = 0; j < p.dim; ++j) gk[j + 1] += r * xi[j];
    }
  }
  return total;
}

double blocked(const SoftmaxProblem& p, std::span<const double> w, double* grad) {
  const std::size_t n = p.samples();
  const std::size_t nblocks = (n + kBlockRows - 1) / kBlockRows;
  const std::size_t wc = p.weight_count();
  std::vector<double> partial_obj(nblocks, 0.0);
  std::vector<double> partial_grad(grad ? nblocks * wc : 0, 0.0);

#pragma omp parallel
  {
    std::vector<double> z(p.classes);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t begin = b * kBlockRows;
      const std::size_t end = std::min(n, begin + kBlockRows);
      partial_obj[b] = likelihood_range(p, w, begin, end, grad ? partial_grad.data() + b * wc : nullptr, z.data());
    }
  }

  double total = 0.0;
  if (grad) std::fill(grad, grad + wc, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b) {
    total += partial_obj[b];
    if (!grad) continue;
    const double* pg = partial_grad.data() + b * wc;
    for (std::size_t j = 0; j < wc; ++j) grad[j] += pg[j];
  }
  return total + prior_term(p, w, grad);
}

}  // namespace

double map_objective_serial(const SoftmaxProblem& p, std::span<const double> w) {
  std::vector<double> z(p.classes);
  return likelihood_range(p, w, 0, p.samples(), nullptr, z.data()) + prior_term(p, w, nullptr);
}

double map_objective_gradient_serial(const SoftmaxProblem& p, std::span<const double> w, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> z(p.classes);
  const double ll = likelihood_range(p, w, 0, p.samples(), grad.data(), z.data());
  return ll + prior_term(p, w, grad.data());
}

double map_objective_parallel(const SoftmaxProblem& p, std::span<const double> w) {
  return blocked(p, w, nullptr);
}

double map_objective_gradient_parallel(const SoftmaxProblem& p, std::span<const double> w, std::span<double> grad) {
  return blocked(p, w, grad.data());
}

void softmax_probabilities(std::span<const double> w, std::size_t dim, std::size_t classes,
                           std::span<const double> x, std::span<double> out) {
  scores(w, dim, classes, x.data(), out.data());
  softmax_inplace(out.data(), classes);
}

void predict_proba_batch_serial(std::span<const double> w, std::size_t dim, std::size_t classes,
                                std::span<const double> x, std::span<double> out) {
  const std::size_t n = out.size() / classes;
  for (std::size_t i = 0; i < n; ++i) {
    scores(w, dim, classes, x.data() + i * dim, out.data() + i * classes);
    softmax_inplace(out.data() + i * classes, classes);
  }
}

void predict_proba_batch_parallel(std::span<const double> w, std::size_t dim, std::size_t classes,
                                  std::span<const double> x, std::span<double> out) {
  const std::size_t n = out.size() / classes;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    scores(w, dim, classes, x.data() + i * dim, out.data() + i * classes);
    softmax_inplace(out.data() + i * classes, classes);
  }
}

}  // namespace crowdabuse::kernels

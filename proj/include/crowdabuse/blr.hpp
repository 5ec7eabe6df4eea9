#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdabuse/datamodel.hpp"
#include "crowdabuse/kernels.hpp"
#include "crowdabuse/matrix.hpp"
#include "json.hpp"

namespace crowdabuse {

/// Multiclass: the four abuse levels. Offensive: {offensive, not_offensive}.
enum class LabelMode { Multiclass, Offensive };

std::string_view to_string(LabelMode mode) noexcept;
std::optional<LabelMode> parse_label_mode(std::string_view text);
std::vector<std::string> class_names(LabelMode mode);
int class_index(AbuseLabel label, LabelMode mode) noexcept;

struct BlrConfig {
  double sigma2 = 100.0;
  int max_iters = 5000;
  /// Stop when one accepted step improves the objective by less than
  /// tol * max(1, |objective|).
  double tol = 1e-8;
  /// First trial step; 0 means 1 / n_samples. Later trial steps come from the
  /// Barzilai-Borwein estimate, then shrink by `backtrack` until the Armijo
  /// condition holds.
  double initial_step = 0.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  std::uint64_t seed = 0;
  bool parallel = true;
};

/// log1p on count columns, then z-score with training statistics.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> log1p;

  static Standardization fit(const FeatureMatrix& x, const std::vector<bool>& log1p_mask);
  void apply(std::span<const double> raw, std::span<double> out) const;
  FeatureMatrix apply(const FeatureMatrix& raw) const;
};

struct BlrModel {
  std::vector<std::string> classes;
  std::vector<std::string> feature_names;
  std::vector<double> weights;  // classes x (dim + 1), column 0 intercept
  double sigma2 = 100.0;
  Standardization standardization;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  double final_objective = 0.0;
  std::vector<double> objective_trace_tail;

  std::size_t dim() const noexcept { return feature_names.size(); }
  std::size_t num_classes() const noexcept { return classes.size(); }

  /// Raw (unstandardized) input. Throws DimensionMismatch.
  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Argmax, ties to the lowest class index.
  int predict(std::span<const double> x) const;
  /// n x K probabilities for every row of a raw matrix.
  std::vector<double> predict_proba_batch(const FeatureMatrix& x, bool parallel = true) const;

  /// All-zero weights: uniform probabilities.
  static BlrModel zero(std::vector<std::string> classes, std::vector<std::string> feature_names);
};

/// Full-batch MAP gradient ascent from zero weights. Throws DegenerateTraining
/// when a class has no samples or |X| < K, NonFinite when the objective is not
/// finite.
BlrModel blr_train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> classes,
                   const BlrConfig& config = {});

BlrModel blr_train(const FeatureMatrix& x, std::span<const AbuseLabel> labels, LabelMode mode,
                   const BlrConfig& config = {});

/// Max coordinate-wise relative error between the analytic gradient and
/// central finite differences with step h. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
double blr_gradient_check(const kernels::SoftmaxProblem& problem, std::span<const double> w, double h = 1e-5);

nlohmann::ordered_json to_json(const BlrModel& model);
BlrModel blr_from_json(const nlohmann::json& j);

}  // namespace crowdabuse

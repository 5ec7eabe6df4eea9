#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdabuse/matrix.hpp"
#include "json.hpp"

namespace crowdabuse {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t min_leaf = 2;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;
  bool parallel = true;
};

/// Internal node when feature >= 0 (x[feature] <= threshold goes left);
/// leaf otherwise, predicting `label`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::uint64_t seed = 0;
  std::vector<TreeNode> nodes;
  /// Unnormalized Gini decrease per feature, weighted by node sample fraction.
  std::vector<double> importance;

  int predict(std::span<const double> x) const;
  std::size_t split_count() const;
};

struct ForestModel {
  std::vector<std::string> classes;
  std::vector<std::string> feature_names;
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
  std::vector<DecisionTree> trees;
  /// Mean decrease impurity, normalized to sum 1 when any split exists.
  std::vector<double> importances;
  /// Out-of-bag accuracy over samples left out by at least one tree (NaN if none).
  double oob_accuracy = 0.0;

  std::size_t dim() const noexcept { return feature_names.size(); }
};

/// Bootstrap-resampled Gini trees over random feature subsets. Tree t is grown
/// from derive_seed(seed, t), so serial and parallel training agree exactly.
/// Throws DegenerateTraining for fewer than 2 samples or a single class.
ForestModel rf_train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> classes,
                     const ForestConfig& config = {});

/// Majority vote; ties go to the lowest class index. Throws DimensionMismatch.
int rf_predict(const ForestModel& model, std::span<const double> x);

struct RankedFeature {
  std::string name;
  double importance = 0.0;

  bool operator==(const RankedFeature&) const = default;
};

/// Descending importance, ties by name, at most top_k rows. Empty when the
/// forest has no splits at all.
std::vector<RankedFeature> rf_rank_features(const ForestModel& model, std::size_t top_k);

nlohmann::ordered_json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace crowdabuse

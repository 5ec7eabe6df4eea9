#include "crowdabuse/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/rng.hpp"

namespace crowdabuse {

namespace {

double gini(std::span<const std::size_t> counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

int majority(std::span<const std::size_t> counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const FeatureMatrix& x, std::span<const int> y, std::size_t num_classes, const ForestConfig& config,
             std::size_t mtry, std::uint64_t seed)
      : x_(x), y_(y), k_(num_classes), config_(config), mtry_(mtry), rng_(seed) {}

  DecisionTree grow(std::vector<std::size_t> samples, std::uint64_t seed) {
    DecisionTree tree;
    tree.seed = seed;
    tree.importance.assign(x_.cols(), 0.0);
    root_size_ = static_cast<double>(samples.size());
    build(tree, std::move(samples), 0);
    return tree;
  }

 private:
  int build(DecisionTree& tree, std::vector<std::size_t> samples, std::size_t depth) {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t s : samples) ++counts[static_cast<std::size_t>(y_[s])];
    const std::size_t n = samples.size();
    const double node_gini = gini(counts, n);
    tree.nodes[index].label = majority(counts);

    const bool depth_reached = config_.max_depth > 0 && depth >= config_.max_depth;
    if (node_gini <= 0.0 || depth_reached || n < 2 * config_.min_leaf) return index;

    const SplitCandidate best = find_split(samples, node_gini);
    if (best.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (std::size_t s : samples)
      (x_.data[s * x_.cols() + static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    tree.importance[static_cast<std::size_t>(best.feature)] += best.decrease * static_cast<double>(n) / root_size_;
    tree.nodes[index].feature = best.feature;
    tree.nodes[index].threshold = best.threshold;
    const int l = build(tree, std::move(left), depth + 1);
    const int r = build(tree, std::move(right), depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  // Visits features in random order and scores the first mtry that are not
  // constant on this node.
  SplitCandidate find_split(const std::vector<std::size_t>& samples, double node_gini) {
    const std::size_t d = x_.cols(), n = samples.size();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);

    SplitCandidate best;
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left_counts(k_), right_counts(k_);
    std::size_t examined = 0;
    for (std::size_t f : order) {
      if (examined == mtry_) break;
      for (std::size_t i = 0; i < n; ++i) column[i] = {x_.data[samples[i] * d + f], y_[samples[i]]};
      const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
      if (lo->first == hi->first) continue;
      ++examined;
      std::sort(column.begin(), column.end());

      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::fill(right_counts.begin(), right_counts.end(), 0);
      for (const auto& [v, label] : column) ++right_counts[static_cast<std::size_t>(label)];
      for (std::size_t i = 1; i < n; ++i) {
        const auto moved = static_cast<std::size_t>(column[i - 1].second);
        ++left_counts[moved];
        --right_counts[moved];
        if (column[i - 1].first == column[i].first) continue;
        if (i < config_.min_leaf || n - i < config_.min_leaf) continue;
        const double weighted = (static_cast<double>(i) * gini(left_counts, i) +
                                 static_cast<double>(n - i) * gini(right_counts, n - i)) /
                                static_cast<double>(n);
        const double decrease = node_gini - weighted;
        if (decrease > best.decrease + 1e-12) {
          const double a = column[i - 1].first, b = column[i].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid > a && mid < b)) mid = a;
          best = {static_cast<int>(f), mid, decrease};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  std::size_t k_;
  const ForestConfig& config_;
  std::size_t mtry_;
  Rng rng_;
  double root_size_ = 1.0;
};

}  // namespace

int DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes[i].label;
}

std::size_t DecisionTree::split_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
    return !n.is_leaf();
  }));
}

ForestModel rf_train(const FeatureMatrix& x, std::span<const int> y, std::vector<std::string> classes,
                     const ForestConfig& config) {
  const std::size_t n = x.rows(), d = x.cols(), k = classes.size();
  if (y.size() != n) throw LengthMismatch("rf_train: row/label count mismatch");
  if (n < 2) throw DegenerateTraining("rf_train: need at least two samples");
  if (config.n_trees == 0) throw InvalidConfig("rf_train: n_trees must be > 0");
  std::vector<std::size_t> support(k, 0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw DegenerateTraining("rf_train: label out of range");
    ++support[static_cast<std::size_t>(label)];
  }
  if (std::count_if(support.begin(), support.end(), [](std::size_t c) { return c > 0; }) < 2)
    throw DegenerateTraining("rf_train: need at least two classes present");

  ForestModel model;
  model.classes = std::move(classes);
  model.feature_names = x.names;
  model.seed = config.seed;
  model.features_per_split = config.features_per_split > 0
                                 ? std::min(config.features_per_split, d)
                                 : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
  model.trees.resize(config.n_trees);
  std::vector<std::vector<bool>> in_bag(config.n_trees);

  const auto grow_tree = [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(config.seed, t);
    Rng bootstrap_rng(tree_seed);
    std::vector<std::size_t> samples(n);
    in_bag[t].assign(n, false);
    for (auto& s : samples) {
      s = static_cast<std::size_t>(bootstrap_rng.below(n));
      in_bag[t][s] = true;
    }
    TreeGrower grower(x, y, k, config, model.features_per_split, splitmix64(tree_seed));
    model.trees[t] = grower.grow(std::move(samples), tree_seed);
  };

  const auto n_trees = static_cast<std::ptrdiff_t>(config.n_trees);
#pragma omp parallel for schedule(dynamic, 1) if (config.parallel)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) grow_tree(static_cast<std::size_t>(t));

  // Mean decrease impurity: per-tree normalization, average, renormalize.
  model.importances.assign(d, 0.0);
  for (const auto& tree : model.trees) {
    const double total = std::accumulate(tree.importance.begin(), tree.importance.end(), 0.0);
    if (total <= 0.0) continue;
    for (std::size_t f = 0; f < d; ++f) model.importances[f] += tree.importance[f] / total;
  }
  const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
  if (total > 0.0)
    for (double& v : model.importances) v /= total;

  std::size_t oob_total = 0, oob_correct = 0;
  std::vector<std::size_t> votes(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    bool any = false;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (in_bag[t][i]) continue;
      ++votes[static_cast<std::size_t>(model.trees[t].predict(x.row(i)))];
      any = true;
    }
    if (!any) continue;
    ++oob_total;
    if (majority(votes) == y[i]) ++oob_correct;
  }
  model.oob_accuracy = oob_total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                      : static_cast<double>(oob_correct) / static_cast<double>(oob_total);
  return model;
}

int rf_predict(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw DimensionMismatch(model.dim(), x.size());
  std::vector<std::size_t> votes(model.classes.size(), 0);
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.predict(x))];
  return majority(votes);
}

std::vector<RankedFeature> rf_rank_features(const ForestModel& model, std::size_t top_k) {
  const bool any_split = std::any_of(model.trees.begin(), model.trees.end(),
                                     [](const DecisionTree& t) { return t.split_count() > 0; });
  if (!any_split) return {};
  std::vector<RankedFeature> rows;
  for (std::size_t f = 0; f < model.dim(); ++f) rows.push_back({model.feature_names[f], model.importances[f]});
  std::sort(rows.begin(), rows.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.name < b.name;
  });
  rows.resize(std::min(top_k, rows.size()));
  return rows;
}

nlohmann::ordered_json to_json(const ForestModel& m) {
  nlohmann::ordered_json j;
  j["classes"] = m.classes;
  j["feature_names"] = m.feature_names;
  j["features_per_split"] = m.features_per_split;
  j["seed"] = m.seed;
  j["importances"] = m.importances;
  j["oob_accuracy"] = std::isnan(m.oob_accuracy) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.oob_accuracy);
  auto& trees = j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : m.trees) {
    nlohmann::ordered_json tree;
    tree["seed"] = t.seed;
    tree["importance"] = t.importance;
    auto& nodes = tree["nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : t.nodes) nodes.push_back({node.feature, node.threshold, node.left, node.right, node.label});
    trees.push_back(std::move(tree));
  }
  return j;
}

ForestModel forest_from_json(const nlohmann::json& j) {
  try {
    ForestModel m;
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.features_per_split = j.at("features_per_split").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.importances = j.at("importances").get<std::vector<double>>();
    const auto& oob = j.at("oob_accuracy");
    m.oob_accuracy = oob.is_null() ? std::numeric_limits<double>::quiet_NaN() : oob.get<double>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      t.seed = jt.at("seed").get<std::uint64_t>();
      t.importance = jt.at("importance").get<std::vector<double>>();
      for (const auto& jn : jt.at("nodes"))
        t.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(), jn.at(3).get<int>(),
                           jn.at(4).get<int>()});
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("forest.json: ") + e.what());
  }
}

}  // namespace crowdabuse

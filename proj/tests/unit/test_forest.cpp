#include <algorithm>
#include <cmath>
#include <set>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/forest.hpp"
#include "crowdabuse/rng.hpp"
#include "doctest.h"

using namespace crowdabuse;

namespace {

struct Data {
  FeatureMatrix x;
  std::vector<int> y;
};

// Label is decided by feature `informative`; the rest is noise. Column 3 is
// constant.
Data planted(std::uint64_t seed, std::size_t n, std::size_t informative = 2) {
  Rng rng(seed);
  Data d;
  d.x.names = {"n0", "n1", "signal", "constant", "n4"};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{rng.normal(), rng.normal(), rng.normal(), 1.0, rng.uniform()};
    d.y.push_back(row[informative] > 0.1 ? 1 : 0);
    d.x.append(row);
  }
  return d;
}

double accuracy(const ForestModel& m, const Data& d) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < d.y.size(); ++i) hit += rf_predict(m, d.x.row(i)) == d.y[i];
  return static_cast<double>(hit) / static_cast<double>(d.y.size());
}

}  // namespace

TEST_CASE("the planted feature gets the highest importance") {
  const Data d = planted(1, 400);
  ForestConfig cfg;
  cfg.n_trees = 60;
  cfg.seed = 3;
  const ForestModel m = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  const auto best = std::max_element(m.importances.begin(), m.importances.end()) - m.importances.begin();
  CHECK(m.feature_names[static_cast<std::size_t>(best)] == "signal");
  CHECK(m.importances[3] == 0.0);
  double total = 0.0;
  for (double v : m.importances) {
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const auto ranking = rf_rank_features(m, 10);
  REQUIRE(ranking.size() == 5);
  CHECK(ranking[0].name == "signal");
  CHECK(ranking.back().name == "constant");
  CHECK(rf_rank_features(m, 2).size() == 2);
}

TEST_CASE("out-of-bag accuracy on a planted rule") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Data d = planted(seed + 50, 300);
    ForestConfig cfg;
    cfg.n_trees = 40;
    cfg.seed = seed;
    const ForestModel m = rf_train(d.x, d.y, {"no", "yes"}, cfg);
    CHECK(m.oob_accuracy >= 0.9);
    CHECK(accuracy(m, d) >= 0.9);
  }
}

TEST_CASE("a single stump cannot beat the best exhaustive stump on XOR") {
  Data d;
  d.x.names = {"a", "b"};
  for (int rep = 0; rep < 10; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        d.x.append(std::vector<double>{static_cast<double>(a), static_cast<double>(b)});
        d.y.push_back(a ^ b);
      }
  // Oracle: every feature, threshold and leaf labeling.
  double oracle = 0.0;
  for (std::size_t f = 0; f < 2; ++f)
    for (double thr : {-1.0, 0.5, 2.0})
      for (int left = 0; left < 2; ++left)
        for (int right = 0; right < 2; ++right) {
          std::size_t hit = 0;
          for (std::size_t i = 0; i < d.y.size(); ++i) hit += (d.x.row(i)[f] <= thr ? left : right) == d.y[i];
          oracle = std::max(oracle, static_cast<double>(hit) / static_cast<double>(d.y.size()));
        }
  CHECK(oracle <= 0.75);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.max_depth = 1;
    cfg.seed = seed;
    const ForestModel m = rf_train(d.x, d.y, {"zero", "one"}, cfg);
    CHECK(accuracy(m, d) <= oracle + 1e-12);
  }
  ForestConfig deep;
  deep.n_trees = 25;
  deep.features_per_split = 2;
  deep.min_leaf = 1;
  CHECK(accuracy(rf_train(d.x, d.y, {"zero", "one"}, deep), d) == 1.0);
}

TEST_CASE("vote ties go to the lowest class index") {
  ForestModel m;
  m.classes = {"a", "b", "c"};
  m.feature_names = {"x"};
  DecisionTree t1, t2;
  t1.nodes = {TreeNode{-1, 0.0, -1, -1, 2}};
  t2.nodes = {TreeNode{-1, 0.0, -1, -1, 1}};
  m.trees = {t1, t2};
  CHECK(rf_predict(m, std::vector<double>{0.0}) == 1);
  m.trees.push_back(t1);
  CHECK(rf_predict(m, std::vector<double>{0.0}) == 2);
  CHECK_THROWS_AS(rf_predict(m, std::vector<double>{}), DimensionMismatch);
}

TEST_CASE("ranking ties are broken by name") {
  ForestModel m;
  m.feature_names = {"zeta", "alpha", "mid"};
  m.importances = {0.4, 0.4, 0.2};
  DecisionTree t;
  t.nodes = {TreeNode{0, 0.5, 1, 2, 0}, TreeNode{}, TreeNode{}};
  m.trees = {t};
  const auto r = rf_rank_features(m, 3);
  REQUIRE(r.size() == 3);
  CHECK(r[0].name == "alpha");
  CHECK(r[1].name == "zeta");
  CHECK(r[2].name == "mid");
}

TEST_CASE("all-constant features yield an empty ranking") {
  FeatureMatrix x({"a", "b"});
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    x.append(std::vector<double>{1.0, 2.0});
    y.push_back(i % 2);
  }
  ForestConfig cfg;
  cfg.n_trees = 5;
  const ForestModel m = rf_train(x, y, {"a", "b"}, cfg);
  CHECK(rf_rank_features(m, 10).empty());
  for (double v : m.importances) CHECK(v == 0.0);
}

TEST_CASE("serial and parallel forests are identical and seeded") {
  const Data d = planted(7, 250);
  ForestConfig cfg;
  cfg.n_trees = 16;
  cfg.seed = 12;
  cfg.parallel = false;
  const ForestModel serial = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  cfg.parallel = true;
  const ForestModel parallel = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  CHECK(to_json(serial).dump() == to_json(parallel).dump());
  CHECK(to_json(rf_train(d.x, d.y, {"no", "yes"}, cfg)).dump() == to_json(parallel).dump());
  cfg.seed = 13;
  CHECK(to_json(rf_train(d.x, d.y, {"no", "yes"}, cfg)).dump() != to_json(parallel).dump());
}

TEST_CASE("split thresholds fall between observed values") {
  const Data d = planted(2, 150);
  ForestConfig cfg;
  cfg.n_trees = 10;
  const ForestModel m = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  for (const auto& tree : m.trees)
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto f = static_cast<std::size_t>(node.feature);
      bool below = false, above = false;
      for (std::size_t i = 0; i < d.y.size(); ++i) {
        below |= d.x.row(i)[f] <= node.threshold;
        above |= d.x.row(i)[f] > node.threshold;
      }
      CHECK(below);
      CHECK(above);
      CHECK(f != 3);
    }
}

TEST_CASE("depth and leaf limits are respected") {
  const Data d = planted(5, 200);
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.max_depth = 2;
  cfg.min_leaf = 10;
  const ForestModel m = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  for (const auto& tree : m.trees) CHECK(tree.split_count() <= 3);
}

TEST_CASE("forest serialization round-trips") {
  const Data d = planted(4, 120);
  ForestConfig cfg;
  cfg.n_trees = 6;
  const ForestModel m = rf_train(d.x, d.y, {"no", "yes"}, cfg);
  const auto text = to_json(m).dump();
  const ForestModel back = forest_from_json(nlohmann::json::parse(text));
  CHECK(to_json(back).dump() == text);
  for (std::size_t i = 0; i < d.y.size(); ++i) CHECK(rf_predict(back, d.x.row(i)) == rf_predict(m, d.x.row(i)));
  CHECK_THROWS_AS(forest_from_json(nlohmann::json::object()), Error);
}

TEST_CASE("forest training failures") {
  const Data d = planted(0, 20);
  CHECK_THROWS_AS(rf_train(d.x, std::vector<int>(20, 1), {"no", "yes"}), DegenerateTraining);
  FeatureMatrix one({"a"});
  one.data = {1.0};
  CHECK_THROWS_AS(rf_train(one, std::vector<int>{0}, {"no", "yes"}), DegenerateTraining);
  ForestConfig none;
  none.n_trees = 0;
  CHECK_THROWS_AS(rf_train(d.x, d.y, {"no", "yes"}, none), InvalidConfig);
}

#include <algorithm>

#include "crowdabuse/crowd.hpp"
#include "crowdabuse/errors.hpp"
#include "crowdabuse/rng.hpp"
#include "doctest.h"

using namespace crowdabuse;

namespace {

const std::vector<std::string> kClasses{"abusive", "hate", "spam", "normal"};

std::vector<double> one_hot(std::size_t c, std::size_t k = 4) {
  std::vector<double> p(k, 0.0);
  p[c] = 1.0;
  return p;
}

// Reference: count first-argmax votes, keep the top-voted classes, then pick
// the highest mean posterior and finally the lowest index.
int oracle_vote(const std::vector<std::vector<double>>& posteriors) {
  const std::size_t k = posteriors.front().size();
  std::vector<int> votes(k, 0);
  std::vector<double> mean(k, 0.0);
  for (const auto& p : posteriors) {
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c)
      if (p[c] > p[arg]) arg = c;
    ++votes[arg];
    for (std::size_t c = 0; c < k; ++c) mean[c] += p[c] / static_cast<double>(posteriors.size());
  }
  const int top = *std::max_element(votes.begin(), votes.end());
  int best = -1;
  for (std::size_t c = 0; c < k; ++c) {
    if (votes[c] != top) continue;
    if (best < 0 || mean[c] > mean[static_cast<std::size_t>(best)] + 1e-12) best = static_cast<int>(c);
  }
  return best;
}

std::vector<std::vector<double>> random_posteriors(Rng& rng, std::size_t edges, bool coarse) {
  std::vector<std::vector<double>> out;
  for (std::size_t e = 0; e < edges; ++e) {
    std::vector<double> p(4);
    double total = 0.0;
    for (double& v : p) {
      v = coarse ? static_cast<double>(rng.below(3)) : rng.uniform();
      total += v;
    }
    if (total == 0.0) p = {0.25, 0.25, 0.25, 0.25};
    else
      for (double& v : p) v /= total;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("majority vote agrees with a brute-force reference") {
  Rng rng(17);
  for (int round = 0; round < 3000; ++round) {
    const auto posteriors = random_posteriors(rng, 1 + rng.below(7), round % 2 == 0);
    const auto v = majority_vote("m", kClasses, posteriors);
    CHECK(v.label == oracle_vote(posteriors));
    CHECK(v.n_edges == posteriors.size());
    std::size_t total = 0;
    for (auto n : v.votes) total += n;
    CHECK(total == posteriors.size());
  }
}

TEST_CASE("three abusive against two normal") {
  const std::vector<std::vector<double>> p{one_hot(0), one_hot(0), one_hot(0), one_hot(3), one_hot(3)};
  const auto v = majority_vote("m", kClasses, p);
  CHECK(v.label_name() == "abusive");
  CHECK(v.votes == std::vector<std::size_t>{3, 0, 0, 2});
  CHECK(v.mode == VerdictMode::Crowdsourced);
}

TEST_CASE("vote ties go to the higher mean posterior") {
  const std::vector<std::vector<double>> p{{0.1, 0.5, 0.0, 0.4},
                                           {0.1, 0.6, 0.0, 0.3},
                                           {0.0, 0.45, 0.0, 0.55},
                                           {0.0, 0.3, 0.0, 0.7}};
  // hate 2 votes, normal 2 votes; mean hate 0.4625 < normal 0.4875
  CHECK(majority_vote("m", kClasses, p).label_name() == "normal");
  const std::vector<std::vector<double>> two{{0.0, 0.75, 0.0, 0.25}, {0.0, 0.45, 0.0, 0.55}};
  const auto v = majority_vote("m", kClasses, two);
  CHECK(v.mean_posterior[1] == doctest::Approx(0.6));
  CHECK(v.mean_posterior[3] == doctest::Approx(0.4));
  CHECK(v.label_name() == "hate");
  const std::vector<std::vector<double>> exact{one_hot(1), one_hot(3)};
  CHECK(majority_vote("m", kClasses, exact).label_name() == "hate");
}

TEST_CASE("a zero-weight model labels everything abusive") {
  std::vector<std::string> names(EdgeFeatureVector::names().begin(), EdgeFeatureVector::names().end());
  const BlrModel zero = BlrModel::zero(kClasses, names);
  MessageCascade cascade{"m", AbuseLabel::Normal, {}};
  std::vector<EdgeFeatureVector> vectors;
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    cascade.edges.push_back({"m", "a", "r" + std::to_string(i), true, Reaction::Like, i});
    EdgeFeatureVector v;
    for (double& x : v.values) x = rng.normal();
    vectors.push_back(v);
  }
  const auto verdict = predict_message_crowdsourced(zero, cascade, vectors);
  CHECK(verdict.label_name() == "abusive");
  for (double m : verdict.mean_posterior) CHECK(m == doctest::Approx(0.25));
  vectors.pop_back();
  CHECK_THROWS_AS(predict_message_crowdsourced(zero, cascade, vectors), DimensionMismatch);
  CHECK_THROWS_AS(predict_offensive(zero, cascade, vectors), Error);

  const BlrModel offensive = BlrModel::zero(class_names(LabelMode::Offensive), names);
  vectors.push_back(vectors.front());
  CHECK(predict_offensive(offensive, cascade, vectors).label_name() == "offensive");
}

TEST_CASE("baseline verdicts are marked as fallback") {
  std::vector<std::string> names(BaselineFeatureVector::names().begin(), BaselineFeatureVector::names().end());
  const BlrModel zero = BlrModel::zero(kClasses, names);
  const auto v = predict_message_noncrowdsourced(zero, "m", MessageFeatures{}, UserFeatures{});
  CHECK(v.mode == VerdictMode::FallbackNonCrowdsourced);
  CHECK(v.n_edges == 0);
  CHECK(v.label == 0);
  const auto j = to_json(v);
  CHECK(j["mode"] == "fallback-noncrowdsourced");
  CHECK(j["label"] == "abusive");
}

TEST_CASE("offensive collapse") {
  using L = AbuseLabel;
  const std::vector<L> tie{L::Hate, L::Spam};
  CHECK(offensive_majority(tie));
  const std::vector<L> minority{L::Spam, L::Normal, L::Abusive};
  CHECK_FALSE(offensive_majority(minority));
  const std::vector<L> majority{L::Hate, L::Abusive, L::Normal};
  CHECK(offensive_majority(majority));
  CHECK_FALSE(offensive_majority(std::span<const L>{}));
}

TEST_CASE("empty cascades are rejected") {
  CHECK_THROWS_AS(majority_vote("m", kClasses, std::vector<std::vector<double>>{}), EmptyCascade);
  const BlrModel zero = BlrModel::zero(kClasses, {});
  CHECK_THROWS_AS(predict_message_crowdsourced(zero, MessageCascade{"m", std::nullopt, {}}, {}), EmptyCascade);
}

TEST_CASE("edge order does not matter") {
  Rng rng(4);
  for (int round = 0; round < 300; ++round) {
    auto p = random_posteriors(rng, 2 + rng.below(6), round % 3 == 0);
    const int label = majority_vote("m", kClasses, p).label;
    for (int s = 0; s < 4; ++s) {
      rng.shuffle(p);
      CHECK(majority_vote("m", kClasses, p).label == label);
    }
  }
}

TEST_CASE("another vote for the winner keeps it winning") {
  Rng rng(9);
  for (int round = 0; round < 500; ++round) {
    auto p = random_posteriors(rng, 1 + rng.below(6), false);
    const int label = majority_vote("m", kClasses, p).label;
    p.push_back(one_hot(static_cast<std::size_t>(label)));
    CHECK(majority_vote("m", kClasses, p).label == label);
  }
}

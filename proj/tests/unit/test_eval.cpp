#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/eval.hpp"
#include "crowdabuse/rng.hpp"
#include "doctest.h"

using namespace crowdabuse;

namespace {

std::vector<LabeledMessage> make_messages(const std::map<AbuseLabel, std::size_t>& counts) {
  std::vector<LabeledMessage> out;
  for (const auto& [label, n] : counts)
    for (std::size_t i = 0; i < n; ++i)
      out.push_back({std::string(to_string(label)) + "_" + std::to_string(i), label});
  return out;
}

}  // namespace

TEST_CASE("binary metrics match a count-based oracle for every small input") {
  for (std::size_t n = 1; n <= 6; ++n) {
    const std::size_t combos = std::size_t{1} << (2 * n);
    for (std::size_t bits = 0; bits < combos; ++bits) {
      std::vector<int> pred(n), truth(n);
      for (std::size_t i = 0; i < n; ++i) {
        pred[i] = static_cast<int>((bits >> i) & 1);
        truth[i] = static_cast<int>((bits >> (n + i)) & 1);
      }
      for (int positive = 0; positive < 2; ++positive) {
        int tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
          tp += pred[i] == positive && truth[i] == positive;
          fp += pred[i] == positive && truth[i] != positive;
          fn += pred[i] != positive && truth[i] == positive;
        }
        const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
        const Prf prf = precision_recall_f1(pred, truth, positive);
        CHECK(prf.f1 == f1);
        CHECK(prf.precision == (tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp)));
        CHECK(prf.recall == (tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn)));
        if (prf.precision > 0 && prf.recall > 0) {
          CHECK(prf.f1 >= std::min(prf.precision, prf.recall) - 1e-15);
          CHECK(prf.f1 <= std::max(prf.precision, prf.recall) + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("f1 is the harmonic mean of precision and recall") {
  // tp 1394, fp 246, fn 306 -> precision 0.85, recall 0.82
  std::vector<int> pred, truth;
  auto add = [&](int p, int t, int count) {
    for (int i = 0; i < count; ++i) {
      pred.push_back(p);
      truth.push_back(t);
    }
  };
  add(1, 1, 1394);
  add(1, 0, 246);
  add(0, 1, 306);
  add(0, 0, 500);
  const Prf prf = precision_recall_f1(pred, truth, 1);
  CHECK(prf.precision == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(prf.recall == doctest::Approx(0.82).epsilon(1e-12));
  CHECK(prf.f1 == doctest::Approx(0.83).epsilon(0.006));
  CHECK(prf.f1 == doctest::Approx(2 * 0.85 * 0.82 / 1.67).epsilon(1e-12));
}

TEST_CASE("simple counts and the identity case") {
  std::vector<int> pred(10, 1), truth(10, 1);
  truth[0] = truth[1] = 0;  // tp 8, fp 2, fn 0
  const Prf prf = precision_recall_f1(pred, truth, 1);
  CHECK(prf.precision == 0.8);
  CHECK(prf.recall == 1.0);
  const std::vector<int> labels{0, 3, 2, 1, 3, 3};
  for (int c = 0; c < 4; ++c) {
    const Prf same = precision_recall_f1(labels, labels, c);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
  }
}

TEST_CASE("evaluation report") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 3, 3, 3};
  const std::vector<int> pred{0, 1, 1, 1, 3, 3, 3, 0};
  const EvalReport r = evaluate_predictions(pred, truth, {"abusive", "hate", "spam", "normal"},
                                            {"a", "b", "c", "d", "e", "f", "g", "h"});
  CHECK(r.confusion[0] == std::vector<std::size_t>{1, 1, 0, 0});
  CHECK(r.confusion[3] == std::vector<std::size_t>{1, 0, 0, 2});
  CHECK(r.accuracy == 5.0 / 8.0);
  CHECK(r.per_class[2].prf.f1 == 0.0);
  CHECK(r.per_class[3].support == 3);
  double macro = 0.0;
  for (const auto& c : r.per_class) macro += c.prf.f1 / 4.0;
  CHECK(r.macro.f1 == doctest::Approx(macro).epsilon(1e-15));
  CHECK_THROWS_AS(evaluate_predictions(pred, std::vector<int>{0}, {"a", "b", "c", "d"}, {}), LengthMismatch);
  CHECK_THROWS_AS(precision_recall_f1(pred, std::vector<int>{0}, 0), LengthMismatch);
}

TEST_CASE("model comparison") {
  const std::vector<std::string> ids{"x", "y", "z", "w"};
  const std::vector<int> truth{0, 0, 1, 1};
  const EvalReport cro = evaluate_predictions(std::vector<int>{0, 0, 1, 1}, truth, {"a", "b"}, ids);
  const EvalReport non = evaluate_predictions(std::vector<int>{0, 1, 1, 1}, truth, {"a", "b"}, ids);
  const ModelComparison cmp = compare_models(cro, non);
  CHECK(cmp.per_class[0].delta == doctest::Approx(1.0 - 2.0 / 3.0));
  CHECK(cmp.macro.delta == doctest::Approx(cro.macro.f1 - non.macro.f1));
  CHECK(cmp.macro.relative == doctest::Approx(cmp.macro.delta / non.macro.f1));

  const EvalReport other = evaluate_predictions(std::vector<int>{0, 0, 1, 1}, truth, {"a", "b"}, {"x", "y", "z", "q"});
  CHECK_THROWS_AS(compare_models(cro, other), SplitMismatch);
  const EvalReport renamed = evaluate_predictions(std::vector<int>{0, 0, 1, 1}, truth, {"a", "c"}, ids);
  CHECK_THROWS_AS(compare_models(cro, renamed), SplitMismatch);

  const EvalReport zero = evaluate_predictions(std::vector<int>{1, 1, 1, 1}, std::vector<int>{0, 0, 0, 0}, {"a", "b"}, ids);
  CHECK(std::isnan(compare_models(zero, zero).per_class[0].relative));
  CHECK(compare_models(zero, zero).macro.delta == 0.0);

  const std::string table = format_comparison_table(cro, non);
  CHECK(table.find("CRO-F1") != std::string::npos);
  CHECK(table.find("macro") != std::string::npos);
}

TEST_CASE("split sizes follow the ratios") {
  const auto hundred = make_messages({{AbuseLabel::Abusive, 25},
                                      {AbuseLabel::Hate, 5},
                                      {AbuseLabel::Spam, 20},
                                      {AbuseLabel::Normal, 50}});
  const MessageSplit s = split_messages(hundred, {}, 1);
  CHECK(s.train.size() == 60);
  CHECK(s.validation.size() == 30);
  CHECK(s.test.size() == 10);

  const auto ten = make_messages({{AbuseLabel::Spam, 10}});
  const MessageSplit t = split_messages(ten, {}, 1);
  CHECK(t.train.size() == 6);
  CHECK(t.validation.size() == 3);
  CHECK(t.test.size() == 1);
}

TEST_CASE("splits partition the messages and stratify every class") {
  Rng rng(21);
  const std::array<SplitRatios, 4> choices{SplitRatios{}, SplitRatios{0.5, 0.25, 0.25}, SplitRatios{0.7, 0.2, 0.1},
                                           SplitRatios{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  for (int round = 0; round < 2000; ++round) {
    std::map<AbuseLabel, std::size_t> counts;
    for (AbuseLabel l : kAllLabels) counts[l] = rng.below(40);
    counts[AbuseLabel::Normal] += 1;
    const auto messages = make_messages(counts);
    const SplitRatios ratios = choices[static_cast<std::size_t>(round) % choices.size()];
    const MessageSplit s = split_messages(messages, ratios, static_cast<std::uint64_t>(round));

    std::multiset<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    std::multiset<std::string> expected;
    for (const auto& m : messages) expected.insert(m.message_id);
    CHECK(all == expected);

    const std::size_t n = messages.size();
    const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
    const std::array<const std::vector<std::string>*, 3> sets{&s.train, &s.validation, &s.test};
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(static_cast<double>(sets[j]->size()) - n * r[j]) < 1.0 + 1e-9);
    for (AbuseLabel l : kAllLabels) {
      const std::string prefix = std::string(to_string(l)) + "_";
      for (std::size_t j = 0; j < 3; ++j) {
        const auto in_set = std::count_if(sets[j]->begin(), sets[j]->end(),
                                          [&](const std::string& id) { return id.rfind(prefix, 0) == 0; });
        CHECK(std::abs(static_cast<double>(in_set) - static_cast<double>(counts[l]) * r[j]) < 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("splits are seeded") {
  const auto messages = make_messages({{AbuseLabel::Abusive, 30}, {AbuseLabel::Normal, 70}});
  const auto a = split_messages(messages, {}, 5), b = split_messages(messages, {}, 5);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(split_messages(messages, {}, 6).train != a.train);

  auto reversed = messages;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(split_messages(reversed, {}, 5).train == a.train);

  const auto back = split_from_json(nlohmann::json::parse(to_json(a).dump()));
  CHECK(back.train == a.train);
  CHECK(back.validation == a.validation);
  CHECK(back.seed == 5);
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(split_messages({}, {}, 0), EmptyClass);
  const auto m = make_messages({{AbuseLabel::Normal, 4}});
  CHECK_THROWS_AS(split_messages(m, {0.5, 0.5, 0.5}, 0), InvalidConfig);
  CHECK_THROWS_AS(split_messages(m, {1.2, -0.1, -0.1}, 0), InvalidConfig);
  CHECK_THROWS_AS(split_from_json(nlohmann::json{{"seed", 1}}), Error);
}

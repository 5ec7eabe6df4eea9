#include "crowdabuse/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/rng.hpp"

namespace crowdabuse {

void SplitRatios::check() const {
  if (train < 0.0 || validation < 0.0 || test < 0.0 || std::abs(train + validation + test - 1.0) > 1e-9)
    throw InvalidConfig("split ratios must be nonnegative and sum to 1");
}

std::vector<LabeledMessage> labeled_messages(const Corpus& corpus) {
  std::vector<LabeledMessage> out;
  for (const auto& t : corpus.tweets())
    if (t.label) out.push_back({t.tweet_id, *t.label});
  return out;
}

namespace {

// Largest-remainder rounding of total * ratios[j].
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double exact = static_cast<double>(total) * ratios[j];
    out[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[j] = exact - static_cast<double>(out[j]);
    assigned += out[j];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % 3, ++assigned) ++out[order[i]];
  return out;
}

}  // namespace

MessageSplit split_messages(std::span<const LabeledMessage> messages, SplitRatios ratios, std::uint64_t seed) {
  ratios.check();
  if (messages.empty()) throw EmptyClass("split_messages: no labeled messages");
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};

  std::array<std::vector<std::string>, kNumLabels> by_class;
  for (const auto& m : messages) by_class[index_of(m.label)].push_back(m.message_id);

  // Per-class floors; each class then places its 0-2 leftover messages in
  // distinct sets so every set hits its largest-remainder target. At most
  // 3^4 placements, so search them all and keep the one with the largest
  // total fractional share.
  const auto target = apportion(messages.size(), r);
  std::array<std::array<std::size_t, 3>, kNumLabels> take{};
  std::array<std::array<double, 3>, kNumLabels> frac{};
  std::array<std::size_t, kNumLabels> leftover{};
  std::array<std::size_t, 3> placed{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const std::size_t n = by_class[c].size();
    std::size_t used = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const double exact = static_cast<double>(n) * r[j];
      take[c][j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      frac[c][j] = exact - static_cast<double>(take[c][j]);
      used += take[c][j];
      placed[j] += take[c][j];
    }
    leftover[c] = n - used;
  }

  // Subsets of {train, validation, test} as bit masks, by size.
  std::array<std::vector<unsigned>, 4> subsets;
  for (unsigned mask = 0; mask < 8; ++mask) subsets[static_cast<std::size_t>(std::popcount(mask))].push_back(mask);

  std::array<unsigned, kNumLabels> choice{}, best_choice{};
  double best_score = -1.0;
  auto search = [&](auto&& self, std::size_t c, std::array<std::size_t, 3> filled, double score) -> void {
    if (c == kNumLabels) {
      if (filled == target && score > best_score + 1e-12) {
        best_score = score;
        best_choice = choice;
      }
      return;
    }
    for (unsigned mask : subsets[std::min<std::size_t>(leftover[c], 3)]) {
      auto next = filled;
      double gain = 0.0;
      for (std::size_t j = 0; j < 3; ++j)
        if (mask & (1u << j)) {
          ++next[j];
          gain += frac[c][j];
        }
      choice[c] = mask;
      self(self, c + 1, next, score + gain);
    }
  };
  search(search, 0, placed, 0.0);

  if (best_score >= 0.0) {
    for (std::size_t c = 0; c < kNumLabels; ++c)
      for (std::size_t j = 0; j < 3; ++j)
        if (best_choice[c] & (1u << j)) ++take[c][j];
  } else {
    // Unreachable for valid ratios; keep every message anyway.
    for (std::size_t c = 0; c < kNumLabels; ++c) take[c][0] += leftover[c];
  }

  MessageSplit split;
  split.seed = seed;
  split.ratios = ratios;
  Rng rng(seed);
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    auto ids = by_class[c];
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    auto it = ids.begin();
    for (std::size_t j = 0; j < 3; ++j) {
      auto& dest = j == 0 ? split.train : j == 1 ? split.validation : split.test;
      dest.insert(dest.end(), it, it + static_cast<std::ptrdiff_t>(take[c][j]));
      it += static_cast<std::ptrdiff_t>(take[c][j]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Prf precision_recall_f1(std::span<const int> predictions, std::span<const int> truths, int positive) {
  if (predictions.size() != truths.size())
    throw LengthMismatch("precision_recall_f1: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] == positive, truth = truths[i] == positive;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  Prf out;
  out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  // 2PR / (P + R) in count form
  out.f1 = tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return out;
}

EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const int> truths,
                                std::vector<std::string> classes, std::vector<std::string> message_ids) {
  if (predictions.size() != truths.size()) throw LengthMismatch("evaluate_predictions: prediction/truth count");
  if (!message_ids.empty() && message_ids.size() != truths.size())
    throw LengthMismatch("evaluate_predictions: message id count");
  const std::size_t k = classes.size();
  EvalReport r;
  r.classes = std::move(classes);
  r.message_ids = std::move(message_ids);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++r.confusion.at(static_cast<std::size_t>(truths[i])).at(static_cast<std::size_t>(predictions[i]));
    correct += predictions[i] == truths[i];
  }
  r.accuracy = truths.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truths.size());
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m{r.classes[c], precision_recall_f1(predictions, truths, static_cast<int>(c)), 0};
    m.support = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.macro.precision += m.prf.precision / static_cast<double>(k);
    r.macro.recall += m.prf.recall / static_cast<double>(k);
    r.macro.f1 += m.prf.f1 / static_cast<double>(k);
    r.per_class.push_back(std::move(m));
  }
  return r;
}

namespace {

ClassDelta delta_of(std::string name, double cro, double noncro) {
  return {std::move(name), cro, noncro, cro - noncro,
          noncro == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (cro - noncro) / noncro};
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json to_json(const ClassDelta& d) {
  return {{"class", d.name},
          {"f1_cro", d.f1_cro},
          {"f1_noncro", d.f1_noncro},
          {"delta", d.delta},
          {"relative", number_or_null(d.relative)}};
}

}  // namespace

ModelComparison compare_models(const EvalReport& cro, const EvalReport& noncro) {
  if (cro.classes != noncro.classes) throw SplitMismatch("compare_models: reports use different classes");
  if (std::multiset<std::string>(cro.message_ids.begin(), cro.message_ids.end()) !=
      std::multiset<std::string>(noncro.message_ids.begin(), noncro.message_ids.end()))
    throw SplitMismatch("compare_models: reports cover different message sets");
  ModelComparison out;
  for (std::size_t c = 0; c < cro.classes.size(); ++c)
    out.per_class.push_back(delta_of(cro.classes[c], cro.per_class[c].prf.f1, noncro.per_class[c].prf.f1));
  out.macro = delta_of("macro", cro.macro.f1, noncro.macro.f1);
  return out;
}

std::string format_comparison_table(const EvalReport& cro, const EvalReport& noncro) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %8s %8s %8s %11s %11s %11s\n", "class", "CRO-P", "CRO-R", "CRO-F1",
                "nonCRO-P", "nonCRO-R", "nonCRO-F1");
  out += line;
  auto row = [&](const std::string& name, const Prf& a, const Prf& b) {
    std::snprintf(line, sizeof line, "%-16s %8.2f %8.2f %8.2f %11.2f %11.2f %11.2f\n", name.c_str(), a.precision,
                  a.recall, a.f1, b.precision, b.recall, b.f1);
    out += line;
  };
  for (std::size_t c = 0; c < cro.per_class.size() && c < noncro.per_class.size(); ++c)
    row(cro.per_class[c].name, cro.per_class[c].prf, noncro.per_class[c].prf);
  row("macro", cro.macro, noncro.macro);
  return out;
}

nlohmann::ordered_json to_json(const Prf& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["classes"] = r.classes;
  j["confusion"] = r.confusion;
  auto& per = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_class) {
    auto row = to_json(m.prf);
    row["class"] = m.name;
    row["support"] = m.support;
    per.push_back(std::move(row));
  }
  j["macro"] = to_json(r.macro);
  j["accuracy"] = r.accuracy;
  j["n_messages"] = r.message_ids.size();
  return j;
}

nlohmann::ordered_json to_json(const ModelComparison& c) {
  nlohmann::ordered_json j;
  auto& per = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& d : c.per_class) per.push_back(to_json(d));
  j["macro"] = to_json(c.macro);
  return j;
}

nlohmann::ordered_json to_json(const MessageSplit& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["ratios"] = {s.ratios.train, s.ratios.validation, s.ratios.test};
  j["train"] = s.train;
  j["validation"] = s.validation;
  j["test"] = s.test;
  return j;
}

MessageSplit split_from_json(const nlohmann::json& j) {
  try {
    MessageSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw Error("split.json: ratios must have three entries");
    s.ratios = {r[0], r[1], r[2]};
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("split.json: ") + e.what());
  }
}

}  // namespace crowdabuse

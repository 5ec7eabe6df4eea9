#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdabuse/datamodel.hpp"
#include "json.hpp"

namespace crowdabuse {

struct SplitRatios {
  double train = 0.6;
  double validation = 0.3;
  double test = 0.1;

  /// Throws InvalidConfig unless all are >= 0 and they sum to 1 (within 1e-9).
  void check() const;
};

struct LabeledMessage {
  std::string message_id;
  AbuseLabel label = AbuseLabel::Normal;
};

struct MessageSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

/// Every labeled message of a corpus, in tweet order.
std::vector<LabeledMessage> labeled_messages(const Corpus& corpus);

/// Stratified, seeded message-level split. Set sizes match round(N * ratio)
/// (largest remainder) and each class lands within one message of its exact
/// share in every set. Throws EmptyClass when there are no messages.
MessageSplit split_messages(std::span<const LabeledMessage> messages, SplitRatios ratios, std::uint64_t seed);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// One-vs-rest metrics for `positive`. Zero denominators give 0.
/// Throws LengthMismatch.
Prf precision_recall_f1(std::span<const int> predictions, std::span<const int> truths, int positive);

struct ClassMetrics {
  std::string name;
  Prf prf;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
  std::vector<ClassMetrics> per_class;
  Prf macro;
  double accuracy = 0.0;
  std::vector<std::string> message_ids;
};

EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const int> truths,
                                std::vector<std::string> classes, std::vector<std::string> message_ids);

struct ClassDelta {
  std::string name;
  double f1_cro = 0.0;
  double f1_noncro = 0.0;
  double delta = 0.0;     // absolute
  double relative = 0.0;  // delta / f1_noncro, NaN when f1_noncro = 0
};

struct ModelComparison {
  std::vector<ClassDelta> per_class;
  ClassDelta macro;
};

/// Throws SplitMismatch if the reports cover different message sets or classes.
ModelComparison compare_models(const EvalReport& cro, const EvalReport& noncro);

/// Plain-text table: class, CRO-P/R/F1, nonCRO-P/R/F1, plus a macro row.
std::string format_comparison_table(const EvalReport& cro, const EvalReport& noncro);

nlohmann::ordered_json to_json(const Prf& prf);
nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const ModelComparison& comparison);
nlohmann::ordered_json to_json(const MessageSplit& split);
MessageSplit split_from_json(const nlohmann::json& j);

}  // namespace crowdabuse

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdabuse/blr.hpp"
#include "crowdabuse/crowd.hpp"
#include "crowdabuse/datamodel.hpp"
#include "crowdabuse/eval.hpp"
#include "crowdabuse/features.hpp"
#include "crowdabuse/forest.hpp"
#include "crowdabuse/graph.hpp"
#include "json.hpp"

namespace crowdabuse {

/// Labeled samples with named columns.
struct Dataset {
  FeatureMatrix x;
  std::vector<AbuseLabel> labels;
};

/// Samples with class-index targets.
struct TargetDataset {
  FeatureMatrix x;
  std::vector<int> y;
  std::vector<std::string> classes;
};

/// Cascades and features of one corpus, plus the stage functions that the CLI
/// subcommands and the experiments share. Keeps a reference to the corpus.
class Pipeline {
 public:
  Pipeline(const Corpus& corpus, const Lexicon& lexicon);
  Pipeline(Corpus&&, const Lexicon&) = delete;

  const Corpus& corpus() const noexcept { return corpus_; }
  const std::vector<MessageCascade>& cascades() const noexcept { return cascades_; }
  const FeatureExtractor& features() const noexcept { return features_; }
  /// nullptr for messages without interaction events.
  const MessageCascade* cascade(std::string_view message_id) const;

  /// Every edge of the listed labeled messages, labeled with its message label.
  Dataset edge_dataset(std::span<const std::string> message_ids) const;
  /// One author+message row per listed labeled message.
  Dataset baseline_dataset(std::span<const std::string> message_ids) const;

  BlrModel train_crowdsourced(std::span<const std::string> message_ids, LabelMode mode,
                              const BlrConfig& config) const;
  BlrModel train_baseline(std::span<const std::string> message_ids, LabelMode mode, const BlrConfig& config) const;

  /// Crowdsourced verdict, or the baseline verdict when the message has no cascade.
  MessageVerdict predict(const BlrModel& crowdsourced, const BlrModel& baseline, std::string_view message_id) const;
  MessageVerdict predict_baseline(const BlrModel& baseline, std::string_view message_id) const;

 private:
  const Corpus& corpus_;
  std::vector<MessageCascade> cascades_;
  std::unordered_map<std::string, std::size_t> cascade_index_;
  FeatureExtractor features_;
};

/// Truth indices for labeled messages under a label mode. Throws Error for
/// unlabeled or unknown messages.
std::vector<int> truth_indices(const Corpus& corpus, std::span<const std::string> message_ids, LabelMode mode);

struct ModelEvaluation {
  EvalReport crowdsourced;
  EvalReport noncrowdsourced;
  ModelComparison comparison;
  std::size_t crowdsourced_verdicts = 0;  // messages answered by majority vote
  std::size_t fallback_verdicts = 0;      // messages answered by the baseline
};

/// Scores both models on the listed messages. The crowdsourced side falls back
/// to the baseline for messages without a cascade.
ModelEvaluation evaluate_models(const Pipeline& pipeline, const BlrModel& crowdsourced, const BlrModel& baseline,
                                std::span<const std::string> message_ids, LabelMode mode);

nlohmann::ordered_json to_json(const ModelEvaluation& evaluation);

struct ExperimentConfig {
  LabelMode mode = LabelMode::Multiclass;
  SplitRatios ratios;
  BlrConfig blr;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  MessageSplit split;
  BlrModel crowdsourced;
  BlrModel baseline;
  ModelEvaluation validation;
  ModelEvaluation test;
};

/// Split, train both models on the training set, evaluate on validation and test.
ExperimentResult run_experiment(const Pipeline& pipeline, const ExperimentConfig& config);

/// report.json content: configuration, split sizes, validation and test scores.
nlohmann::ordered_json experiment_report(const ExperimentResult& result, const ExperimentConfig& config);

// Feature ranking.

struct RankingConfig {
  ForestConfig forest;
  std::size_t top_k = 10;
  /// Rows per forest are subsampled (seeded) down to this many; 0 keeps all.
  std::size_t max_samples = 20000;
};

struct RankingGroup {
  std::string name;  // "user", "offensive", "normal"
  std::size_t samples = 0;
  ForestModel forest;
  std::vector<RankedFeature> ranking;
};

/// One row per user: user features, persona scores and mean message features
/// of authored posts. Classes {offensive, not_offensive}; offensive when the
/// user posted or reacted to an abusive or hateful post.
TargetDataset user_dataset(const Pipeline& pipeline);

/// Edge-level data without the diffusion flag, restricted to offensive
/// (abusive or hate) or to normal messages. Classes {diffused, not_diffused}.
TargetDataset diffusion_dataset(const Pipeline& pipeline, bool offensive);

RankingGroup rank_group(std::string name, const TargetDataset& data, const RankingConfig& config);

/// The user-level ranking followed by the offensive and normal diffusion rankings.
std::vector<RankingGroup> rank_features(const Pipeline& pipeline, const RankingConfig& config);

/// Tab-separated: group, rank, feature, importance.
std::string format_ranking_tsv(std::span<const RankingGroup> groups);

// Persona and discriminator output.

struct UserPersona {
  std::string user_id;
  PersonaScores persona;
  DiscriminatorClass discriminator = DiscriminatorClass::NoReactions;
  std::size_t reactions = 0;
};

std::vector<UserPersona> user_personas(const Pipeline& pipeline);
nlohmann::ordered_json to_json(const UserPersona& persona);

// Line-oriented artifacts.

nlohmann::ordered_json to_json(const MessageCascade& cascade);
nlohmann::ordered_json edge_features_json(const PropagationEdge& edge, const EdgeFeatureVector& v);

/// Throw Error on I/O failure.
void write_text(const std::filesystem::path& path, std::string_view text);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace crowdabuse

#pragma once

#include <span>
#include <string>
#include <vector>

#include "crowdabuse/blr.hpp"
#include "crowdabuse/features.hpp"
#include "crowdabuse/graph.hpp"
#include "json.hpp"

namespace crowdabuse {

enum class VerdictMode { Crowdsourced, FallbackNonCrowdsourced };

std::string_view to_string(VerdictMode mode) noexcept;

struct MessageVerdict {
  std::string message_id;
  std::vector<std::string> classes;
  int label = 0;  // index into classes
  std::vector<std::size_t> votes;
  std::size_t n_edges = 0;
  VerdictMode mode = VerdictMode::Crowdsourced;
  std::vector<double> mean_posterior;

  const std::string& label_name() const { return classes.at(static_cast<std::size_t>(label)); }
};

/// Mean posteriors closer than this count as equal when breaking vote ties.
inline constexpr double kPosteriorTieTolerance = 1e-12;

/// Core vote over per-edge posteriors (each of size K). Each edge votes for
/// its argmax (ties to the lowest index); the most-voted class wins; tied vote
/// counts go to the highest mean posterior, then to the lowest class index.
/// Throws EmptyCascade when there are no edges.
MessageVerdict majority_vote(std::string message_id, std::vector<std::string> classes,
                             std::span<const std::vector<double>> edge_posteriors);

/// Crowdsourced verdict from the edge-level model. vectors[i] belongs to
/// cascade.edges[i]. Throws EmptyCascade, DimensionMismatch.
MessageVerdict predict_message_crowdsourced(const BlrModel& model, const MessageCascade& cascade,
                                            std::span<const EdgeFeatureVector> vectors);

/// Baseline verdict from message + author features only.
MessageVerdict predict_message_noncrowdsourced(const BlrModel& baseline, std::string message_id,
                                               const MessageFeatures& msg, const UserFeatures& author);

/// Binary offensive verdict from a model trained in LabelMode::Offensive.
/// Throws Error if the model is not binary offensive.
MessageVerdict predict_offensive(const BlrModel& offensive_model, const MessageCascade& cascade,
                                 std::span<const EdgeFeatureVector> vectors);

/// Collapses per-edge abuse labels to offensive / not_offensive and takes the
/// majority (ties to offensive).
bool offensive_majority(std::span<const AbuseLabel> edge_labels);

nlohmann::ordered_json to_json(const MessageVerdict& verdict);

}  // namespace crowdabuse

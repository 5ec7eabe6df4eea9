#include "crowdabuse/crowd.hpp"

#include <algorithm>

#include "crowdabuse/errors.hpp"

namespace crowdabuse {

std::string_view to_string(VerdictMode mode) noexcept {
  return mode == VerdictMode::Crowdsourced ? "crowdsourced" : "fallback-noncrowdsourced";
}

MessageVerdict majority_vote(std::string message_id, std::vector<std::string> classes,
                             std::span<const std::vector<double>> edge_posteriors) {
  if (edge_posteriors.empty()) throw EmptyCascade("message '" + message_id + "' has no edges");
  const std::size_t k = classes.size();
  MessageVerdict v;
  v.message_id = std::move(message_id);
  v.classes = std::move(classes);
  v.votes.assign(k, 0);
  v.mean_posterior.assign(k, 0.0);
  v.n_edges = edge_posteriors.size();
  v.mode = VerdictMode::Crowdsourced;

  for (const auto& p : edge_posteriors) {
    if (p.size() != k) throw DimensionMismatch(k, p.size());
    ++v.votes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
    for (std::size_t c = 0; c < k; ++c) v.mean_posterior[c] += p[c];
  }
  for (double& m : v.mean_posterior) m /= static_cast<double>(v.n_edges);

  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (v.votes[c] > v.votes[best] ||
        (v.votes[c] == v.votes[best] && v.mean_posterior[c] > v.mean_posterior[best] + kPosteriorTieTolerance))
      best = c;
  }
  v.label = static_cast<int>(best);
  return v;
}

MessageVerdict predict_message_crowdsourced(const BlrModel& model, const MessageCascade& cascade,
                                            std::span<const EdgeFeatureVector> vectors) {
  if (cascade.edges.empty()) throw EmptyCascade("message '" + cascade.message_id + "' has no edges");
  if (vectors.size() != cascade.edges.size()) throw DimensionMismatch(cascade.edges.size(), vectors.size());
  std::vector<std::vector<double>> posteriors;
  posteriors.reserve(vectors.size());
  for (const auto& v : vectors) posteriors.push_back(model.predict_proba(v.values));
  return majority_vote(cascade.message_id, model.classes, posteriors);
}

MessageVerdict predict_message_noncrowdsourced(const BlrModel& baseline, std::string message_id,
                                               const MessageFeatures& msg, const UserFeatures& author) {
  const auto x = assemble_baseline_vector(author, msg);
  MessageVerdict v;
  v.message_id = std::move(message_id);
  v.classes = baseline.classes;
  v.mean_posterior = baseline.predict_proba(x.values);
  v.label = static_cast<int>(std::max_element(v.mean_posterior.begin(), v.mean_posterior.end()) -
                             v.mean_posterior.begin());
  v.votes.assign(v.classes.size(), 0);
  v.n_edges = 0;
  v.mode = VerdictMode::FallbackNonCrowdsourced;
  return v;
}

MessageVerdict predict_offensive(const BlrModel& offensive_model, const MessageCascade& cascade,
                                 std::span<const EdgeFeatureVector> vectors) {
  if (offensive_model.classes != class_names(LabelMode::Offensive))
    throw Error("predict_offensive: model was not trained in offensive mode");
  return predict_message_crowdsourced(offensive_model, cascade, vectors);
}

bool offensive_majority(std::span<const AbuseLabel> edge_labels) {
  const auto offensive = std::count_if(edge_labels.begin(), edge_labels.end(), is_offensive);
  return offensive > 0 && 2 * static_cast<std::size_t>(offensive) >= edge_labels.size();
}

nlohmann::ordered_json to_json(const MessageVerdict& v) {
  nlohmann::ordered_json j;
  j["message_id"] = v.message_id;
  j["label"] = v.label_name();
  j["mode"] = std::string(to_string(v.mode));
  j["n_edges"] = v.n_edges;
  nlohmann::ordered_json votes, mean;
  for (std::size_t c = 0; c < v.classes.size(); ++c) {
    votes[v.classes[c]] = v.votes[c];
    mean[v.classes[c]] = v.mean_posterior[c];
  }
  j["votes"] = votes;
  j["mean_posterior"] = mean;
  return j;
}

}  // namespace crowdabuse

#include "crowdabuse/graph.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace crowdabuse {

FollowGraph::FollowGraph(const Corpus& corpus) {
  for (const auto& user : corpus.users()) adjacency_.try_emplace(user.user_id);
  for (const auto& edge : corpus.follows()) adjacency_[edge.followee_id].push_back(edge.follower_id);
  for (auto& [followee, followers] : adjacency_) {
    std::sort(followers.begin(), followers.end());
    followers.erase(std::unique(followers.begin(), followers.end()), followers.end());
    edge_count_ += followers.size();
  }
}

std::span<const std::string> FollowGraph::followers(std::string_view followee) const {
  auto it = adjacency_.find(std::string(followee));
  if (it == adjacency_.end()) return {};
  return it->second;
}

bool FollowGraph::has_edge(std::string_view followee, std::string_view follower) const {
  const auto list = followers(followee);
  return std::binary_search(list.begin(), list.end(), follower,
                            [](std::string_view a, std::string_view b) { return a < b; });
}

FollowGraph build_follow_graph(const Corpus& corpus) { return FollowGraph(corpus); }

namespace {

// Larger wins; ties keep the earlier event.
constexpr int reaction_strength(Reaction r) noexcept { return static_cast<int>(r); }

MessageCascade collapse(const std::string& message_id, std::optional<AbuseLabel> label,
                        std::vector<const InteractionEvent*> events) {
  std::map<std::pair<std::string_view, std::string_view>, PropagationEdge> by_pair;
  for (const InteractionEvent* e : events) {
    auto [it, inserted] = by_pair.try_emplace({e->spreader_id, e->receiver_id});
    PropagationEdge& edge = it->second;
    if (inserted) {
      edge = {message_id, e->spreader_id, e->receiver_id, label_diffusion(e->reaction), e->reaction, e->timestamp};
      continue;
    }
    if (reaction_strength(e->reaction) > reaction_strength(edge.reaction)) edge.reaction = e->reaction;
    edge.diffused = edge.diffused || label_diffusion(e->reaction);
    edge.timestamp = std::min(edge.timestamp, e->timestamp);
  }

  MessageCascade cascade{message_id, label, {}};
  cascade.edges.reserve(by_pair.size());
  for (auto& [key, edge] : by_pair) cascade.edges.push_back(std::move(edge));
  std::sort(cascade.edges.begin(), cascade.edges.end(), [](const PropagationEdge& a, const PropagationEdge& b) {
    return std::tie(a.timestamp, a.receiver_id, a.spreader_id) < std::tie(b.timestamp, b.receiver_id, b.spreader_id);
  });
  return cascade;
}

}  // namespace

std::vector<MessageCascade> derive_cascades(const Corpus& corpus) {
  std::map<std::string_view, std::vector<const InteractionEvent*>> grouped;
  for (const auto& e : corpus.interactions()) grouped[e.message_id].push_back(&e);

  std::vector<std::pair<std::string_view, std::vector<const InteractionEvent*>>> work(grouped.begin(),
                                                                                        grouped.end());
  std::vector<MessageCascade> cascades(work.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < work.size(); ++i) {
    const std::string message_id(work[i].first);
    const TweetRecord* tweet = corpus.find_tweet(message_id);
    cascades[i] = collapse(message_id, tweet ? tweet->label : std::nullopt, std::move(work[i].second));
  }
  return cascades;
}

}  // namespace crowdabuse

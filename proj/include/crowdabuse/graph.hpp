#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdabuse/datamodel.hpp"

namespace crowdabuse {

/// Followership adjacency: followee -> sorted list of followers.
class FollowGraph {
 public:
  explicit FollowGraph(const Corpus& corpus);

  /// Empty span for users with no followers (or unknown users).
  std::span<const std::string> followers(std::string_view followee) const;
  std::size_t out_degree(std::string_view followee) const { return followers(followee).size(); }
  bool has_edge(std::string_view followee, std::string_view follower) const;
  std::size_t edge_count() const noexcept { return edge_count_; }

 private:
  std::unordered_map<std::string, std::vector<std::string>> adjacency_;
  std::size_t edge_count_ = 0;
};

FollowGraph build_follow_graph(const Corpus& corpus);

/// An edge is diffused iff the receiver reacted (reply, retweet, quote, like).
constexpr bool label_diffusion(Reaction reaction) noexcept { return reaction != Reaction::None; }

struct PropagationEdge {
  std::string message_id;
  std::string spreader_id;
  std::string receiver_id;
  bool diffused = false;
  Reaction reaction = Reaction::None;
  /// Earliest event time observed on this (spreader, receiver) link.
  Timestamp timestamp = 0;

  bool operator==(const PropagationEdge&) const = default;
};

struct MessageCascade {
  std::string message_id;
  std::optional<AbuseLabel> label;
  std::vector<PropagationEdge> edges;
};

/// One cascade per message with at least one interaction event, ordered by
/// message_id. Duplicate (spreader, receiver) events collapse to one edge that
/// keeps the strongest reaction; edges are ordered by (timestamp, receiver_id,
/// spreader_id).
std::vector<MessageCascade> derive_cascades(const Corpus& corpus);

}  // namespace crowdabuse

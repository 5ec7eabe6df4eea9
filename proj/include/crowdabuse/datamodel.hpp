#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crowdabuse {

/// Abuse level of a message. The enumerator order is the fixed tie-break
/// order used throughout (majority votes, forest votes, argmax).
enum class AbuseLabel : std::uint8_t { Abusive = 0, Hate = 1, Spam = 2, Normal = 3 };

inline constexpr std::size_t kNumLabels = 4;
inline constexpr std::array<AbuseLabel, kNumLabels> kAllLabels{AbuseLabel::Abusive, AbuseLabel::Hate,
                                                               AbuseLabel::Spam, AbuseLabel::Normal};

/// Offensive = Abusive or Hate.
constexpr bool is_offensive(AbuseLabel label) noexcept {
  return label == AbuseLabel::Abusive || label == AbuseLabel::Hate;
}

constexpr std::size_t index_of(AbuseLabel label) noexcept { return static_cast<std::size_t>(label); }

std::string_view to_string(AbuseLabel label) noexcept;
/// Accepts the four canonical names case-insensitively, plus "hateful".
std::optional<AbuseLabel> parse_label(std::string_view text);

enum class Reaction : std::uint8_t { None = 0, Like = 1, Reply = 2, Quote = 3, Retweet = 4 };

std::string_view to_string(Reaction reaction) noexcept;
std::optional<Reaction> parse_reaction(std::string_view text);

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Parses RFC 3339 date-times ("2020-01-31T12:00:00Z", optional fraction,
/// numeric offsets). Fractional seconds are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);
/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp ts);

struct UserRecord {
  std::string user_id;
  std::int64_t followers_count = 0;
  std::int64_t friends_count = 0;
  bool verified = false;
  bool has_profile_url = false;
  bool has_description = false;
  std::int64_t status_count = 0;
  Timestamp created_at = 0;

  bool operator==(const UserRecord&) const = default;
};

struct TweetRecord {
  std::string tweet_id;
  std::string author_id;
  std::string text;
  std::optional<AbuseLabel> label;
  Timestamp created_at = 0;
  bool is_retweet = false;
  std::int64_t retweet_count = 0;
  std::int64_t favorited_count = 0;
  bool quoted_status = false;
  std::int64_t hashtags = 0;
  std::int64_t urls = 0;
  std::int64_t media = 0;
  std::int64_t mentions = 0;

  bool operator==(const TweetRecord&) const = default;
};

/// followee is the friend / spreader side, follower the receiver side.
struct FollowEdge {
  std::string followee_id;
  std::string follower_id;

  bool operator==(const FollowEdge&) const = default;
  auto operator<=>(const FollowEdge&) const = default;
};

struct InteractionEvent {
  std::string message_id;
  std::string spreader_id;
  std::string receiver_id;
  Reaction reaction = Reaction::None;
  Timestamp timestamp = 0;

  bool operator==(const InteractionEvent&) const = default;
};

/// All entities of one data snapshot. Built once, then treated as immutable.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<UserRecord> users, std::vector<TweetRecord> tweets, std::vector<FollowEdge> follows,
         std::vector<InteractionEvent> interactions, Timestamp snapshot_time);

  const std::vector<UserRecord>& users() const noexcept { return users_; }
  const std::vector<TweetRecord>& tweets() const noexcept { return tweets_; }
  const std::vector<FollowEdge>& follows() const noexcept { return follows_; }
  const std::vector<InteractionEvent>& interactions() const noexcept { return interactions_; }
  Timestamp snapshot_time() const noexcept { return snapshot_time_; }

  /// nullptr when absent. With duplicate ids the first occurrence wins.
  const UserRecord* find_user(std::string_view user_id) const;
  const TweetRecord* find_tweet(std::string_view tweet_id) const;

 private:
  std::vector<UserRecord> users_;
  std::vector<TweetRecord> tweets_;
  std::vector<FollowEdge> follows_;
  std::vector<InteractionEvent> interactions_;
  Timestamp snapshot_time_ = 0;
  std::unordered_map<std::string, std::size_t> user_index_;
  std::unordered_map<std::string, std::size_t> tweet_index_;
};

/// Order-independent content equality.
bool same_content(const Corpus& a, const Corpus& b);

struct CorpusPaths {
  std::filesystem::path users;
  std::filesystem::path tweets;
  std::filesystem::path follows;
  std::filesystem::path interactions;

  /// users.jsonl, tweets.jsonl, follows.csv, interactions.jsonl under dir.
  static CorpusPaths in_directory(const std::filesystem::path& dir);
};

struct Violation {
  std::string kind;  // user, tweet, follow, interaction
  std::string id;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

/// Parses the four files without checking cross-entity invariants.
/// Throws MalformedLine / MissingField.
Corpus read_corpus(const CorpusPaths& paths, Timestamp snapshot_time);

/// read_corpus followed by validate_corpus. Throws DanglingReference for the
/// first unresolved key, InvalidCorpus for any other violation.
Corpus load_corpus(const CorpusPaths& paths, Timestamp snapshot_time);

std::vector<Violation> validate_corpus(const Corpus& corpus);

/// Writes the four corpus files in the formats read_corpus accepts.
void save_corpus(const Corpus& corpus, const CorpusPaths& paths);

/// Message counts per label plus the number of unlabeled messages.
struct LabelDistribution {
  std::array<std::size_t, kNumLabels> counts{};
  std::size_t unlabeled = 0;

  std::size_t labeled() const noexcept;
  double fraction(AbuseLabel label) const noexcept;
};

LabelDistribution label_distribution(const Corpus& corpus);

}  // namespace crowdabuse

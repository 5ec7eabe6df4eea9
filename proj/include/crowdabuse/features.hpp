#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crowdabuse/datamodel.hpp"
#include "crowdabuse/graph.hpp"

namespace crowdabuse {

inline constexpr std::size_t kUserFeatureCount = 16;
inline constexpr std::size_t kMessageFeatureCount = 11;
inline constexpr std::size_t kEdgeFeatureCount = 2 * kUserFeatureCount + kMessageFeatureCount + 1;
inline constexpr std::size_t kBaselineFeatureCount = kUserFeatureCount + kMessageFeatureCount;

/// 3 network + 13 interaction features of one user. Counts are raw; any
/// log/standardization happens inside the models.
struct UserFeatures {
  // network
  double followers_count = 0;
  double friends_count = 0;
  double followers_friends_ratio = 0;
  // interaction
  double directed_tweets_ratio = 0;
  double retweet_to_tweet_ratio = 0;
  double hashtag_tweet_ratio = 0;
  double url_tweet_ratio = 0;
  double media_tweet_ratio = 0;
  double avg_favorite_per_tweet = 0;
  double avg_tweets_per_day = 0;
  double has_profile_url = 0;
  double has_description = 0;
  double is_verified = 0;
  double status_count = 0;
  double account_age_days = 0;
  double dialogue = 0;  // pairwise; set at edge assembly

  static const std::array<std::string_view, kUserFeatureCount>& names();
  std::array<double, kUserFeatureCount> values() const;
};

struct MessageFeatures {
  double quoted_status = 0;    // has the post been quoted
  double is_retweet = 0;       // has the post been retweeted (retweet_count > 0)
  double retweet_count = 0;
  double retweet_status = 0;   // is the post itself a retweet
  double favorited_count = 0;
  double has_hashtag = 0;
  double has_url = 0;
  double has_mentions = 0;
  double has_media = 0;
  double avg_tweet_length = 0;  // min(chars / 280, 1)
  double sentiment_score = 0;   // [-1, 1]

  static const std::array<std::string_view, kMessageFeatureCount>& names();
  std::array<double, kMessageFeatureCount> values() const;
};

/// Token polarity table. Lines are "token<TAB>polarity", '#' starts a comment.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, double> polarity);

  static Lexicon parse(std::string_view tsv);
  static Lexicon load(const std::filesystem::path& path);
  /// The lexicon compiled in from data/lexicon.tsv.
  static const Lexicon& builtin();

  /// nullptr when the token is not in the lexicon.
  const double* find(std::string_view token) const;
  std::size_t size() const noexcept { return polarity_.size(); }
  /// Sorted (token, polarity) pairs, for writing the table back out.
  std::vector<std::pair<std::string, double>> entries() const;

 private:
  std::unordered_map<std::string, double> polarity_;
};

/// Lowercased tokens split on ASCII non-alphanumerics. Bytes >= 0x80 are kept
/// inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// Mean polarity of lexicon tokens in text, 0 when none match. "not", "no" or
/// "never" directly before a matched token flips that token's polarity.
double sentiment_score(std::string_view text, const Lexicon& lexicon);

/// authored: every tweet by u in the corpus. receiver_to_spreader_history > 0
/// sets the dialogue flag.
UserFeatures user_features(const UserRecord& u, std::span<const TweetRecord* const> authored,
                           std::size_t receiver_to_spreader_history, Timestamp snapshot);

MessageFeatures message_features(const TweetRecord& t, const Lexicon& lexicon);

/// Share of a user's labeled posts per abuse label.
struct PersonaScores {
  std::array<double, kNumLabels> score{};
  std::size_t total = 0;
  bool undefined = true;  // no labeled posts

  double of(AbuseLabel label) const noexcept { return score[index_of(label)]; }
};

PersonaScores persona_scores(std::span<const AbuseLabel> labeled_tweets);

enum class DiscriminatorClass { NormalOnly, AbusiveOnly, Mixed, NoReactions };

std::string_view to_string(DiscriminatorClass c) noexcept;

/// Classifies a user by the labels of posts they reacted to.
DiscriminatorClass discriminator_class(std::span<const AbuseLabel> reacted_labels);

/// spreader(16) | receiver(16) | message(11) | diffused(1).
struct EdgeFeatureVector {
  std::array<double, kEdgeFeatureCount> values{};

  static const std::vector<std::string>& names();
  double diffused() const noexcept { return values.back(); }
};

EdgeFeatureVector assemble_edge_vector(const UserFeatures& spreader, const UserFeatures& receiver,
                                       const MessageFeatures& msg, bool diffused);

/// author(16) | message(11): the non-crowdsourced baseline input.
struct BaselineFeatureVector {
  std::array<double, kBaselineFeatureCount> values{};

  static const std::vector<std::string>& names();
};

BaselineFeatureVector assemble_baseline_vector(const UserFeatures& author, const MessageFeatures& msg);

/// True for raw count columns (followers, friends, status, retweet and
/// favorited counts) that models log1p-transform before standardizing.
bool is_count_feature(std::string_view name);

/// Precomputes per-user and per-message features for one corpus and assembles
/// edge and baseline vectors from them, filling in the pairwise dialogue flags.
class FeatureExtractor {
 public:
  FeatureExtractor(const Corpus& corpus, const Lexicon& lexicon);
  FeatureExtractor(Corpus&&, const Lexicon&) = delete;

  const UserFeatures& user(std::string_view user_id) const;
  const MessageFeatures& message(std::string_view tweet_id) const;

  /// Number of diffused events where `reactor` reacted to a post spread by
  /// `poster`, strictly before `before`, on a message other than `exclude`.
  std::size_t prior_reactions(std::string_view reactor, std::string_view poster, Timestamp before,
                              std::string_view exclude) const;

  EdgeFeatureVector edge_vector(const PropagationEdge& edge) const;
  BaselineFeatureVector baseline_vector(const TweetRecord& tweet) const;

 private:
  const Corpus& corpus_;
  std::unordered_map<std::string, UserFeatures> users_;
  std::unordered_map<std::string, MessageFeatures> messages_;
  // (spreader, receiver) -> sorted (timestamp, message_id) of diffused events
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<Timestamp, std::string>>> reactions_;
};

}  // namespace crowdabuse

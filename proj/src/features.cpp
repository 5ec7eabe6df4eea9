#include "crowdabuse/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "crowdabuse/errors.hpp"

namespace crowdabuse {

namespace {

constexpr std::string_view kDefaultLexiconTsv =
#include "default_lexicon.inc"
    ;

constexpr double kMaxTweetLength = 280.0;

bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_negation(std::string_view token) { return token == "not" || token == "no" || token == "never"; }

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

double flag(bool b) { return b ? 1.0 : 0.0; }

std::vector<std::string> prefixed(std::string_view prefix, auto const& names) {
  std::vector<std::string> out;
  for (auto n : names) out.push_back(std::string(prefix) + std::string(n));
  return out;
}

}  // namespace

const std::array<std::string_view, kUserFeatureCount>& UserFeatures::names() {
  static const std::array<std::string_view, kUserFeatureCount> kNames{
      "followers_count",        "friends_count",       "followers_friends_ratio", "directed_tweets_ratio",
      "retweet_to_tweet_ratio", "hashtag_tweet_ratio", "url_tweet_ratio",         "media_tweet_ratio",
      "avg_favorite_per_tweet", "avg_tweets_per_day",  "has_profile_url",         "has_description",
      "is_verified",            "status_count",        "account_age_days",        "dialogue"};
  return kNames;
}

std::array<double, kUserFeatureCount> UserFeatures::values() const {
  return {followers_count,        friends_count,       followers_friends_ratio, directed_tweets_ratio,
          retweet_to_tweet_ratio, hashtag_tweet_ratio, url_tweet_ratio,         media_tweet_ratio,
          avg_favorite_per_tweet, avg_tweets_per_day,  has_profile_url,         has_description,
          is_verified,            status_count,        account_age_days,        dialogue};
}

const std::array<std::string_view, kMessageFeatureCount>& MessageFeatures::names() {
  static const std::array<std::string_view, kMessageFeatureCount> kNames{
      "quoted_status", "is_retweet",   "retweet_count", "retweet_status",   "favorited_count", "has_hashtag",
      "has_url",       "has_mentions", "has_media",     "avg_tweet_length", "sentiment_score"};
  return kNames;
}

std::array<double, kMessageFeatureCount> MessageFeatures::values() const {
  return {quoted_status, is_retweet,   retweet_count, retweet_status,   favorited_count, has_hashtag,
          has_url,       has_mentions, has_media,     avg_tweet_length, sentiment_score};
}

Lexicon::Lexicon(std::unordered_map<std::string, double> polarity) : polarity_(std::move(polarity)) {}

Lexicon Lexicon::parse(std::string_view tsv) {
  std::unordered_map<std::string, double> table;
  std::size_t line_no = 0;
  std::istringstream in{std::string(tsv)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw MalformedLine("lexicon", line_no, "expected token<TAB>polarity");
    std::string token = line.substr(0, tab);
    std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) { return std::tolower(c); });
    const std::string value_text = line.substr(tab + 1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size() || !(value >= -1.0 && value <= 1.0))
      throw MalformedLine("lexicon", line_no, "polarity must be a number in [-1, 1]");
    if (token.empty()) throw MalformedLine("lexicon", line_no, "empty token");
    table[token] = value;
  }
  return Lexicon(std::move(table));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon kBuiltin = parse(kDefaultLexiconTsv);
  return kBuiltin;
}

const double* Lexicon::find(std::string_view token) const {
  auto it = polarity_.find(std::string(token));
  return it == polarity_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, double>> Lexicon::entries() const {
  std::vector<std::pair<std::string, double>> out(polarity_.begin(), polarity_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double sentiment_score(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  double sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double* polarity = lexicon.find(tokens[i]);
    if (!polarity) continue;
    const bool negated = i > 0 && is_negation(tokens[i - 1]);
    sum += negated ? -*polarity : *polarity;
    ++matched;
  }
  if (matched == 0) return 0.0;
  return std::clamp(sum / static_cast<double>(matched), -1.0, 1.0);
}

UserFeatures user_features(const UserRecord& u, std::span<const TweetRecord* const> authored,
                           std::size_t receiver_to_spreader_history, Timestamp snapshot) {
  UserFeatures f;
  f.followers_count = static_cast<double>(u.followers_count);
  f.friends_count = static_cast<double>(u.friends_count);
  f.followers_friends_ratio =
      static_cast<double>(u.followers_count) / static_cast<double>(std::max<std::int64_t>(u.friends_count, 1));

  if (!authored.empty()) {
    std::size_t directed = 0, with_hashtag = 0, with_url = 0, with_media = 0;
    double retweets = 0, favorites = 0;
    for (const TweetRecord* t : authored) {
      if (t->mentions > 0 && !t->is_retweet) ++directed;
      if (t->hashtags > 0) ++with_hashtag;
      if (t->urls > 0) ++with_url;
      if (t->media > 0) ++with_media;
      retweets += static_cast<double>(t->retweet_count);
      favorites += static_cast<double>(t->favorited_count);
    }
    const double n = static_cast<double>(authored.size());
    f.directed_tweets_ratio = static_cast<double>(directed) / n;
    f.retweet_to_tweet_ratio = retweets / n;
    f.hashtag_tweet_ratio = static_cast<double>(with_hashtag) / n;
    f.url_tweet_ratio = static_cast<double>(with_url) / n;
    f.media_tweet_ratio = static_cast<double>(with_media) / n;
    f.avg_favorite_per_tweet = favorites / n;
  }

  const Timestamp age_seconds = snapshot - u.created_at;
  f.account_age_days = static_cast<double>(std::max<Timestamp>(age_seconds / 86400, 1));
  f.status_count = static_cast<double>(u.status_count);
  f.avg_tweets_per_day = f.status_count / f.account_age_days;
  f.has_profile_url = flag(u.has_profile_url);
  f.has_description = flag(u.has_description);
  f.is_verified = flag(u.verified);
  f.dialogue = flag(receiver_to_spreader_history > 0);
  return f;
}

MessageFeatures message_features(const TweetRecord& t, const Lexicon& lexicon) {
  MessageFeatures m;
  m.quoted_status = flag(t.quoted_status);
  m.is_retweet = flag(t.retweet_count > 0);
  m.retweet_count = static_cast<double>(t.retweet_count);
  m.retweet_status = flag(t.is_retweet);
  m.favorited_count = static_cast<double>(t.favorited_count);
  m.has_hashtag = flag(t.hashtags > 0);
  m.has_url = flag(t.urls > 0);
  m.has_mentions = flag(t.mentions > 0);
  m.has_media = flag(t.media > 0);
  m.avg_tweet_length = std::min(static_cast<double>(utf8_length(t.text)) / kMaxTweetLength, 1.0);
  m.sentiment_score = sentiment_score(t.text, lexicon);
  return m;
}

PersonaScores persona_scores(std::span<const AbuseLabel> labeled_tweets) {
  PersonaScores p;
  p.total = labeled_tweets.size();
  p.undefined = labeled_tweets.empty();
  if (p.undefined) return p;
  std::array<std::size_t, kNumLabels> counts{};
  for (AbuseLabel l : labeled_tweets) ++counts[index_of(l)];
  for (std::size_t i = 0; i < kNumLabels; ++i)
    p.score[i] = static_cast<double>(counts[i]) / static_cast<double>(p.total);
  return p;
}

std::string_view to_string(DiscriminatorClass c) noexcept {
  switch (c) {
    case DiscriminatorClass::NormalOnly: return "normal_only";
    case DiscriminatorClass::AbusiveOnly: return "abusive_only";
    case DiscriminatorClass::Mixed: return "mixed";
    case DiscriminatorClass::NoReactions: return "no_reactions";
  }
  return "mixed";
}

DiscriminatorClass discriminator_class(std::span<const AbuseLabel> reacted_labels) {
  if (reacted_labels.empty()) return DiscriminatorClass::NoReactions;
  if (std::all_of(reacted_labels.begin(), reacted_labels.end(), [](AbuseLabel l) { return l == AbuseLabel::Normal; }))
    return DiscriminatorClass::NormalOnly;
  if (std::all_of(reacted_labels.begin(), reacted_labels.end(), is_offensive)) return DiscriminatorClass::AbusiveOnly;
  return DiscriminatorClass::Mixed;
}

const std::vector<std::string>& EdgeFeatureVector::names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> n = prefixed("spreader.", UserFeatures::names());
    auto r = prefixed("receiver.", UserFeatures::names());
    auto m = prefixed("message.", MessageFeatures::names());
    n.insert(n.end(), r.begin(), r.end());
    n.insert(n.end(), m.begin(), m.end());
    n.push_back("diffused");
    return n;
  }();
  return kNames;
}

EdgeFeatureVector assemble_edge_vector(const UserFeatures& spreader, const UserFeatures& receiver,
                                       const MessageFeatures& msg, bool diffused) {
  EdgeFeatureVector v;
  auto out = v.values.begin();
  for (double x : spreader.values()) *out++ = x;
  for (double x : receiver.values()) *out++ = x;
  for (double x : msg.values()) *out++ = x;
  *out = flag(diffused);
  return v;
}

const std::vector<std::string>& BaselineFeatureVector::names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> n = prefixed("author.", UserFeatures::names());
    auto m = prefixed("message.", MessageFeatures::names());
    n.insert(n.end(), m.begin(), m.end());
    return n;
  }();
  return kNames;
}

BaselineFeatureVector assemble_baseline_vector(const UserFeatures& author, const MessageFeatures& msg) {
  BaselineFeatureVector v;
  auto out = v.values.begin();
  for (double x : author.values()) *out++ = x;
  for (double x : msg.values()) *out++ = x;
  return v;
}

bool is_count_feature(std::string_view name) {
  const auto dot = name.rfind('.');
  const std::string_view base = dot == std::string_view::npos ? name : name.substr(dot + 1);
  return base == "followers_count" || base == "friends_count" || base == "status_count" ||
         base == "retweet_count" || base == "favorited_count";
}

FeatureExtractor::FeatureExtractor(const Corpus& corpus, const Lexicon& lexicon) : corpus_(corpus) {
  std::unordered_map<std::string_view, std::vector<const TweetRecord*>> authored;
  for (const auto& t : corpus.tweets()) authored[t.author_id].push_back(&t);

  const auto& users = corpus.users();
  std::vector<UserFeatures> user_rows(users.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < users.size(); ++i) {
    auto it = authored.find(users[i].user_id);
    std::span<const TweetRecord* const> mine;
    if (it != authored.end()) mine = it->second;
    user_rows[i] = user_features(users[i], mine, 0, corpus.snapshot_time());
  }
  for (std::size_t i = 0; i < users.size(); ++i) users_.try_emplace(users[i].user_id, user_rows[i]);

  const auto& tweets = corpus.tweets();
  std::vector<MessageFeatures> message_rows(tweets.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < tweets.size(); ++i) message_rows[i] = message_features(tweets[i], lexicon);
  for (std::size_t i = 0; i < tweets.size(); ++i) messages_.try_emplace(tweets[i].tweet_id, message_rows[i]);

  for (const auto& e : corpus.interactions())
    if (label_diffusion(e.reaction)) reactions_[{e.spreader_id, e.receiver_id}].emplace_back(e.timestamp, e.message_id);
  for (auto& [key, list] : reactions_) std::sort(list.begin(), list.end());
}

const UserFeatures& FeatureExtractor::user(std::string_view user_id) const {
  auto it = users_.find(std::string(user_id));
  if (it == users_.end()) throw DanglingReference("user", std::string(user_id));
  return it->second;
}

const MessageFeatures& FeatureExtractor::message(std::string_view tweet_id) const {
  auto it = messages_.find(std::string(tweet_id));
  if (it == messages_.end()) throw DanglingReference("message", std::string(tweet_id));
  return it->second;
}

std::size_t FeatureExtractor::prior_reactions(std::string_view reactor, std::string_view poster, Timestamp before,
                                              std::string_view exclude) const {
  auto it = reactions_.find({std::string(poster), std::string(reactor)});
  if (it == reactions_.end()) return 0;
  std::size_t n = 0;
  for (const auto& [ts, message_id] : it->second) {
    if (ts >= before) break;
    if (message_id != exclude) ++n;
  }
  return n;
}

EdgeFeatureVector FeatureExtractor::edge_vector(const PropagationEdge& edge) const {
  UserFeatures spreader = user(edge.spreader_id);
  UserFeatures receiver = user(edge.receiver_id);
  receiver.dialogue = flag(prior_reactions(edge.receiver_id, edge.spreader_id, edge.timestamp, edge.message_id) > 0);
  spreader.dialogue = flag(prior_reactions(edge.spreader_id, edge.receiver_id, edge.timestamp, edge.message_id) > 0);
  return assemble_edge_vector(spreader, receiver, message(edge.message_id), edge.diffused);
}

BaselineFeatureVector FeatureExtractor::baseline_vector(const TweetRecord& tweet) const {
  return assemble_baseline_vector(user(tweet.author_id), message(tweet.tweet_id));
}

}  // namespace crowdabuse

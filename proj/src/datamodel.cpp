#include "crowdabuse/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_set>

#include "crowdabuse/errors.hpp"
#include "json.hpp"

namespace crowdabuse {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Parsing context for one line of one file.
struct LineContext {
  const std::string& file;
  std::size_t line;

  [[noreturn]] void malformed(const std::string& detail) const { throw MalformedLine(file, line, detail); }
  [[noreturn]] void missing(const std::string& field) const { throw MissingField(file, line, field); }

  const json& field(const json& obj, const char* name) const {
    auto it = obj.find(name);
    if (it == obj.end() || it->is_null()) missing(name);
    return *it;
  }

  std::string key(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (v.is_string()) return v.get<std::string>();
    // Numeric ids are common in hydrated exports.
    if (v.is_number_integer()) return v.dump();
    malformed(std::string("field '") + name + "' must be a string");
  }

  std::string text(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (!v.is_string()) malformed(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
  }

  std::int64_t count(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (!v.is_number_integer()) malformed(std::string("field '") + name + "' must be an integer");
    return v.get<std::int64_t>();
  }

  bool flag(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (!v.is_boolean()) malformed(std::string("field '") + name + "' must be a boolean");
    return v.get<bool>();
  }

  Timestamp time(const json& obj, const char* name) const {
    const json& v = field(obj, name);
    if (!v.is_string()) malformed(std::string("field '") + name + "' must be an RFC 3339 string");
    auto ts = parse_rfc3339(v.get_ref<const std::string&>());
    if (!ts) malformed(std::string("field '") + name + "' is not RFC 3339: " + v.get<std::string>());
    return *ts;
  }
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

template <class Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  auto in = open_input(path);
  const std::string file = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    LineContext ctx{file, line_no};
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) ctx.malformed("invalid JSON");
    if (!obj.is_object()) ctx.malformed("expected a JSON object");
    fn(obj, ctx);
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<FollowEdge> read_follows(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string file = path.string();
  std::vector<FollowEdge> follows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      if (row != "followee_id,follower_id")
        throw MalformedLine(file, line_no, "expected header 'followee_id,follower_id'");
      header_seen = true;
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos)
      throw MalformedLine(file, line_no, "expected two comma-separated columns");
    const auto followee = trim(row.substr(0, comma));
    const auto follower = trim(row.substr(comma + 1));
    if (followee.empty()) throw MissingField(file, line_no, "followee_id");
    if (follower.empty()) throw MissingField(file, line_no, "follower_id");
    follows.push_back({std::string(followee), std::string(follower)});
  }
  if (!header_seen) throw MalformedLine(file, 1, "missing header 'followee_id,follower_id'");
  return follows;
}

std::optional<std::pair<std::string, std::string>> first_dangling_reference(const Corpus& c) {
  for (const auto& t : c.tweets())
    if (!c.find_user(t.author_id)) return std::pair{std::string("author"), t.author_id};
  for (const auto& f : c.follows()) {
    if (!c.find_user(f.followee_id)) return std::pair{std::string("followee"), f.followee_id};
    if (!c.find_user(f.follower_id)) return std::pair{std::string("follower"), f.follower_id};
  }
  for (const auto& e : c.interactions()) {
    if (!c.find_tweet(e.message_id)) return std::pair{std::string("message"), e.message_id};
    if (!c.find_user(e.spreader_id)) return std::pair{std::string("spreader"), e.spreader_id};
    if (!c.find_user(e.receiver_id)) return std::pair{std::string("receiver"), e.receiver_id};
  }
  return std::nullopt;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string_view to_string(AbuseLabel label) noexcept {
  switch (label) {
    case AbuseLabel::Abusive: return "abusive";
    case AbuseLabel::Hate: return "hate";
    case AbuseLabel::Spam: return "spam";
    case AbuseLabel::Normal: return "normal";
  }
  return "normal";
}

std::optional<AbuseLabel> parse_label(std::string_view text) {
  const std::string s = lowercase(text);
  if (s == "abusive") return AbuseLabel::Abusive;
  if (s == "hate" || s == "hateful") return AbuseLabel::Hate;
  if (s == "spam") return AbuseLabel::Spam;
  if (s == "normal") return AbuseLabel::Normal;
  return std::nullopt;
}

std::string_view to_string(Reaction reaction) noexcept {
  switch (reaction) {
    case Reaction::None: return "none";
    case Reaction::Like: return "like";
    case Reaction::Reply: return "reply";
    case Reaction::Quote: return "quote";
    case Reaction::Retweet: return "retweet";
  }
  return "none";
}

std::optional<Reaction> parse_reaction(std::string_view text) {
  if (text == "none") return Reaction::None;
  if (text == "like") return Reaction::Like;
  if (text == "reply") return Reaction::Reply;
  if (text == "quote") return Reaction::Quote;
  if (text == "retweet") return Reaction::Retweet;
  return std::nullopt;
}

Corpus::Corpus(std::vector<UserRecord> users, std::vector<TweetRecord> tweets, std::vector<FollowEdge> follows,
               std::vector<InteractionEvent> interactions, Timestamp snapshot_time)
    : users_(std::move(users)),
      tweets_(std::move(tweets)),
      follows_(std::move(follows)),
      interactions_(std::move(interactions)),
      snapshot_time_(snapshot_time) {
  user_index_.reserve(users_.size());
  for (std::size_t i = 0; i < users_.size(); ++i) user_index_.try_emplace(users_[i].user_id, i);
  tweet_index_.reserve(tweets_.size());
  for (std::size_t i = 0; i < tweets_.size(); ++i) tweet_index_.try_emplace(tweets_[i].tweet_id, i);
}

const UserRecord* Corpus::find_user(std::string_view user_id) const {
  auto it = user_index_.find(std::string(user_id));
  return it == user_index_.end() ? nullptr : &users_[it->second];
}

const TweetRecord* Corpus::find_tweet(std::string_view tweet_id) const {
  auto it = tweet_index_.find(std::string(tweet_id));
  return it == tweet_index_.end() ? nullptr : &tweets_[it->second];
}

bool same_content(const Corpus& a, const Corpus& b) {
  if (a.snapshot_time() != b.snapshot_time()) return false;
  auto sorted = [](auto v, auto key) {
    std::sort(v.begin(), v.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
    return v;
  };
  auto user_key = [](const UserRecord& u) { return u.user_id; };
  auto tweet_key = [](const TweetRecord& t) { return t.tweet_id; };
  auto follow_key = [](const FollowEdge& f) { return std::tie(f.followee_id, f.follower_id); };
  auto event_key = [](const InteractionEvent& e) {
    return std::tie(e.message_id, e.spreader_id, e.receiver_id, e.timestamp, e.reaction);
  };
  return sorted(a.users(), user_key) == sorted(b.users(), user_key) &&
         sorted(a.tweets(), tweet_key) == sorted(b.tweets(), tweet_key) &&
         sorted(a.follows(), follow_key) == sorted(b.follows(), follow_key) &&
         sorted(a.interactions(), event_key) == sorted(b.interactions(), event_key);
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "users.jsonl", dir / "tweets.jsonl", dir / "follows.csv", dir / "interactions.jsonl"};
}

std::string describe(const Violation& v) { return v.kind + " '" + v.id + "': " + v.rule; }

Corpus read_corpus(const CorpusPaths& paths, Timestamp snapshot_time) {
  std::vector<UserRecord> users;
  for_each_jsonl(paths.users, [&](const json& o, const LineContext& ctx) {
    UserRecord u;
    u.user_id = ctx.key(o, "user_id");
    u.followers_count = ctx.count(o, "followers_count");
    u.friends_count = ctx.count(o, "friends_count");
    u.verified = ctx.flag(o, "verified");
    u.has_profile_url = ctx.flag(o, "has_profile_url");
    u.has_description = ctx.flag(o, "has_description");
    u.status_count = ctx.count(o, "status_count");
    u.created_at = ctx.time(o, "created_at");
    users.push_back(std::move(u));
  });

  std::vector<TweetRecord> tweets;
  for_each_jsonl(paths.tweets, [&](const json& o, const LineContext& ctx) {
    TweetRecord t;
    t.tweet_id = ctx.key(o, "tweet_id");
    t.author_id = ctx.key(o, "author_id");
    t.text = ctx.text(o, "text");
    if (auto it = o.find("label"); it != o.end() && !it->is_null()) {
      if (!it->is_string()) ctx.malformed("field 'label' must be a string");
      t.label = parse_label(it->get_ref<const std::string&>());
      if (!t.label) ctx.malformed("unknown label '" + it->get<std::string>() + "'");
    }
    t.created_at = ctx.time(o, "created_at");
    t.is_retweet = ctx.flag(o, "is_retweet");
    t.retweet_count = ctx.count(o, "retweet_count");
    t.favorited_count = ctx.count(o, "favorited_count");
    t.quoted_status = ctx.flag(o, "quoted_status");
    t.hashtags = ctx.count(o, "hashtags");
    t.urls = ctx.count(o, "urls");
    t.media = ctx.count(o, "media");
    t.mentions = ctx.count(o, "mentions");
    tweets.push_back(std::move(t));
  });

  auto follows = read_follows(paths.follows);

  std::vector<InteractionEvent> events;
  for_each_jsonl(paths.interactions, [&](const json& o, const LineContext& ctx) {
    InteractionEvent e;
    e.message_id = ctx.key(o, "message_id");
    e.spreader_id = ctx.key(o, "spreader_id");
    e.receiver_id = ctx.key(o, "receiver_id");
    const std::string reaction = ctx.text(o, "reaction");
    auto r = parse_reaction(reaction);
    if (!r) ctx.malformed("unknown reaction '" + reaction + "'");
    e.reaction = *r;
    e.timestamp = ctx.time(o, "timestamp");
    events.push_back(std::move(e));
  });

  return Corpus(std::move(users), std::move(tweets), std::move(follows), std::move(events), snapshot_time);
}

Corpus load_corpus(const CorpusPaths& paths, Timestamp snapshot_time) {
  Corpus corpus = read_corpus(paths, snapshot_time);
  if (auto dangling = first_dangling_reference(corpus)) throw DanglingReference(dangling->first, dangling->second);
  const auto violations = validate_corpus(corpus);
  if (!violations.empty()) {
    std::string msg = std::to_string(violations.size()) + " corpus violation(s); first: " + describe(violations.front());
    throw InvalidCorpus(msg);
  }
  return corpus;
}

std::vector<Violation> validate_corpus(const Corpus& c) {
  std::vector<Violation> out;
  const Timestamp snapshot = c.snapshot_time();

  std::unordered_set<std::string> seen;
  for (const auto& u : c.users()) {
    if (u.user_id.empty()) out.push_back({"user", u.user_id, "user_id nonempty"});
    if (!seen.insert(u.user_id).second) out.push_back({"user", u.user_id, "user_id unique"});
    if (u.followers_count < 0 || u.friends_count < 0 || u.status_count < 0)
      out.push_back({"user", u.user_id, "counts nonnegative"});
    if (u.created_at > snapshot) out.push_back({"user", u.user_id, "created_at <= snapshot_time"});
  }

  seen.clear();
  for (const auto& t : c.tweets()) {
    if (t.tweet_id.empty()) out.push_back({"tweet", t.tweet_id, "tweet_id nonempty"});
    if (!seen.insert(t.tweet_id).second) out.push_back({"tweet", t.tweet_id, "tweet_id unique"});
    if (!c.find_user(t.author_id)) out.push_back({"tweet", t.tweet_id, "author_id resolves"});
    if (t.retweet_count < 0 || t.favorited_count < 0 || t.hashtags < 0 || t.urls < 0 || t.media < 0 ||
        t.mentions < 0)
      out.push_back({"tweet", t.tweet_id, "counts nonnegative"});
    if (t.created_at > snapshot) out.push_back({"tweet", t.tweet_id, "created_at <= snapshot_time"});
  }

  std::set<std::pair<std::string_view, std::string_view>> pairs;
  for (const auto& f : c.follows()) {
    const std::string id = f.followee_id + "->" + f.follower_id;
    if (!c.find_user(f.followee_id)) out.push_back({"follow", id, "followee resolves"});
    if (!c.find_user(f.follower_id)) out.push_back({"follow", id, "follower resolves"});
    if (f.followee_id == f.follower_id) out.push_back({"follow", id, "no self-loop"});
    if (!pairs.emplace(f.followee_id, f.follower_id).second) out.push_back({"follow", id, "no duplicate pair"});
  }

  for (const auto& e : c.interactions()) {
    const std::string id = e.message_id + ":" + e.spreader_id + "->" + e.receiver_id;
    if (!c.find_tweet(e.message_id)) out.push_back({"interaction", id, "message resolves"});
    if (!c.find_user(e.spreader_id)) out.push_back({"interaction", id, "spreader resolves"});
    if (!c.find_user(e.receiver_id)) out.push_back({"interaction", id, "receiver resolves"});
    if (!pairs.contains({e.spreader_id, e.receiver_id}))
      out.push_back({"interaction", id, "(spreader, receiver) is a follow edge"});
  }
  return out;
}

void save_corpus(const Corpus& corpus, const CorpusPaths& paths) {
  {
    auto out = open_output(paths.users);
    for (const auto& u : corpus.users()) {
      ordered_json o;
      o["user_id"] = u.user_id;
      o["followers_count"] = u.followers_count;
      o["friends_count"] = u.friends_count;
      o["verified"] = u.verified;
      o["has_profile_url"] = u.has_profile_url;
      o["has_description"] = u.has_description;
      o["status_count"] = u.status_count;
      o["created_at"] = format_rfc3339(u.created_at);
      out << o.dump() << '\n';
    }
  }
  {
    auto out = open_output(paths.tweets);
    for (const auto& t : corpus.tweets()) {
      ordered_json o;
      o["tweet_id"] = t.tweet_id;
      o["author_id"] = t.author_id;
      o["text"] = t.text;
      if (t.label) o["label"] = std::string(to_string(*t.label));
      o["created_at"] = format_rfc3339(t.created_at);
      o["is_retweet"] = t.is_retweet;
      o["retweet_count"] = t.retweet_count;
      o["favorited_count"] = t.favorited_count;
      o["quoted_status"] = t.quoted_status;
      o["hashtags"] = t.hashtags;
      o["urls"] = t.urls;
      o["media"] = t.media;
      o["mentions"] = t.mentions;
      out << o.dump() << '\n';
    }
  }
  {
    auto out = open_output(paths.follows);
    out << "followee_id,follower_id\n";
    for (const auto& f : corpus.follows()) out << f.followee_id << ',' << f.follower_id << '\n';
  }
  {
    auto out = open_output(paths.interactions);
    for (const auto& e : corpus.interactions()) {
      ordered_json o;
      o["message_id"] = e.message_id;
      o["spreader_id"] = e.spreader_id;
      o["receiver_id"] = e.receiver_id;
      o["reaction"] = std::string(to_string(e.reaction));
      o["timestamp"] = format_rfc3339(e.timestamp);
      out << o.dump() << '\n';
    }
  }
}

std::size_t LabelDistribution::labeled() const noexcept {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

double LabelDistribution::fraction(AbuseLabel label) const noexcept {
  const std::size_t total = labeled();
  return total == 0 ? 0.0 : static_cast<double>(counts[index_of(label)]) / static_cast<double>(total);
}

LabelDistribution label_distribution(const Corpus& corpus) {
  LabelDistribution dist;
  for (const auto& t : corpus.tweets()) {
    if (t.label)
      ++dist.counts[index_of(*t.label)];
    else
      ++dist.unlabeled;
  }
  return dist;
}

}  // namespace crowdabuse

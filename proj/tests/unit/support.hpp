#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "crowdabuse/datamodel.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("crowdabuse_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline constexpr crowdabuse::Timestamp kSnapshot = 1590969600;  // 2020-06-01T00:00:00Z
inline constexpr crowdabuse::Timestamp kDay = 86400;

inline crowdabuse::UserRecord user(std::string id, std::int64_t followers = 10, std::int64_t friends = 10) {
  crowdabuse::UserRecord u;
  u.user_id = std::move(id);
  u.followers_count = followers;
  u.friends_count = friends;
  u.status_count = 100;
  u.created_at = kSnapshot - 100 * kDay;
  return u;
}

inline crowdabuse::TweetRecord tweet(std::string id, std::string author, std::optional<crowdabuse::AbuseLabel> label,
                                     std::string text = "hello world") {
  crowdabuse::TweetRecord t;
  t.tweet_id = std::move(id);
  t.author_id = std::move(author);
  t.label = label;
  t.text = std::move(text);
  t.created_at = kSnapshot - 10 * kDay;
  return t;
}

inline crowdabuse::InteractionEvent event(std::string msg, std::string spreader, std::string receiver,
                                          crowdabuse::Reaction r, crowdabuse::Timestamp ts = kSnapshot - kDay) {
  return {std::move(msg), std::move(spreader), std::move(receiver), r, ts};
}

/// a -> {b, c}, b -> {c}; t1 by a (abusive), t2 by b (normal), t3 by c (unlabeled, no events).
inline crowdabuse::Corpus small_corpus() {
  using crowdabuse::AbuseLabel;
  using crowdabuse::Reaction;
  std::vector<crowdabuse::UserRecord> users{user("a", 100, 50), user("b"), user("c")};
  std::vector<crowdabuse::TweetRecord> tweets{tweet("t1", "a", AbuseLabel::Abusive, "you stupid idiot"),
                                              tweet("t2", "b", AbuseLabel::Normal, "have a great day"),
                                              tweet("t3", "c", std::nullopt)};
  std::vector<crowdabuse::FollowEdge> follows{{"a", "b"}, {"a", "c"}, {"b", "c"}};
  std::vector<crowdabuse::InteractionEvent> events{
      event("t1", "a", "b", Reaction::Retweet, kSnapshot - 5 * kDay),
      event("t1", "a", "c", Reaction::None, kSnapshot - 5 * kDay + 60),
      event("t1", "b", "c", Reaction::Like, kSnapshot - 5 * kDay + 120),
      event("t2", "b", "c", Reaction::None, kSnapshot - 4 * kDay),
  };
  return {std::move(users), std::move(tweets), std::move(follows), std::move(events), kSnapshot};
}

}  // namespace testing

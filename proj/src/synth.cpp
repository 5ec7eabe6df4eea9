#include "crowdabuse/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/features.hpp"
#include "crowdabuse/rng.hpp"

namespace crowdabuse {

namespace {

// Sub-stream identifiers for derive_seed.
constexpr std::uint64_t kUserStream = 1;
constexpr std::uint64_t kGraphStream = 2;
constexpr std::uint64_t kMessageStream = 1ULL << 32;
constexpr std::uint64_t kEdgeStream = 2ULL << 32;

constexpr Timestamp kDay = 86400;

// Token pools. Polarity pools match data/lexicon.tsv; neutral words are absent from it.
constexpr std::array kNeutral{"today", "just",  "people", "time", "game", "work", "news", "going", "now",
                              "think", "really", "know",  "see",  "new",  "world", "life", "week", "city",
                              "team",  "this",  "that",   "with", "they", "about", "what", "your", "here"};
constexpr std::array kPositive{"good",  "great", "love",  "happy",     "awesome",   "amazing", "nice",
                               "thanks", "beautiful", "best", "fun", "excellent", "wonderful", "glad",
                               "cool",  "enjoy", "lucky", "congrats",  "proud"};
constexpr std::array kNegative{"bad",  "sad",   "angry", "annoying", "awful", "ugly",
                               "boring", "wrong", "sick", "fail",     "shame", "terrible"};
constexpr std::array kStrong{"hate",  "stupid", "idiot", "disgusting", "pathetic", "trash", "loser",
                             "worthless", "moron", "scum", "vile",      "filthy",   "dumb",  "worst"};
constexpr std::array kPromo{"free", "win", "bonus", "click", "deal", "offer", "link", "follow", "now", "prize"};

enum TokenKind : std::size_t { kNeutralTok, kPositiveTok, kNegativeTok, kStrongTok, kPromoTok, kTokenKinds };

// Token-kind mixture per label (AbuseLabel order).
constexpr std::array<std::array<double, kTokenKinds>, kNumLabels> kTokenProfile{{
    {0.55, 0.04, 0.20, 0.18, 0.03},  // abusive
    {0.55, 0.03, 0.12, 0.27, 0.03},  // hate
    {0.50, 0.15, 0.02, 0.00, 0.33},  // spam
    {0.66, 0.22, 0.08, 0.01, 0.03},  // normal
}};

// P(count > 0) for mentions, hashtags, urls, media per label.
constexpr std::array<std::array<double, 4>, kNumLabels> kEntityProfile{{
    {0.70, 0.20, 0.10, 0.15},
    {0.50, 0.35, 0.10, 0.20},
    {0.20, 0.60, 0.80, 0.30},
    {0.35, 0.25, 0.25, 0.25},
}};

// Reaction kinds given diffusion: like, reply, quote, retweet.
constexpr std::array<double, 4> kReactionMix{0.45, 0.20, 0.10, 0.25};

template <std::size_t N>
std::array<double, N> blend(const std::array<double, N>& own, const std::array<double, N>& background, double c) {
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = c * own[i] + (1.0 - c) * background[i];
  return out;
}

template <std::size_t N>
std::array<double, N> prior_mixture(const std::array<std::array<double, N>, kNumLabels>& table,
                                    const std::array<double, kNumLabels>& priors) {
  std::array<double, N> out{};
  for (std::size_t l = 0; l < kNumLabels; ++l)
    for (std::size_t i = 0; i < N; ++i) out[i] += priors[l] * table[l][i];
  return out;
}

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& pool) {
  return pool[rng.below(N)];
}

std::string user_id(std::size_t i) { return "u" + std::to_string(i); }

struct UserState {
  double reactivity = 1.0;
  double ratio = 1.0;  // followers / max(friends, 1)
};

std::string make_text(Rng& rng, const std::array<double, kTokenKinds>& mix, std::size_t mentions,
                      std::size_t hashtags, std::size_t urls, std::size_t n_users) {
  std::string text;
  auto append = [&](std::string_view word) {
    if (!text.empty()) text.push_back(' ');
    text += word;
  };
  for (std::size_t i = 0; i < mentions; ++i) append("@" + user_id(rng.below(n_users)));
  const std::size_t words = 6 + rng.poisson(8.0);
  for (std::size_t i = 0; i < words; ++i) {
    const auto kind = static_cast<TokenKind>(rng.categorical(mix));
    if (kind != kNeutralTok && rng.bernoulli(0.05)) append("not");
    switch (kind) {
      case kNeutralTok: append(pick(rng, kNeutral)); break;
      case kPositiveTok: append(pick(rng, kPositive)); break;
      case kNegativeTok: append(pick(rng, kNegative)); break;
      case kStrongTok: append(pick(rng, kStrong)); break;
      default: append(pick(rng, kPromo)); break;
    }
  }
  for (std::size_t i = 0; i < hashtags; ++i) append(std::string("#") + pick(rng, kNeutral));
  for (std::size_t i = 0; i < urls; ++i) append("https://t.co/" + std::to_string(rng.below(1000000)));
  return text;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidConfig("synth: '" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  return out;
}

std::uint64_t parse_count(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw InvalidConfig("synth: '" + std::string(key) + "' expects a nonnegative integer, got '" +
                        std::string(value) + "'");
  return out;
}

std::array<double, kNumLabels> parse_four(std::string_view key, std::string_view value) {
  std::array<double, kNumLabels> out{};
  std::size_t i = 0;
  while (true) {
    const auto comma = value.find(',');
    if (i >= kNumLabels) throw InvalidConfig("synth: '" + std::string(key) + "' expects four comma-separated values");
    out[i++] = parse_double(key, value.substr(0, comma));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (i != kNumLabels) throw InvalidConfig("synth: '" + std::string(key) + "' expects four comma-separated values");
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  double total = 0.0;
  for (double p : label_priors) {
    if (!(p >= 0.0)) throw InvalidConfig("synth: label priors must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidConfig("synth: label priors must sum to 1");
  for (double m : multipliers)
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidConfig("synth: reaction multipliers must be finite and >= 0");
  if (!(base_rate > 0.0 && base_rate < 1.0)) throw InvalidConfig("synth: base_rate must lie in (0, 1)");
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) throw InvalidConfig("synth: signal must lie in [0, 1]");
  if (!(content_signal >= 0.0 && content_signal <= 1.0))
    throw InvalidConfig("synth: content_signal must lie in [0, 1]");
  if (!(follow_back >= 0.0 && follow_back <= 1.0)) throw InvalidConfig("synth: follow_back must lie in [0, 1]");
  if (!(mean_out_degree >= 1.0) || !std::isfinite(mean_out_degree))
    throw InvalidConfig("synth: follow_degree must be >= 1");
  if (!(user_spread >= 0.0) || !std::isfinite(user_spread)) throw InvalidConfig("synth: user_spread must be >= 0");
  if (n_messages > 0 && n_users == 0) throw InvalidConfig("synth: messages need at least one user");
}

void SynthConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "users") n_users = parse_count(key, value);
  else if (key == "follow_degree") mean_out_degree = parse_double(key, value);
  else if (key == "follow_back") follow_back = parse_double(key, value);
  else if (key == "messages") n_messages = parse_count(key, value);
  else if (key == "priors") label_priors = parse_four(key, value);
  else if (key == "base_rate") base_rate = parse_double(key, value);
  else if (key == "multipliers") multipliers = parse_four(key, value);
  else if (key == "user_spread") user_spread = parse_double(key, value);
  else if (key == "signal") signal_strength = parse_double(key, value);
  else if (key == "content_signal") content_signal = parse_double(key, value);
  else if (key == "max_hop1") max_hop1 = parse_count(key, value);
  else if (key == "max_hop2") max_hop2 = parse_count(key, value);
  else if (key == "seed") seed = parse_count(key, value);
  else if (key == "snapshot") {
    auto ts = parse_rfc3339(value);
    if (!ts) throw InvalidConfig("synth: snapshot must be RFC 3339");
    snapshot = *ts;
  } else {
    throw InvalidConfig("synth: unknown parameter '" + std::string(key) + "'");
  }
}

void SynthConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("synth: cannot open config " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig("synth: config line without '=': " + std::string(row));
    set(trim(row.substr(0, eq)), row.substr(eq + 1));
  }
}

SynthResult generate(const SynthConfig& config) {
  config.validate();
  const std::size_t n_users = config.n_users;
  const double s = config.signal_strength;
  const double c = config.content_signal;

  // Follow graph: each new user follows ~mean_out_degree earlier users chosen
  // proportionally to (followers + 1); each follow is reciprocated with
  // probability follow_back.
  std::vector<FollowEdge> follows;
  std::vector<std::vector<std::size_t>> followers(n_users);
  std::vector<std::size_t> friends(n_users, 0);
  {
    Rng rng(derive_seed(config.seed, kGraphStream));
    std::vector<std::size_t> attachment;  // user i appears followers(i) + 1 times
    for (std::size_t i = 0; i < n_users; ++i) {
      const std::size_t want = std::min<std::size_t>(i, 1 + rng.poisson(config.mean_out_degree - 1.0));
      std::vector<std::size_t> chosen;
      while (chosen.size() < want) {
        const std::size_t j = attachment[rng.below(attachment.size())];
        if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
      }
      for (std::size_t j : chosen) {
        follows.push_back({user_id(j), user_id(i)});
        followers[j].push_back(i);
        ++friends[i];
        attachment.push_back(j);
        if (rng.bernoulli(config.follow_back)) {
          follows.push_back({user_id(i), user_id(j)});
          followers[i].push_back(j);
          ++friends[j];
          attachment.push_back(i);
        }
      }
      attachment.push_back(i);
    }
  }

  std::vector<UserRecord> users(n_users);
  std::vector<UserState> state(n_users);
  {
    Rng rng(derive_seed(config.seed, kUserStream));
    const double sigma = config.user_spread;
    for (std::size_t i = 0; i < n_users; ++i) {
      UserRecord& u = users[i];
      u.user_id = user_id(i);
      const auto age_days = static_cast<Timestamp>(30 + rng.below(2970));
      u.created_at = config.snapshot - age_days * kDay - static_cast<Timestamp>(rng.below(kDay));
      u.verified = rng.bernoulli(0.03);
      u.has_profile_url = rng.bernoulli(0.45);
      u.has_description = rng.bernoulli(0.8);
      u.status_count = static_cast<std::int64_t>(rng.lognormal(6.0, 1.2));
      u.followers_count = static_cast<std::int64_t>(followers[i].size()) + static_cast<std::int64_t>(rng.lognormal(4.0, 1.5));
      u.friends_count = static_cast<std::int64_t>(friends[i]) + static_cast<std::int64_t>(rng.lognormal(4.0, 1.5));
      state[i].reactivity = rng.lognormal(-0.5 * sigma * sigma, sigma);
      state[i].ratio = static_cast<double>(u.followers_count) /
                       static_cast<double>(std::max<std::int64_t>(u.friends_count, 1));
    }
  }

  const auto token_background = prior_mixture(kTokenProfile, config.label_priors);
  const auto entity_background = prior_mixture(kEntityProfile, config.label_priors);

  Manifest manifest;
  std::vector<TweetRecord> tweets(config.n_messages);
  std::vector<InteractionEvent> events;
  // Running sums for the planted correlation.
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t n_edges = 0;

  for (std::size_t m = 0; m < config.n_messages; ++m) {
    Rng rng(derive_seed(config.seed, kMessageStream + m));
    TweetRecord& t = tweets[m];
    const std::size_t author = rng.below(n_users);
    const auto label = static_cast<AbuseLabel>(rng.categorical(config.label_priors));
    const std::size_t li = index_of(label);
    t.tweet_id = "t" + std::to_string(m);
    t.author_id = user_id(author);
    t.label = label;
    const Timestamp earliest = std::max(users[author].created_at, config.snapshot - 365 * kDay);
    const Timestamp latest = config.snapshot - kDay;
    t.created_at = earliest >= latest ? earliest : earliest + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(latest - earliest)));

    const auto entities = blend(kEntityProfile[li], entity_background, c);
    auto entity_count = [&](double p) { return rng.bernoulli(p) ? 1 + static_cast<std::int64_t>(rng.poisson(0.5)) : 0; };
    t.mentions = entity_count(entities[0]);
    t.hashtags = entity_count(entities[1]);
    t.urls = entity_count(entities[2]);
    t.media = entity_count(entities[3]);
    t.is_retweet = rng.bernoulli(0.15);
    t.quoted_status = rng.bernoulli(0.05);
    t.retweet_count = static_cast<std::int64_t>(rng.lognormal(0.5, 1.2));
    t.favorited_count = static_cast<std::int64_t>(rng.lognormal(1.0, 1.3));
    t.text = make_text(rng, blend(kTokenProfile[li], token_background, c), static_cast<std::size_t>(t.mentions),
                       static_cast<std::size_t>(t.hashtags), static_cast<std::size_t>(t.urls), n_users);

    auto& counts = manifest.per_label[li];
    ++counts.messages;
    const double lambda = 1.0 + s * (config.multipliers[li] - 1.0);
    std::unordered_set<std::size_t> exposed{author};
    // Exposes `receiver` to the message through `spreader`; returns whether it diffused.
    auto expose = [&](std::size_t spreader, std::size_t receiver, Timestamp after) {
      Rng edge_rng(derive_seed(derive_seed(config.seed, kEdgeStream + m), receiver));
      const double coupling = (1.0 - s) + s * (0.5 + 1.0 / (1.0 + state[receiver].ratio));
      const double p = std::clamp(config.base_rate * lambda * state[receiver].reactivity * coupling, 0.0, 1.0);
      const bool diffused = edge_rng.uniform() < p;
      Reaction reaction = Reaction::None;
      if (diffused) reaction = static_cast<Reaction>(1 + edge_rng.categorical(kReactionMix));
      const Timestamp ts = after + 60 * static_cast<Timestamp>(1 + edge_rng.below(720));
      events.push_back({t.tweet_id, user_id(spreader), user_id(receiver), reaction, std::min(ts, config.snapshot)});

      ++counts.edges;
      counts.diffused += diffused;
      const double x = std::log(std::max(state[receiver].ratio, 1e-6)), y = diffused ? 1.0 : 0.0;
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
      ++n_edges;
      return std::pair{diffused, ts};
    };

    auto sample = [&](const std::vector<std::size_t>& pool, std::size_t cap) {
      std::vector<std::size_t> out;
      for (std::size_t f : pool)
        if (!exposed.contains(f)) out.push_back(f);
      rng.shuffle(out);
      if (out.size() > cap) out.resize(cap);
      std::sort(out.begin(), out.end());
      for (std::size_t f : out) exposed.insert(f);
      return out;
    };

    std::vector<std::pair<std::size_t, Timestamp>> diffusers;
    for (std::size_t r : sample(followers[author], config.max_hop1)) {
      auto [diffused, ts] = expose(author, r, t.created_at);
      if (diffused) diffusers.emplace_back(r, ts);
    }
    for (const auto& [d, ts] : diffusers)
      for (std::size_t r : sample(followers[d], config.max_hop2)) expose(d, r, ts);
  }

  manifest.n_users = n_users;
  manifest.n_tweets = tweets.size();
  manifest.n_follows = follows.size();
  manifest.n_interactions = events.size();
  manifest.snapshot = config.snapshot;
  manifest.seed = config.seed;
  manifest.signal_strength = s;
  for (std::size_t i = 0; i < n_users; ++i) manifest.out_degrees[user_id(i)] = followers[i].size();
  for (const auto& e : events) (e.reaction == Reaction::None ? manifest.edges_not_diffused : manifest.edges_diffused)++;
  if (n_edges > 1) {
    const double n = static_cast<double>(n_edges);
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n), vy = syy / n - (sy / n) * (sy / n);
    manifest.planted_correlation = vx > 0 && vy > 0 ? cov / std::sqrt(vx * vy) : 0.0;
  }

  return {Corpus(std::move(users), std::move(tweets), std::move(follows), std::move(events), config.snapshot),
          std::move(manifest)};
}

void write_synth(const SynthResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_corpus(result.corpus, CorpusPaths::in_directory(dir));
  {
    std::ofstream out(dir / "lexicon.tsv", std::ios::binary);
    out << "# token\tpolarity in [-1, 1]\n";
    for (const auto& [token, polarity] : Lexicon::builtin().entries()) out << token << '\t' << polarity << '\n';
    if (!out) throw Error("cannot write " + (dir / "lexicon.tsv").string());
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << to_json(result.manifest).dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
}

nlohmann::ordered_json to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["n_users"] = m.n_users;
  j["n_tweets"] = m.n_tweets;
  j["n_follows"] = m.n_follows;
  j["n_interactions"] = m.n_interactions;
  j["snapshot"] = format_rfc3339(m.snapshot);
  j["seed"] = m.seed;
  j["signal_strength"] = m.signal_strength;
  nlohmann::ordered_json per_label;
  for (AbuseLabel l : kAllLabels) {
    const auto& c = m.per_label[index_of(l)];
    per_label[std::string(to_string(l))] = {{"messages", c.messages}, {"edges", c.edges}, {"diffused", c.diffused}};
  }
  j["per_label"] = per_label;
  j["edges_diffused"] = m.edges_diffused;
  j["edges_not_diffused"] = m.edges_not_diffused;
  j["planted_feature"] = "receiver.followers_friends_ratio";
  j["planted_correlation"] = m.planted_correlation;
  j["out_degrees"] = m.out_degrees;
  return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    m.n_users = j.at("n_users").get<std::size_t>();
    m.n_tweets = j.at("n_tweets").get<std::size_t>();
    m.n_follows = j.at("n_follows").get<std::size_t>();
    m.n_interactions = j.at("n_interactions").get<std::size_t>();
    auto snapshot = parse_rfc3339(j.at("snapshot").get<std::string>());
    if (!snapshot) throw Error("manifest.json: bad snapshot");
    m.snapshot = *snapshot;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.signal_strength = j.at("signal_strength").get<double>();
    for (AbuseLabel l : kAllLabels) {
      const auto& c = j.at("per_label").at(std::string(to_string(l)));
      m.per_label[index_of(l)] = {c.at("messages").get<std::size_t>(), c.at("edges").get<std::size_t>(),
                                  c.at("diffused").get<std::size_t>()};
    }
    m.edges_diffused = j.at("edges_diffused").get<std::size_t>();
    m.edges_not_diffused = j.at("edges_not_diffused").get<std::size_t>();
    m.planted_correlation = j.at("planted_correlation").get<double>();
    m.out_degrees = j.at("out_degrees").get<std::map<std::string, std::size_t>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("manifest.json: ") + e.what());
  }
}

PlantReport plant_report(const Manifest& m) {
  PlantReport r;
  r.planted_correlation = m.planted_correlation;
  r.signal_strength = m.signal_strength;
  const auto& normal = m.per_label[index_of(AbuseLabel::Normal)];
  const double normal_rate =
      normal.edges == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : static_cast<double>(normal.diffused) / static_cast<double>(normal.edges);
  std::size_t edges = 0, diffused = 0;
  for (AbuseLabel l : kAllLabels) {
    const auto& c = m.per_label[index_of(l)];
    edges += c.edges;
    diffused += c.diffused;
    if (c.edges == 0) continue;
    PlantRow row{l, c.messages, c.edges, static_cast<double>(c.diffused) / static_cast<double>(c.edges), 0.0};
    row.ratio_to_normal = normal_rate > 0.0 ? row.diffusion_rate / normal_rate
                                            : std::numeric_limits<double>::quiet_NaN();
    r.rows.push_back(row);
  }
  r.overall_rate = edges == 0 ? 0.0 : static_cast<double>(diffused) / static_cast<double>(edges);
  return r;
}

nlohmann::ordered_json to_json(const PlantReport& r) {
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["signal_strength"] = r.signal_strength;
  j["overall_rate"] = r.overall_rate;
  j["planted_correlation"] = r.planted_correlation;
  auto& rows = j["labels"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"label", std::string(to_string(row.label))},
                    {"messages", row.messages},
                    {"edges", row.edges},
                    {"diffusion_rate", row.diffusion_rate},
                    {"ratio_to_normal", number(row.ratio_to_normal)}});
  return j;
}

}  // namespace crowdabuse

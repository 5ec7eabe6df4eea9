#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "crowdabuse/datamodel.hpp"
#include "json.hpp"

namespace crowdabuse {

/// Parameters of the synthetic corpus. Arrays indexed by AbuseLabel.
///
/// Reaction probability of receiver r to a message labeled L:
///   p = clip(base_rate * lambda_eff(L) * reactivity(r) * coupling(r), 0, 1)
///   lambda_eff(L) = 1 + s * (multiplier[L] - 1)
///   coupling(r)   = (1 - s) + s * (0.5 + 1 / (1 + followers_friends_ratio(r)))
/// with s = signal_strength, so s = 0 makes diffusion independent of both the
/// label and the receiver's follower/friend ratio.
struct SynthConfig {
  std::size_t n_users = 1000;
  double mean_out_degree = 8.0;  // followees chosen per new user (preferential attachment)
  double follow_back = 0.5;
  std::size_t n_messages = 2000;
  std::array<double, kNumLabels> label_priors{0.20, 0.04, 0.14, 0.62};
  double base_rate = 0.3;
  std::array<double, kNumLabels> multipliers{3.0, 3.5, 0.5, 1.0};
  double user_spread = 0.3;      // lognormal sigma of per-user reactivity (mean 1)
  double signal_strength = 1.0;  // s in [0, 1]
  double content_signal = 0.3;   // how strongly text/entities follow the label, in [0, 1]
  std::size_t max_hop1 = 12;     // exposures sampled from the author's followers
  std::size_t max_hop2 = 4;      // exposures sampled per first-hop diffuser
  Timestamp snapshot = 1590969600;  // 2020-06-01T00:00:00Z
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  /// Sets one parameter from its textual form (keys as in the CLI and config
  /// files: users, follow_degree, follow_back, messages, priors, base_rate,
  /// multipliers, user_spread, signal, content_signal, max_hop1, max_hop2,
  /// snapshot, seed). Throws InvalidConfig.
  void set(std::string_view key, std::string_view value);
  /// "key = value" lines, '#' comments.
  void load_file(const std::filesystem::path& path);
};

struct LabelEdgeCounts {
  std::size_t messages = 0;
  std::size_t edges = 0;
  std::size_t diffused = 0;
};

struct Manifest {
  std::size_t n_users = 0;
  std::size_t n_tweets = 0;
  std::size_t n_follows = 0;
  std::size_t n_interactions = 0;
  Timestamp snapshot = 0;
  std::uint64_t seed = 0;
  double signal_strength = 0.0;
  std::array<LabelEdgeCounts, kNumLabels> per_label{};
  std::map<std::string, std::size_t> out_degrees;  // followers per user
  std::size_t edges_diffused = 0;
  std::size_t edges_not_diffused = 0;
  /// Pearson correlation of log(receiver followers/friends ratio) with the
  /// diffused flag over all generated edges.
  double planted_correlation = 0.0;
};

struct SynthResult {
  Corpus corpus;
  Manifest manifest;
};

/// Deterministic in config (including seed).
SynthResult generate(const SynthConfig& config);

/// Writes users.jsonl, tweets.jsonl, follows.csv, interactions.jsonl,
/// lexicon.tsv and manifest.json into dir.
void write_synth(const SynthResult& result, const std::filesystem::path& dir);

nlohmann::ordered_json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

struct PlantRow {
  AbuseLabel label = AbuseLabel::Normal;
  std::size_t messages = 0;
  std::size_t edges = 0;
  double diffusion_rate = 0.0;
  double ratio_to_normal = 0.0;  // NaN when normal has no edges
};

struct PlantReport {
  std::vector<PlantRow> rows;  // labels with at least one edge
  double overall_rate = 0.0;
  double planted_correlation = 0.0;
  double signal_strength = 0.0;
};

PlantReport plant_report(const Manifest& manifest);
nlohmann::ordered_json to_json(const PlantReport& report);

}  // namespace crowdabuse

#include "crowdabuse/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "crowdabuse/errors.hpp"
#include "crowdabuse/rng.hpp"

namespace crowdabuse {

namespace {

const TweetRecord& labeled_tweet(const Corpus& corpus, std::string_view id) {
  const TweetRecord* t = corpus.find_tweet(id);
  if (t == nullptr) throw DanglingReference("message", std::string(id));
  if (!t->label) throw Error("message '" + std::string(id) + "' has no label");
  return *t;
}

std::uint64_t name_stream(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : name) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Pipeline::Pipeline(const Corpus& corpus, const Lexicon& lexicon)
    : corpus_(corpus), cascades_(derive_cascades(corpus)), features_(corpus, lexicon) {
  for (std::size_t i = 0; i < cascades_.size(); ++i) cascade_index_.emplace(cascades_[i].message_id, i);
}

const MessageCascade* Pipeline::cascade(std::string_view message_id) const {
  auto it = cascade_index_.find(std::string(message_id));
  return it == cascade_index_.end() ? nullptr : &cascades_[it->second];
}

Dataset Pipeline::edge_dataset(std::span<const std::string> message_ids) const {
  Dataset d{FeatureMatrix(EdgeFeatureVector::names()), {}};
  for (const auto& id : message_ids) {
    const AbuseLabel label = *labeled_tweet(corpus_, id).label;
    const MessageCascade* c = cascade(id);
    if (c == nullptr) continue;
    for (const auto& edge : c->edges) {
      d.x.append(features_.edge_vector(edge).values);
      d.labels.push_back(label);
    }
  }
  return d;
}

Dataset Pipeline::baseline_dataset(std::span<const std::string> message_ids) const {
  Dataset d{FeatureMatrix(BaselineFeatureVector::names()), {}};
  for (const auto& id : message_ids) {
    const TweetRecord& t = labeled_tweet(corpus_, id);
    d.x.append(features_.baseline_vector(t).values);
    d.labels.push_back(*t.label);
  }
  return d;
}

BlrModel Pipeline::train_crowdsourced(std::span<const std::string> message_ids, LabelMode mode,
                                      const BlrConfig& config) const {
  const Dataset d = edge_dataset(message_ids);
  return blr_train(d.x, d.labels, mode, config);
}

BlrModel Pipeline::train_baseline(std::span<const std::string> message_ids, LabelMode mode,
                                  const BlrConfig& config) const {
  const Dataset d = baseline_dataset(message_ids);
  return blr_train(d.x, d.labels, mode, config);
}

MessageVerdict Pipeline::predict(const BlrModel& crowdsourced, const BlrModel& baseline,
                                 std::string_view message_id) const {
  const MessageCascade* c = cascade(message_id);
  if (c == nullptr || c->edges.empty()) return predict_baseline(baseline, message_id);
  std::vector<EdgeFeatureVector> vectors;
  vectors.reserve(c->edges.size());
  for (const auto& edge : c->edges) vectors.push_back(features_.edge_vector(edge));
  return predict_message_crowdsourced(crowdsourced, *c, vectors);
}

MessageVerdict Pipeline::predict_baseline(const BlrModel& baseline, std::string_view message_id) const {
  const TweetRecord* t = corpus_.find_tweet(message_id);
  if (t == nullptr) throw DanglingReference("message", std::string(message_id));
  return predict_message_noncrowdsourced(baseline, t->tweet_id, features_.message(t->tweet_id),
                                         features_.user(t->author_id));
}

std::vector<int> truth_indices(const Corpus& corpus, std::span<const std::string> message_ids, LabelMode mode) {
  std::vector<int> y;
  y.reserve(message_ids.size());
  for (const auto& id : message_ids) y.push_back(class_index(*labeled_tweet(corpus, id).label, mode));
  return y;
}

ModelEvaluation evaluate_models(const Pipeline& pipeline, const BlrModel& crowdsourced, const BlrModel& baseline,
                                std::span<const std::string> message_ids, LabelMode mode) {
  const auto classes = class_names(mode);
  if (crowdsourced.classes != classes || baseline.classes != classes)
    throw Error("evaluate: models were not trained in " + std::string(to_string(mode)) + " mode");
  const std::vector<int> truth = truth_indices(pipeline.corpus(), message_ids, mode);
  std::vector<int> cro(message_ids.size()), noncro(message_ids.size());
  ModelEvaluation out;
  for (std::size_t i = 0; i < message_ids.size(); ++i) {
    const MessageVerdict v = pipeline.predict(crowdsourced, baseline, message_ids[i]);
    (v.mode == VerdictMode::Crowdsourced ? out.crowdsourced_verdicts : out.fallback_verdicts)++;
    cro[i] = v.label;
    noncro[i] = pipeline.predict_baseline(baseline, message_ids[i]).label;
  }
  const std::vector<std::string> ids(message_ids.begin(), message_ids.end());
  out.crowdsourced = evaluate_predictions(cro, truth, classes, ids);
  out.noncrowdsourced = evaluate_predictions(noncro, truth, classes, ids);
  out.comparison = compare_models(out.crowdsourced, out.noncrowdsourced);
  return out;
}

nlohmann::ordered_json to_json(const ModelEvaluation& e) {
  nlohmann::ordered_json j;
  j["messages"] = e.crowdsourced.message_ids.size();
  j["crowdsourced_verdicts"] = e.crowdsourced_verdicts;
  j["fallback_verdicts"] = e.fallback_verdicts;
  j["crowdsourced"] = to_json(e.crowdsourced);
  j["noncrowdsourced"] = to_json(e.noncrowdsourced);
  j["comparison"] = to_json(e.comparison);
  return j;
}

ExperimentResult run_experiment(const Pipeline& pipeline, const ExperimentConfig& config) {
  ExperimentResult r;
  const auto messages = labeled_messages(pipeline.corpus());
  r.split = split_messages(messages, config.ratios, config.seed);
  BlrConfig blr = config.blr;
  blr.seed = config.seed;
  r.crowdsourced = pipeline.train_crowdsourced(r.split.train, config.mode, blr);
  r.baseline = pipeline.train_baseline(r.split.train, config.mode, blr);
  r.validation = evaluate_models(pipeline, r.crowdsourced, r.baseline, r.split.validation, config.mode);
  r.test = evaluate_models(pipeline, r.crowdsourced, r.baseline, r.split.test, config.mode);
  return r;
}

nlohmann::ordered_json experiment_report(const ExperimentResult& r, const ExperimentConfig& config) {
  auto training = [](const BlrModel& m) {
    return nlohmann::ordered_json{{"iterations", m.iterations},
                                  {"converged", m.converged},
                                  {"final_objective", m.final_objective}};
  };
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(config.mode));
  j["seed"] = config.seed;
  j["sigma2"] = config.blr.sigma2;
  j["ratios"] = {config.ratios.train, config.ratios.validation, config.ratios.test};
  j["split"] = {{"train", r.split.train.size()},
                {"validation", r.split.validation.size()},
                {"test", r.split.test.size()}};
  j["training"] = {{"crowdsourced", training(r.crowdsourced)}, {"noncrowdsourced", training(r.baseline)}};
  j["validation"] = to_json(r.validation);
  j["test"] = to_json(r.test);
  return j;
}

TargetDataset user_dataset(const Pipeline& pipeline) {
  const Corpus& corpus = pipeline.corpus();
  std::vector<std::string> names;
  for (auto n : UserFeatures::names()) names.push_back("user." + std::string(n));
  for (AbuseLabel l : kAllLabels) names.push_back("persona." + std::string(to_string(l)));
  for (auto n : MessageFeatures::names()) names.push_back("posts.mean_" + std::string(n));

  std::unordered_map<std::string_view, std::vector<const TweetRecord*>> authored;
  for (const auto& t : corpus.tweets()) authored[t.author_id].push_back(&t);
  std::unordered_set<std::string_view> offensive_reactors;
  for (const auto& c : pipeline.cascades()) {
    if (!c.label || !is_offensive(*c.label)) continue;
    for (const auto& e : c.edges)
      if (e.diffused) offensive_reactors.insert(e.receiver_id);
  }

  TargetDataset d{FeatureMatrix(names), {}, {"offensive", "not_offensive"}};
  std::vector<double> row;
  for (const auto& u : corpus.users()) {
    row.clear();
    UserFeatures uf = pipeline.features().user(u.user_id);
    uf.dialogue = 0.0;
    for (double v : uf.values()) row.push_back(v);

    std::vector<AbuseLabel> labels;
    std::array<double, kMessageFeatureCount> mean{};
    bool posted_offensive = false;
    auto it = authored.find(u.user_id);
    if (it != authored.end()) {
      for (const TweetRecord* t : it->second) {
        if (t->label) {
          labels.push_back(*t->label);
          posted_offensive = posted_offensive || is_offensive(*t->label);
        }
        const auto values = pipeline.features().message(t->tweet_id).values();
        for (std::size_t k = 0; k < kMessageFeatureCount; ++k) mean[k] += values[k];
      }
      for (double& v : mean) v /= static_cast<double>(it->second.size());
    }
    const PersonaScores persona = persona_scores(labels);
    for (double v : persona.score) row.push_back(v);
    for (double v : mean) row.push_back(v);

    d.x.append(row);
    d.y.push_back(posted_offensive || offensive_reactors.contains(u.user_id) ? 0 : 1);
  }
  return d;
}

TargetDataset diffusion_dataset(const Pipeline& pipeline, bool offensive) {
  const auto& all = EdgeFeatureVector::names();
  TargetDataset d{FeatureMatrix(std::vector<std::string>(all.begin(), all.end() - 1)), {}, {"diffused", "not_diffused"}};
  for (const auto& c : pipeline.cascades()) {
    if (!c.label) continue;
    if (offensive ? !is_offensive(*c.label) : *c.label != AbuseLabel::Normal) continue;
    for (const auto& e : c.edges) {
      const auto v = pipeline.features().edge_vector(e);
      d.x.append(std::span<const double>(v.values).first(kEdgeFeatureCount - 1));
      d.y.push_back(e.diffused ? 0 : 1);
    }
  }
  return d;
}

RankingGroup rank_group(std::string name, const TargetDataset& data, const RankingConfig& config) {
  RankingGroup g;
  const std::size_t n = data.x.rows();
  ForestConfig forest = config.forest;
  forest.seed = derive_seed(config.forest.seed, name_stream(name));
  if (config.max_samples > 0 && n > config.max_samples) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(forest.seed, 0));
    rng.shuffle(idx);
    idx.resize(config.max_samples);
    std::sort(idx.begin(), idx.end());
    FeatureMatrix x(data.x.names);
    std::vector<int> y;
    for (std::size_t i : idx) {
      x.append(data.x.row(i));
      y.push_back(data.y[i]);
    }
    g.forest = rf_train(x, y, data.classes, forest);
    g.samples = idx.size();
  } else {
    g.forest = rf_train(data.x, data.y, data.classes, forest);
    g.samples = n;
  }
  g.name = std::move(name);
  g.ranking = rf_rank_features(g.forest, config.top_k);
  return g;
}

std::vector<RankingGroup> rank_features(const Pipeline& pipeline, const RankingConfig& config) {
  std::vector<RankingGroup> groups;
  groups.push_back(rank_group("user", user_dataset(pipeline), config));
  groups.push_back(rank_group("offensive", diffusion_dataset(pipeline, true), config));
  groups.push_back(rank_group("normal", diffusion_dataset(pipeline, false), config));
  return groups;
}

std::string format_ranking_tsv(std::span<const RankingGroup> groups) {
  std::string out = "group\trank\tfeature\timportance\n";
  for (const auto& g : groups)
    for (std::size_t i = 0; i < g.ranking.size(); ++i)
      out += g.name + '\t' + std::to_string(i + 1) + '\t' + g.ranking[i].name + '\t' +
             fixed(g.ranking[i].importance, 6) + '\n';
  return out;
}

std::vector<UserPersona> user_personas(const Pipeline& pipeline) {
  const Corpus& corpus = pipeline.corpus();
  std::unordered_map<std::string_view, std::vector<AbuseLabel>> posted, reacted;
  for (const auto& t : corpus.tweets())
    if (t.label) posted[t.author_id].push_back(*t.label);
  for (const auto& c : pipeline.cascades()) {
    if (!c.label) continue;
    for (const auto& e : c.edges)
      if (e.diffused) reacted[e.receiver_id].push_back(*c.label);
  }
  std::vector<UserPersona> out;
  out.reserve(corpus.users().size());
  for (const auto& u : corpus.users()) {
    UserPersona p;
    p.user_id = u.user_id;
    auto pi = posted.find(u.user_id);
    p.persona = persona_scores(pi == posted.end() ? std::span<const AbuseLabel>{} : pi->second);
    auto ri = reacted.find(u.user_id);
    const std::span<const AbuseLabel> r = ri == reacted.end() ? std::span<const AbuseLabel>{} : ri->second;
    p.discriminator = discriminator_class(r);
    p.reactions = r.size();
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::ordered_json to_json(const UserPersona& p) {
  nlohmann::ordered_json j;
  j["user_id"] = p.user_id;
  j["labeled_posts"] = p.persona.total;
  j["undefined"] = p.persona.undefined;
  nlohmann::ordered_json scores;
  for (AbuseLabel l : kAllLabels) scores[std::string(to_string(l))] = p.persona.of(l);
  j["scores"] = scores;
  j["reactions"] = p.reactions;
  j["discriminator"] = std::string(to_string(p.discriminator));
  return j;
}

nlohmann::ordered_json to_json(const MessageCascade& c) {
  nlohmann::ordered_json j;
  j["message_id"] = c.message_id;
  j["label"] = c.label ? nlohmann::ordered_json(std::string(to_string(*c.label))) : nlohmann::ordered_json(nullptr);
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : c.edges)
    edges.push_back({{"spreader_id", e.spreader_id},
                     {"receiver_id", e.receiver_id},
                     {"reaction", std::string(to_string(e.reaction))},
                     {"diffused", e.diffused}});
  return j;
}

nlohmann::ordered_json edge_features_json(const PropagationEdge& edge, const EdgeFeatureVector& v) {
  nlohmann::ordered_json j;
  j["message_id"] = edge.message_id;
  j["spreader_id"] = edge.spreader_id;
  j["receiver_id"] = edge.receiver_id;
  nlohmann::ordered_json f;
  const auto& names = EdgeFeatureVector::names();
  for (std::size_t i = 0; i < names.size(); ++i) f[names[i]] = v.values[i];
  j["features"] = f;
  return j;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace crowdabuse

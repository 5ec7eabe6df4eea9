#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdabuse/errors.hpp"
#include "crowdabuse/pipeline.hpp"
#include "crowdabuse/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace crowdabuse;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool g_log_json = false;

void log(const std::string& event, const ojson& fields = ojson::object()) {
  if (g_log_json) {
    ojson line{{"level", "info"}, {"event", event}};
    for (const auto& [k, v] : fields.items()) line[k] = v;
    std::cerr << line.dump() << '\n';
    return;
  }
  std::cerr << event;
  for (const auto& [k, v] : fields.items()) std::cerr << ' ' << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump());
  std::cerr << '\n';
}

void log_error(const std::string& message) {
  if (g_log_json)
    std::cerr << ojson{{"level", "error"}, {"message", message}}.dump() << '\n';
  else
    std::cerr << "error: " << message << '\n';
}

struct CorpusOptions {
  std::string data;
  std::string users, tweets, follows, interactions;
  std::string snapshot;
  std::string lexicon;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data, "directory holding users.jsonl, tweets.jsonl, follows.csv, interactions.jsonl");
    cmd->add_option("--users", users, "users.jsonl");
    cmd->add_option("--tweets", tweets, "tweets.jsonl");
    cmd->add_option("--follows", follows, "follows.csv");
    cmd->add_option("--interactions", interactions, "interactions.jsonl");
    cmd->add_option("--snapshot", snapshot, "RFC 3339 snapshot time (default: manifest.json next to the data)");
    cmd->add_option("--lexicon", lexicon, "polarity lexicon TSV (default: built in)");
  }

  CorpusPaths paths() const {
    CorpusPaths p;
    if (!data.empty()) p = CorpusPaths::in_directory(data);
    if (!users.empty()) p.users = users;
    if (!tweets.empty()) p.tweets = tweets;
    if (!follows.empty()) p.follows = follows;
    if (!interactions.empty()) p.interactions = interactions;
    if (p.users.empty()) throw UsageError("--users (or --data) is required");
    if (p.tweets.empty()) throw UsageError("--tweets (or --data) is required");
    if (p.follows.empty()) throw UsageError("--follows (or --data) is required");
    if (p.interactions.empty()) throw UsageError("--interactions (or --data) is required");
    return p;
  }

  Timestamp snapshot_time(const CorpusPaths& p) const {
    if (!snapshot.empty()) {
      auto ts = parse_rfc3339(snapshot);
      if (!ts) throw UsageError("--snapshot: not an RFC 3339 time: " + snapshot);
      return *ts;
    }
    const fs::path manifest = p.users.parent_path() / "manifest.json";
    if (!fs::exists(manifest)) throw UsageError("--snapshot is required (no manifest.json next to the users file)");
    return manifest_from_json(read_json(manifest)).snapshot;
  }

  Lexicon load_lexicon() const { return lexicon.empty() ? Lexicon::builtin() : Lexicon::load(lexicon); }

  Corpus load() const {
    const CorpusPaths p = paths();
    Corpus c = load_corpus(p, snapshot_time(p));
    log("loaded", {{"users", c.users().size()},
                   {"tweets", c.tweets().size()},
                   {"follows", c.follows().size()},
                   {"interactions", c.interactions().size()}});
    return c;
  }
};

SplitRatios parse_ratios(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--ratios: expected three comma-separated numbers, got '" + text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 3) throw UsageError("--ratios: expected three comma-separated numbers, got '" + text + "'");
  SplitRatios r{v[0], v[1], v[2]};
  try {
    r.check();
  } catch (const InvalidConfig& e) {
    throw UsageError(std::string("--ratios: ") + e.what());
  }
  return r;
}

LabelMode parse_mode(const std::string& text) {
  auto m = parse_label_mode(text);
  if (!m) throw UsageError("--mode: expected multiclass or offensive, got '" + text + "'");
  return *m;
}

LabelMode mode_of(const BlrModel& m) {
  if (m.classes == class_names(LabelMode::Multiclass)) return LabelMode::Multiclass;
  if (m.classes == class_names(LabelMode::Offensive)) return LabelMode::Offensive;
  throw Error("model classes match neither multiclass nor offensive mode");
}

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

void write_lines(const fs::path& path, const std::vector<ojson>& rows) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + '\n';
  write_text(path, text);
}

struct TrainOptions {
  std::uint64_t seed = 0;
  std::string ratios = "0.6,0.3,0.1";
  std::string split;
  double sigma2 = 100.0;
  int max_iters = 5000;
  double tol = 1e-8;
  std::string mode = "multiclass";

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "split seed")->required();
    cmd->add_option("--ratios", ratios, "train,validation,test fractions");
    cmd->add_option("--split", split, "reuse an existing split.json instead of splitting");
    cmd->add_option("--sigma2", sigma2, "prior variance")->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", tol, "relative objective tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", mode, "multiclass or offensive");
  }

  BlrConfig blr() const {
    BlrConfig c;
    c.sigma2 = sigma2;
    c.max_iters = max_iters;
    c.tol = tol;
    c.seed = seed;
    return c;
  }

  MessageSplit make_split(const Corpus& corpus, const fs::path& out) const {
    if (!split.empty()) return split_from_json(read_json(split));
    const auto messages = labeled_messages(corpus);
    MessageSplit s = split_messages(messages, parse_ratios(ratios), seed);
    write_json(out / "split.json", to_json(s));
    log("split", {{"train", s.train.size()}, {"validation", s.validation.size()}, {"test", s.test.size()}});
    return s;
  }
};

ojson training_summary(const BlrModel& m) {
  return {{"iterations", m.iterations}, {"converged", m.converged}, {"objective", m.final_objective}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowdsourced abuse detection on follower-graph cascades."};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--log-json", g_log_json, "log as JSON lines on stderr");
  std::string out_dir = ".";

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  SynthConfig synth_config;
  std::string synth_file;
  std::vector<std::string> synth_sets;
  synth->add_option("--seed", synth_config.seed, "generator seed")->required();
  synth->add_option("--config", synth_file, "key = value parameter file");
  synth->add_option("--set", synth_sets, "override one parameter, key=value (repeatable)");
  synth->add_option("--out", out_dir, "output directory");

  auto* validate = app.add_subcommand("validate", "check corpus invariants");
  CorpusOptions validate_corpus_opts;
  validate_corpus_opts.add(validate);

  auto* cascades = app.add_subcommand("cascades", "derive propagation cascades");
  CorpusOptions cascades_corpus;
  cascades_corpus.add(cascades);
  cascades->add_option("--out", out_dir, "output directory");

  auto* features = app.add_subcommand("features", "write the edge feature vectors");
  CorpusOptions features_corpus;
  features_corpus.add(features);
  features->add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train", "train the crowdsourced edge-level model");
  CorpusOptions train_corpus;
  TrainOptions train_opts;
  train_corpus.add(train);
  train_opts.add(train);
  train->add_option("--out", out_dir, "output directory");

  auto* train_baseline = app.add_subcommand("train-baseline", "train the non-crowdsourced baseline model");
  CorpusOptions baseline_corpus;
  TrainOptions baseline_opts;
  baseline_corpus.add(train_baseline);
  baseline_opts.add(train_baseline);
  train_baseline->add_option("--out", out_dir, "output directory");

  std::string model_path, baseline_path, split_path;
  auto* predict = app.add_subcommand("predict", "message verdicts for every message");
  CorpusOptions predict_corpus;
  predict_corpus.add(predict);
  predict->add_option("--model", model_path, "crowdsourced model (default OUT/model.json)");
  predict->add_option("--baseline", baseline_path, "baseline model (default OUT/model_baseline.json)");
  predict->add_option("--out", out_dir, "output directory");

  auto* evaluate = app.add_subcommand("evaluate", "compare both models on the held-out split");
  CorpusOptions evaluate_corpus;
  evaluate_corpus.add(evaluate);
  evaluate->add_option("--model", model_path, "crowdsourced model (default OUT/model.json)");
  evaluate->add_option("--baseline", baseline_path, "baseline model (default OUT/model_baseline.json)");
  evaluate->add_option("--split", split_path, "split (default OUT/split.json)");
  evaluate->add_option("--out", out_dir, "output directory");

  auto* rank = app.add_subcommand("rank", "random-forest feature rankings");
  CorpusOptions rank_corpus;
  RankingConfig rank_config;
  rank_corpus.add(rank);
  rank->add_option("--seed", rank_config.forest.seed, "forest seed")->required();
  rank->add_option("--trees", rank_config.forest.n_trees, "trees per forest")->check(CLI::PositiveNumber);
  rank->add_option("--max-depth", rank_config.forest.max_depth, "0 = unlimited");
  rank->add_option("--min-leaf", rank_config.forest.min_leaf, "minimum samples per leaf")->check(CLI::PositiveNumber);
  rank->add_option("--features-per-split", rank_config.forest.features_per_split, "0 = ceil(sqrt(d))");
  rank->add_option("--top-k", rank_config.top_k, "rows per group")->check(CLI::PositiveNumber);
  rank->add_option("--max-samples", rank_config.max_samples, "subsample each group to this many rows, 0 = all");
  rank->add_option("--out", out_dir, "output directory");

  auto* persona = app.add_subcommand("persona", "persona scores and discriminator classes per user");
  CorpusOptions persona_corpus;
  persona_corpus.add(persona);
  persona->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const fs::path out(out_dir);
  try {
    if (synth->parsed()) {
      const std::uint64_t seed = synth_config.seed;
      if (!synth_file.empty()) synth_config.load_file(synth_file);
      for (const auto& kv : synth_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        synth_config.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      synth_config.seed = seed;
      const SynthResult result = generate(synth_config);
      write_synth(result, out);
      log("synth", {{"out", out.string()},
                    {"users", result.manifest.n_users},
                    {"tweets", result.manifest.n_tweets},
                    {"follows", result.manifest.n_follows},
                    {"interactions", result.manifest.n_interactions}});
      std::cout << to_json(plant_report(result.manifest)).dump(2) << '\n';
      return 0;
    }

    if (validate->parsed()) {
      const CorpusPaths p = validate_corpus_opts.paths();
      const Corpus c = read_corpus(p, validate_corpus_opts.snapshot_time(p));
      const auto violations = validate_corpus(c);
      for (const auto& v : violations) std::cout << describe(v) << '\n';
      std::cout << violations.size() << " violations\n";
      return violations.empty() ? 0 : 1;
    }

    if (cascades->parsed()) {
      const Corpus c = cascades_corpus.load();
      fs::create_directories(out);
      std::vector<ojson> rows;
      for (const auto& cascade : derive_cascades(c)) rows.push_back(to_json(cascade));
      write_lines(out / "cascades.jsonl", rows);
      log("cascades", {{"messages", rows.size()}, {"file", (out / "cascades.jsonl").string()}});
      return 0;
    }

    if (features->parsed()) {
      const Corpus c = features_corpus.load();
      const Pipeline p(c, features_corpus.load_lexicon());
      fs::create_directories(out);
      std::string text;
      std::size_t n = 0;
      for (const auto& cascade : p.cascades())
        for (const auto& edge : cascade.edges) {
          text += edge_features_json(edge, p.features().edge_vector(edge)).dump() + '\n';
          ++n;
        }
      write_text(out / "features.jsonl", text);
      log("features", {{"edges", n}, {"file", (out / "features.jsonl").string()}});
      return 0;
    }

    if (train->parsed() || train_baseline->parsed()) {
      const bool crowdsourced = train->parsed();
      const CorpusOptions& corpus_opts = crowdsourced ? train_corpus : baseline_corpus;
      const TrainOptions& opts = crowdsourced ? train_opts : baseline_opts;
      const LabelMode mode = parse_mode(opts.mode);
      const Corpus c = corpus_opts.load();
      const Pipeline p(c, corpus_opts.load_lexicon());
      fs::create_directories(out);
      const MessageSplit split = opts.make_split(c, out);
      const BlrModel model = crowdsourced ? p.train_crowdsourced(split.train, mode, opts.blr())
                                          : p.train_baseline(split.train, mode, opts.blr());
      const fs::path file = out / (crowdsourced ? "model.json" : "model_baseline.json");
      write_json(file, to_json(model));
      ojson summary = training_summary(model);
      summary["file"] = file.string();
      log(crowdsourced ? "train" : "train-baseline", summary);
      return 0;
    }

    if (predict->parsed()) {
      const Corpus c = predict_corpus.load();
      const Pipeline p(c, predict_corpus.load_lexicon());
      const BlrModel cro = blr_from_json(read_json(or_default(model_path, out / "model.json")));
      const BlrModel base = blr_from_json(read_json(or_default(baseline_path, out / "model_baseline.json")));
      if (cro.classes != base.classes) throw Error("crowdsourced and baseline models use different classes");
      fs::create_directories(out);
      std::vector<ojson> rows;
      std::size_t fallback = 0;
      for (const auto& t : c.tweets()) {
        const MessageVerdict v = p.predict(cro, base, t.tweet_id);
        fallback += v.mode == VerdictMode::FallbackNonCrowdsourced;
        rows.push_back(to_json(v));
      }
      write_lines(out / "verdicts.jsonl", rows);
      log("predict", {{"messages", rows.size()}, {"fallback", fallback}, {"file", (out / "verdicts.jsonl").string()}});
      return 0;
    }

    if (evaluate->parsed()) {
      const Corpus c = evaluate_corpus.load();
      const Pipeline p(c, evaluate_corpus.load_lexicon());
      ExperimentResult r;
      r.crowdsourced = blr_from_json(read_json(or_default(model_path, out / "model.json")));
      r.baseline = blr_from_json(read_json(or_default(baseline_path, out / "model_baseline.json")));
      r.split = split_from_json(read_json(or_default(split_path, out / "split.json")));
      ExperimentConfig config;
      config.mode = mode_of(r.crowdsourced);
      config.ratios = r.split.ratios;
      config.seed = r.split.seed;
      config.blr.sigma2 = r.crowdsourced.sigma2;
      r.validation = evaluate_models(p, r.crowdsourced, r.baseline, r.split.validation, config.mode);
      r.test = evaluate_models(p, r.crowdsourced, r.baseline, r.split.test, config.mode);
      fs::create_directories(out);
      write_json(out / "report.json", experiment_report(r, config));
      const std::string table = format_comparison_table(r.test.crowdsourced, r.test.noncrowdsourced);
      write_text(out / "report.txt", table);
      std::cout << table;
      log("evaluate", {{"test_messages", r.split.test.size()},
                       {"macro_f1_crowdsourced", r.test.crowdsourced.macro.f1},
                       {"macro_f1_noncrowdsourced", r.test.noncrowdsourced.macro.f1},
                       {"file", (out / "report.json").string()}});
      return 0;
    }

    if (rank->parsed()) {
      const Corpus c = rank_corpus.load();
      const Pipeline p(c, rank_corpus.load_lexicon());
      const auto groups = rank_features(p, rank_config);
      fs::create_directories(out);
      const std::string tsv = format_ranking_tsv(groups);
      write_text(out / "ranking.tsv", tsv);
      for (const auto& g : groups) {
        write_json(out / ("forest_" + g.name + ".json"), to_json(g.forest));
        if (g.ranking.empty()) log("warning", {{"group", g.name}, {"message", "no splits; ranking is empty"}});
        log("rank", {{"group", g.name}, {"samples", g.samples}, {"oob_accuracy", g.forest.oob_accuracy}});
      }
      std::cout << tsv;
      return 0;
    }

    if (persona->parsed()) {
      const Corpus c = persona_corpus.load();
      const Pipeline p(c, persona_corpus.load_lexicon());
      fs::create_directories(out);
      std::vector<ojson> rows;
      for (const auto& u : user_personas(p)) rows.push_back(to_json(u));
      write_lines(out / "persona.jsonl", rows);
      log("persona", {{"users", rows.size()}, {"file", (out / "persona.jsonl").string()}});
      return 0;
    }
  } catch (const UsageError& e) {
    log_error(e.what());
    return 2;
  } catch (const InvalidConfig& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 2;
}

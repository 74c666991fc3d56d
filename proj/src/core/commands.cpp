#include "commands.hpp"

#include <map>
#include <set>

#include <json.hpp>

#include "corpus.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "fileio.hpp"
#include "search.hpp"

namespace scnn {

namespace fs = std::filesystem;

namespace {

// Removes what a command created unless commit() is reached.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove_all(*it, ec);
  }

  // Registers a path about to be created (only if it does not exist yet).
  void track(const fs::path& p) {
    if (!fs::exists(p)) paths_.push_back(p);
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

// Prepares an empty run directory.
void prepare_run_dir(const fs::path& dir, OutputGuard& guard) {
  if (dir.empty()) throw UsageError("an output directory (--out) is required");
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("'" + dir.string() + "' exists and is not a directory");
    if (!fs::is_empty(dir)) throw UsageError("output directory '" + dir.string() + "' is not empty");
    for (const char* name : {"manifest.json", "leaderboard.csv", "trials"}) guard.track(dir / name);
  } else {
    guard.track(dir);
    fs::create_directories(dir);
  }
}

nlohmann::ordered_json schedule_json(const TrainSchedule& s) {
  nlohmann::ordered_json j;
  j["max_epochs"] = s.max_epochs;
  j["patience"] = s.patience;
  j["restarts_allowed"] = s.restarts_allowed;
  j["lr_decay"] = s.lr_decay;
  return j;
}

struct RunInputs {
  std::vector<Example> examples;
  std::vector<ClassLabel> gold;
  std::vector<std::string> ids;
  EmbeddingRegistry registry;
  FoldAssignment folds;
};

std::uint64_t folds_seed_for(std::uint64_t seed) { return derive_seed(seed, "folds"); }

RunInputs load_run_inputs(const RunOptions& opt) {
  RunInputs in;
  if (opt.train_path.empty()) throw UsageError("a training set (--train) is required");
  if (opt.embeddings.empty()) throw UsageError("at least one embedding (--embeddings name=path) is required");
  if (opt.parallelism < 1) throw UsageError("parallelism must be at least 1");
  in.examples = parse_dataset(opt.train_path, true);
  in.gold = gold_labels(in.examples);
  for (const auto& ex : in.examples) in.ids.push_back(ex.id);
  in.registry = load_registry(opt.embeddings);
  in.folds = stratified_kfold(in.examples, opt.folds, folds_seed_for(opt.seed));
  return in;
}

nlohmann::ordered_json run_manifest(const char* kind, const RunOptions& opt, const RunInputs& in,
                                    const SearchSpace& space, std::size_t n_trials, const Leaderboard& board) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = kind;
  j["seed"] = opt.seed;
  j["n_trials"] = n_trials;
  j["folds"] = opt.folds;
  j["fold_seed"] = in.folds.seed;
  j["dedupe"] = true;
  j["unrestricted"] = opt.unrestricted;
  j["space_descriptor"] = space.descriptor();
  j["space"] = nlohmann::ordered_json::parse(space.to_json().dump());
  j["schedule"] = schedule_json(opt.schedule);
  j["train"] = {{"sha256", sha256_file(opt.train_path)}, {"examples", in.examples.size()}};
  nlohmann::ordered_json emb;
  for (const auto& [name, path] : opt.embeddings) emb[name] = sha256_file(path);
  j["embeddings"] = emb;
  auto trials = nlohmann::ordered_json::array();
  std::vector<const TrialRecord*> by_id;
  for (const auto& t : board.trials) by_id.push_back(&t);
  std::sort(by_id.begin(), by_id.end(), [](auto* a, auto* b) { return a->trial_id < b->trial_id; });
  for (const auto* t : by_id) {
    nlohmann::ordered_json e;
    e["trial_id"] = t->trial_id;
    e["status"] = t->status == TrialStatus::ok ? "ok" : "failed";
    e["models"] = t->model_paths;
    if (t->status == TrialStatus::ok) e["oof"] = "trials/" + std::to_string(t->trial_id) + "/oof.tsv";
    else e["error"] = t->error;
    trials.push_back(std::move(e));
  }
  j["trials"] = std::move(trials);
  return j;
}

void write_run(const fs::path& dir, const nlohmann::ordered_json& manifest, const Leaderboard& board) {
  write_file(dir / "leaderboard.csv", leaderboard_csv(board));
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct LoadedRun {
  nlohmann::json manifest;
  Leaderboard board;
  std::map<int, std::vector<std::string>> model_paths;
};

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  try {
    run.manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    for (const auto& t : run.manifest.at("trials"))
      run.model_paths[t.at("trial_id").get<int>()] = t.at("models").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed run manifest in '" + dir.string() + "': " + e.what());
  }
  run.board = parse_leaderboard_csv(read_file(dir / "leaderboard.csv"));
  for (auto& t : run.board.trials) {
    const auto it = run.model_paths.find(t.trial_id);
    if (it == run.model_paths.end()) throw DataError("trial " + std::to_string(t.trial_id) + " missing from run manifest");
    t.model_paths = it->second;
  }
  auto sorted = run.board;
  sorted.sort();
  if (!(sorted.trials == run.board.trials)) throw DataError("leaderboard is not in rank order");

  // Every score must be recomputable from the stored out-of-fold predictions.
  for (const auto* t : run.board.ok_trials()) {
    const auto oof = parse_oof(read_file(dir / "trials" / std::to_string(t->trial_id) / "oof.tsv"));
    const double recomputed = micro_f1_12(oof.probs, oof.gold);
    if (recomputed != t->cv_score) {
      throw DataError("trial " + std::to_string(t->trial_id) + ": leaderboard cv_score " + format_exact(t->cv_score) +
                      " does not match its out-of-fold predictions (" + format_exact(recomputed) + ")");
    }
  }
  return run;
}

}  // namespace

EmbeddingSpecs parse_embedding_specs(const std::string& text) {
  EmbeddingSpecs specs;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw UsageError("expected name=path in --embeddings, got '" + item + "'");
    specs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    start = end + 1;
  }
  return specs;
}

EmbeddingRegistry load_registry(const EmbeddingSpecs& specs) {
  EmbeddingRegistry reg;
  for (const auto& [name, path] : specs) reg.load(name, path);
  return reg;
}

void search_command(const SearchCommand& cmd) {
  OutputGuard guard;
  if (cmd.space_path && !cmd.unrestricted) throw UsageError("--space requires --unrestricted-space");
  const SearchSpace space = cmd.space_path
                                ? SearchSpace::from_json(nlohmann::json::parse(read_file(*cmd.space_path)))
                                : SearchSpace::paper();
  auto in = load_run_inputs(cmd);
  for (const auto& name : space.word_embedding)
    if (!in.registry.contains(name))
      throw UsageError("search space uses embedding '" + name + "'; register it with --embeddings " + name + "=PATH");
  prepare_run_dir(cmd.out_dir, guard);

  const auto docs = embed_all(in.registry, in.examples);
  SearchOptions opt;
  opt.n_trials = cmd.n_trials;
  opt.parallelism = cmd.parallelism;
  opt.unrestricted = cmd.unrestricted;
  opt.record_wall_time = cmd.record_wall_time;
  opt.run_dir = cmd.out_dir;
  const auto result = run_search(docs, in.gold, in.ids, space, in.folds, cmd.schedule, cmd.seed, opt);
  for (const auto& t : result.board.trials) {
    if (t.status == TrialStatus::failed) {
      fs::create_directories(cmd.out_dir / "trials" / std::to_string(t.trial_id));
      write_file(cmd.out_dir / "trials" / std::to_string(t.trial_id) / "error.txt", t.error + "\n");
    }
  }
  write_run(cmd.out_dir, run_manifest("search", cmd, in, space, cmd.n_trials, result.board), result.board);
  guard.commit();
}

double train_command(const TrainCommand& cmd) {
  OutputGuard guard;
  const auto hp = hyperparams_from_json([&] {
    try {
      return nlohmann::json::parse(read_file(cmd.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config '" + cmd.config_path.string() + "' is not valid JSON: " + e.what());
    }
  }());
  validate(hp, cmd.unrestricted);
  auto in = load_run_inputs(cmd);
  if (!in.registry.contains(hp.word_embedding))
    throw UsageError("config uses embedding '" + hp.word_embedding + "' which is not registered");
  prepare_run_dir(cmd.out_dir, guard);

  const auto docs = embed_examples(in.registry.get(hp.word_embedding), in.examples);
  const auto fe = train_fold_ensemble(hp, docs, in.gold, in.folds, cmd.schedule, trial_seed(cmd.seed, 0), 0,
                                      cmd.parallelism, cmd.unrestricted);

  TrialRecord rec;
  rec.trial_id = 0;
  rec.hp = hp;
  rec.cv_score = fe.cv_score;
  const auto sub = fs::path("trials") / "0";
  fs::create_directories(cmd.out_dir / sub);
  for (std::size_t f = 0; f < fe.members.size(); ++f) {
    const auto rel = (sub / ("fold" + std::to_string(f) + ".scnn")).generic_string();
    save_model(fe.members[f], cmd.out_dir / rel);
    rec.model_paths.push_back(rel);
  }
  write_file(cmd.out_dir / sub / "oof.tsv", format_oof(in.ids, in.gold, fe.oof_probs));
  Leaderboard board;
  board.trials.push_back(rec);

  // The single configuration is recorded as a one-point space.
  SearchSpace space{{hp.adam_b2},       {hp.n_dense_output}, {hp.keep_prob}, {hp.batch_size},
                    {hp.learning_rate}, {hp.word_embedding}, {hp.n_filters}, {hp.filter_sizes}};
  write_run(cmd.out_dir, run_manifest("train", cmd, in, space, 1, board), board);
  guard.commit();
  return fe.cv_score;
}

std::vector<fs::path> stack_command(const StackCommand& cmd) {
  OutputGuard guard;
  if (cmd.ks.empty()) throw UsageError("--top-k needs at least one value");
  if (cmd.out && cmd.ks.size() != 1) throw UsageError("--out names a single manifest; give one --top-k value");
  const auto run = load_run(cmd.run_dir);
  const auto ranked = run.board.ok_trials();
  for (auto k : cmd.ks) {
    if (k < 1 || k > ranked.size()) {
      throw UsageError("--top-k " + std::to_string(k) + " is outside 1.." + std::to_string(ranked.size()) +
                       " successful trials");
    }
  }

  std::vector<fs::path> written;
  for (auto k : cmd.ks) {
    const auto target = cmd.out ? *cmd.out : cmd.run_dir / ("ensemble_top" + std::to_string(k) + ".json");
    const auto base = fs::absolute(target).parent_path();
    EnsembleManifest m;
    m.k = k;
    m.fold_seed = run.manifest.at("fold_seed").get<std::uint64_t>();
    m.space_descriptor = run.manifest.at("space_descriptor").get<std::string>();
    for (std::size_t r = 0; r < k; ++r) {
      const auto& t = *ranked[r];
      for (std::size_t f = 0; f < t.model_paths.size(); ++f) {
        const auto file = fs::absolute(cmd.run_dir / t.model_paths[f]);
        m.members.push_back({file.lexically_relative(base).generic_string(), sha256_file(file), t.trial_id,
                             static_cast<int>(f), t.cv_score});
      }
    }
    guard.track(target);
    write_file(target, manifest_json(m));
    written.push_back(target);
  }

  if (cmd.test_path) {
    const auto test = parse_dataset(*cmd.test_path, true);
    const auto gold = gold_labels(test);
    const auto registry = load_registry(cmd.embeddings);
    std::map<std::string, std::vector<DocMatrix>> docs;
    const auto probs_for = [&](const TrialRecord& t) {
      auto it = docs.find(t.hp.word_embedding);
      if (it == docs.end())
        it = docs.emplace(t.hp.word_embedding, embed_examples(registry.get(t.hp.word_embedding), test)).first;
      ProbAccumulator acc;
      for (const auto& p : t.model_paths) acc.add(predict_proba(load_model(cmd.run_dir / p).weights, it->second));
      return acc.mean();
    };
    const auto rows = top_k_report(run.board, cmd.ks, gold, probs_for);
    const auto report = cmd.report_path ? *cmd.report_path : cmd.run_dir / "topk_report.csv";
    guard.track(report);
    write_file(report, top_k_csv(rows));
  }
  guard.commit();
  return written;
}

std::string format_predictions(std::span<const Example> examples, const ProbMatrix& probs) {
  std::string out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out += examples[i].id;
    out += '\t';
    out += std::to_string(static_cast<int>(argmax_label(probs[i])));
    for (double p : probs[i]) {
      out += '\t';
      out += format_fixed(p, 6);
    }
    out += '\n';
  }
  return out;
}

std::vector<Prediction> parse_predictions(std::string_view text) {
  std::vector<Prediction> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t p = 0;
    for (;;) {
      const auto tab = line.find('\t', p);
      f.push_back(line.substr(p, tab == std::string_view::npos ? std::string_view::npos : tab - p));
      if (tab == std::string_view::npos) break;
      p = tab + 1;
    }
    if (f.size() != 5) throw DataError("predictions: expected 5 fields at line " + std::to_string(line_no));
    const auto label = parse_label(f[1]);
    if (!label) throw DataError("predictions: bad label at line " + std::to_string(line_no));
    out.push_back({std::string(f[0]), *label,
                   {parse_double(f[2], "probability"), parse_double(f[3], "probability"),
                    parse_double(f[4], "probability")}});
  }
  return out;
}

std::vector<std::string> predict_command(const PredictCommand& cmd) {
  OutputGuard guard;
  if (cmd.out.empty()) throw UsageError("an output file (--out) is required");
  auto loaded = load_ensemble(cmd.manifest, cmd.verify_scores);
  const auto examples = parse_dataset_auto(cmd.input);
  const auto registry = load_registry(cmd.embeddings);
  std::map<std::string, std::vector<DocMatrix>> docs;
  for (const auto& member : loaded.ensemble.ranked_members) {
    const auto& name = member->hp.word_embedding;
    if (!docs.count(name)) docs.emplace(name, embed_examples(registry.get(name), examples));
  }
  const auto probs = stacked_predict(loaded.ensemble, [&](const HyperParams& hp) {
    return std::span<const DocMatrix>(docs.at(hp.word_embedding));
  });
  guard.track(cmd.out);
  write_file(cmd.out, format_predictions(examples, probs));
  guard.commit();
  return loaded.warnings;
}

MetricsReport evaluate_command(const fs::path& gold_path, const fs::path& pred_path,
                               const std::optional<fs::path>& out) {
  OutputGuard guard;
  const auto gold_examples = parse_dataset(gold_path, true);
  const auto preds = parse_predictions(read_file(pred_path));
  std::map<std::string, ClassLabel> by_id;
  for (const auto& p : preds)
    if (!by_id.emplace(p.id, p.label).second) throw DataError("duplicate prediction for id '" + p.id + "'");
  if (by_id.size() != gold_examples.size())
    throw DataError("predictions cover " + std::to_string(by_id.size()) + " ids but the gold set has " +
                    std::to_string(gold_examples.size()));
  std::vector<ClassLabel> gold;
  std::vector<ClassLabel> pred;
  for (const auto& ex : gold_examples) {
    const auto it = by_id.find(ex.id);
    if (it == by_id.end()) throw DataError("no prediction for id '" + ex.id + "'");
    gold.push_back(*ex.label);
    pred.push_back(it->second);
  }
  const auto report = evaluate(confusion(gold, pred));
  if (out) {
    guard.track(*out);
    write_file(*out, metrics_json(report));
  }
  guard.commit();
  return report;
}

void synth_command(const SynthOptions& options, const fs::path& out_dir) {
  OutputGuard guard;
  if (out_dir.empty()) throw UsageError("an output directory (--out) is required");
  guard.track(out_dir);
  if (fs::exists(out_dir)) {
    for (const char* name : {"train.tsv", "test.tsv", "test_unlabeled.tsv", "godin.txt", "shin.txt"})
      guard.track(out_dir / name);
  }
  write_synth_corpus(make_synth_corpus(options), out_dir);
  guard.commit();
}

}  // namespace scnn

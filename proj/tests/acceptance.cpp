// Acceptance run: one PASS/FAIL line per criterion. Criteria 4 and 5 drive
// the command-line tool end to end; the rest call the core library.
//
// usage: scnn_acceptance [work_dir] [--only N[,N...]]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embeddings.hpp"
#include "ensemble.hpp"
#include "fileio.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "nn.hpp"
#include "search_space.hpp"

#ifndef SCNN_CLI_PATH
#error "SCNN_CLI_PATH must name the command-line binary"
#endif

using namespace scnn;
using namespace scnn::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

// ---------------------------------------------------------------- helpers

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SCNN_CLI_PATH + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome metric_identity() {
  struct Row {
    double p, r, f1;
  };
  const Row rows[] = {{0.725, 0.664, 0.693}, {0.721, 0.661, 0.690}, {0.716, 0.664, 0.689}, {0.712, 0.690, 0.701}};
  Outcome o{true, ""};
  for (const auto& row : rows) {
    const double f = f1_score(row.p, row.r);
    o.pass = o.pass && std::abs(f - row.f1) <= 0.0005;
    o.detail += fmt(f, 4) + "/" + fmt(row.f1, 3) + " ";
  }
  return o;
}

// ---------------------------------------------------------------- 2

Outcome gradient_oracle() {
  const auto start = std::chrono::steady_clock::now();
  GradcheckOptions opt;
  opt.cases = 25;
  const auto r = gradcheck(20240601, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {r.max_relative_error < 1e-4 && secs < 60.0,
          "max rel err " + sci(r.max_relative_error) + " over " + std::to_string(r.parameters_checked) +
              " gradients, " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------- 3

Outcome overfit() {
  const auto start = std::chrono::steady_clock::now();
  const auto data = toy_data(30, 3, 2024);
  const auto train_set = labeled(data.train_docs, data.train_gold);
  int first_perfect = 0;
  const auto acc = [&](const ShallowCNN& m, int epoch) {
    const double a = accuracy(predict_proba(m, data.train_docs), data.train_gold);
    if (a == 1.0 && first_perfect == 0) first_perfect = epoch;
    return a;
  };
  train(build_model(toy_hp(), 8, 1, true), train_set, {}, {200, 200, 2, 0.5}, 1, acc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {first_perfect > 0 && secs < 30.0,
          (first_perfect > 0 ? "100% training accuracy at epoch " + std::to_string(first_perfect)
                             : std::string("never reached 100% training accuracy")) +
              ", " + fmt(secs, 1) + " s"};
}

// ---------------------------------------------------------------- 4 and 5

struct PipelineRun {
  bool ok = false;
  std::string error;
  double seconds = 0;
  fs::path dir;
};

PipelineRun desk_pipeline(const std::string& name, int parallelism) {
  PipelineRun p;
  p.dir = g_work / name;
  fs::remove_all(p.dir);
  fs::create_directories(p.dir);
  const auto log = p.dir / "log.txt";
  const auto d = (p.dir / "data").string();
  const auto emb = "godin=" + d + "/godin.txt,shin=" + d + "/shin.txt";
  const auto run = (p.dir / "run").string();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"synth", "synth --seed 42 --out \"" + d + "\""},
      {"search", "search --train \"" + d + "/train.tsv\" --embeddings \"" + emb +
                     "\" --trials 8 --folds 5 --seed 42 --parallelism " + std::to_string(parallelism) + " --out \"" +
                     run + "\""},
      {"stack", "stack --run \"" + run + "\" --top-k 3 --test \"" + d + "/test.tsv\" --embeddings \"" + emb + "\""},
      {"predict", "predict --manifest \"" + run + "/ensemble_top3.json\" --input \"" + d +
                      "/test_unlabeled.tsv\" --embeddings \"" + emb + "\" --out \"" + (p.dir / "pred.tsv").string() +
                      "\""},
      {"evaluate", "evaluate --gold \"" + d + "/test.tsv\" --pred \"" + (p.dir / "pred.tsv").string() + "\" --out \"" +
                       (p.dir / "metrics.json").string() + "\""},
  };
  for (const auto& [label, args] : steps) {
    const int rc = run_cli(args, log);
    if (rc != 0) {
      p.error = label + " exited with " + std::to_string(rc) + " (see " + log.string() + ")";
      return p;
    }
  }
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  p.ok = true;
  return p;
}

std::map<std::string, PipelineRun> g_runs;

const PipelineRun& pipeline(const std::string& name, int parallelism) {
  auto it = g_runs.find(name);
  if (it == g_runs.end()) it = g_runs.emplace(name, desk_pipeline(name, parallelism)).first;
  return it->second;
}

Outcome desk_scale() {
  const auto& p = pipeline("desk_a", 1);
  if (!p.ok) return {false, p.error};
  const auto metrics = nlohmann::json::parse(read_file(p.dir / "metrics.json"));
  const double stacked = metrics.at("f1_m").get<double>();
  double best_single = 0.0, report_stacked = -1.0;
  const auto rows = read_csv(p.dir / "run" / "topk_report.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double f1 = std::stod(rows[i].at(7));
    if (rows[i][0] == "individual") best_single = std::max(best_single, f1);
    if (rows[i][0] == "stacked" && rows[i][3] == "3") report_stacked = f1;
  }
  const bool consistent = std::abs(report_stacked - stacked) <= 5e-7;
  const bool pass = stacked >= 0.90 && stacked >= best_single - 0.05 && consistent && p.seconds < 600.0;
  return {pass, "stacked top-3 test micro-F1 " + fmt(stacked) + ", best single trial " + fmt(best_single) +
                    (consistent ? "" : ", report disagrees with evaluate") + ", " + fmt(p.seconds, 1) + " s"};
}

Outcome determinism() {
  const auto& a = pipeline("desk_a", 1);
  const auto& b = pipeline("desk_b", 1);
  const auto& c = pipeline("desk_c", 4);
  for (const auto* p : {&a, &b, &c})
    if (!p->ok) return {false, p->error};
  const std::vector<std::string> files = {"run/leaderboard.csv", "run/manifest.json", "run/ensemble_top3.json",
                                          "run/topk_report.csv", "pred.tsv", "metrics.json"};
  std::vector<std::string> differing;
  for (const auto& f : files) {
    const auto ref = read_file(a.dir / f);
    if (read_file(b.dir / f) != ref) differing.push_back(f + " (repeat)");
    if (read_file(c.dir / f) != ref) differing.push_back(f + " (parallelism 4)");
  }
  // Model files too: every fold model of every trial.
  std::size_t models = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.dir / "run" / "trials")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.dir);
    ++models;
    const auto ref = read_file(e.path());
    if (read_file(b.dir / rel) != ref) differing.push_back(rel.generic_string() + " (repeat)");
    if (read_file(c.dir / rel) != ref) differing.push_back(rel.generic_string() + " (parallelism 4)");
  }
  std::string detail = std::to_string(files.size() + models) + " files compared across 3 runs";
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

// ---------------------------------------------------------------- 6

Outcome ensemble_algebra() {
  Rng rng(606);
  int failures = 0;
  std::string first;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond && failures++ == 0) first = what;
  };
  auto ids = [](const StackedEnsemble& se) {
    std::vector<int> v;
    for (const auto& m : se.ranked_members) v.push_back(m->trial_id);
    return v;
  };
  auto diff = [](const ProbMatrix& x, const ProbMatrix& y) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(x[i][c] - y[i][c]));
    return d;
  };
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<std::shared_ptr<const FoldEnsemble>> trials;
    std::vector<int> trial_ids(n);
    for (std::size_t t = 0; t < n; ++t) trial_ids[t] = static_cast<int>(t);
    rng.shuffle(std::span(trial_ids));
    for (std::size_t t = 0; t < n; ++t)
      trials.push_back(random_fold_ensemble(trial_ids[t], static_cast<double>(rng.below(3)) / 2.0, rng.next_u64(), 3));
    const auto docs = random_docs(3, 3, rng);
    const std::size_t k = 1 + rng.below(n);
    const auto se = stack_top_k(trials, k);
    const auto stacked = stacked_predict(se, docs);

    // singleton stack
    const auto top = stack_top_k(trials, 1);
    expect(stacked_predict(top, docs) == ensemble_predict(*top.ranked_members[0], docs), "singleton stack");
    // mean of means vs flat mean
    ProbAccumulator flat;
    for (const auto& fe : se.ranked_members)
      for (const auto& m : fe->members) flat.add(predict_proba(m.weights, docs));
    expect(diff(stacked, flat.mean()) <= 1e-6, "mean-of-means");
    // identical members
    std::vector<std::shared_ptr<const FoldEnsemble>> copies;
    for (std::size_t t = 0; t < k; ++t) {
      auto copy = std::make_shared<FoldEnsemble>(*trials[0]);
      copy->trial_id = static_cast<int>(t);
      copies.push_back(copy);
    }
    expect(diff(stacked_predict(stack_top_k(copies, k), docs), ensemble_predict(*trials[0], docs)) <= 1e-7,
           "identical members");
    // tie-break and ordering
    const auto order = ids(se);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const auto& x = *se.ranked_members[i - 1];
      const auto& y = *se.ranked_members[i];
      expect(x.cv_score > y.cv_score || (x.cv_score == y.cv_score && x.trial_id < y.trial_id), "tie-break");
    }
    // prefix monotonicity
    if (k < n) {
      const auto more = ids(stack_top_k(trials, k + 1));
      expect(std::equal(order.begin(), order.end(), more.begin()), "prefix monotonicity");
    }
    // permutation invariance
    auto shuffled = trials;
    rng.shuffle(std::span(shuffled));
    const auto se2 = stack_top_k(shuffled, k);
    expect(ids(se2) == order && diff(stacked_predict(se2, docs), stacked) <= 1e-6, "permutation invariance");
  }
  return {failures == 0, failures == 0 ? "200 randomized instances" : std::to_string(failures) +
                                                                         " violations, first: " + first};
}

// ---------------------------------------------------------------- 7

Outcome stratification() {
  Rng rng(707);
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const int k = 2 + static_cast<int>(rng.below(9));
    std::vector<Example> ex;
    for (int c = 0; c < 3; ++c) {
      const int n = k + static_cast<int>(rng.below(200));
      for (int i = 0; i < n; ++i) ex.push_back({std::to_string(c) + ":" + std::to_string(i), label_from_index(c), ""});
    }
    rng.shuffle(std::span(ex));
    const auto fa = stratified_kfold(ex, k, rng.next_u64());
    std::vector<std::array<int, 3>> counts(k, {0, 0, 0});
    for (std::size_t i = 0; i < ex.size(); ++i) counts[fa.fold_of[i]][class_index(*ex[i].label)]++;
    for (int c = 0; c < 3; ++c) {
      int lo = 1 << 30, hi = 0;
      for (const auto& f : counts) {
        lo = std::min(lo, f[c]);
        hi = std::max(hi, f[c]);
      }
      bad += hi - lo > 1;
    }
  }
  std::vector<Example> table1;
  const std::array<int, 3> totals{1847, 3027, 4789};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < totals[c]; ++i) table1.push_back({std::to_string(c) + ":" + std::to_string(i), label_from_index(c), ""});
  const auto fa = stratified_kfold(table1, 5, 42);
  std::vector<std::array<int, 3>> counts(5, {0, 0, 0});
  for (std::size_t i = 0; i < table1.size(); ++i) counts[fa.fold_of[i]][class_index(*table1[i].label)]++;
  bool table_ok = true;
  std::string class1;
  for (const auto& f : counts) {
    for (int c = 0; c < 3; ++c) table_ok = table_ok && std::abs(f[c] - totals[c] / 5.0) <= 1.0;
    class1 += std::to_string(f[0]) + " ";
  }
  return {bad == 0 && table_ok, std::to_string(bad) + " unbalanced classes in 500 random splits; class-1 fold counts " +
                                    class1};
}

// ---------------------------------------------------------------- 8

Outcome statistics() {
  Rng rng(808);
  const auto t = xavier_init<double>(100, 100, {100000}, rng);
  double mean = 0, var = 0;
  for (double x : t.data) mean += x;
  mean /= static_cast<double>(t.size());
  for (double x : t.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(t.size() - 1);
  const double b2 = 6.0 / 200.0;
  const double var_rel = std::abs(var - b2 / 3.0) / (b2 / 3.0);

  Rng drop_rng(1);
  std::vector<double> ones(10000, 1.0), y(10000), mask;
  dropout<double>(ones, 0.5, &drop_rng, true, y, mask);
  double dmean = 0;
  for (double v : y) dmean += v;
  dmean /= 10000.0;
  const double drop_rel = std::abs(dmean - 1.0);

  // Chi-square per field; upper 1% points for 1..6 degrees of freedom.
  const double crit[] = {0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812};
  const auto& space = SearchSpace::paper();
  const auto sizes = space.domain_sizes();
  std::array<std::vector<std::size_t>, 8> counts;
  for (std::size_t f = 0; f < 8; ++f) counts[f].assign(sizes[f], 0);
  Rng srng(8080);
  auto index_of = [](const auto& dom, const auto& v) {
    return static_cast<std::size_t>(std::find(dom.begin(), dom.end(), v) - dom.begin());
  };
  for (int i = 0; i < 10000; ++i) {
    const auto hp = sample_config(space, srng, nullptr);
    counts[0][index_of(space.adam_b2, hp.adam_b2)]++;
    counts[1][index_of(space.n_dense_output, hp.n_dense_output)]++;
    counts[2][index_of(space.keep_prob, hp.keep_prob)]++;
    counts[3][index_of(space.batch_size, hp.batch_size)]++;
    counts[4][index_of(space.learning_rate, hp.learning_rate)]++;
    counts[5][index_of(space.word_embedding, hp.word_embedding)]++;
    counts[6][index_of(space.n_filters, hp.n_filters)]++;
    counts[7][index_of(space.filter_sizes, hp.filter_sizes)]++;
  }
  bool chi_ok = true;
  double worst = 0;
  for (std::size_t f = 0; f < 8; ++f) {
    const double expected = 10000.0 / static_cast<double>(sizes[f]);
    double chi = 0;
    for (auto n : counts[f]) chi += (n - expected) * (n - expected) / expected;
    const double ratio = chi / crit[sizes[f] - 1];
    worst = std::max(worst, ratio);
    chi_ok = chi_ok && chi < crit[sizes[f] - 1];
  }
  return {var_rel <= 0.05 && drop_rel <= 0.02 && chi_ok,
          "xavier variance off by " + fmt(100 * var_rel, 2) + "%, dropout mean off by " + fmt(100 * drop_rel, 2) +
              "%, worst chi-square at " + fmt(100 * worst, 1) + "% of its critical value"};
}

// ---------------------------------------------------------------- 9

Outcome annealing() {
  const auto data = toy_data(30, 3, 909);
  const auto train_set = labeled(data.train_docs, data.train_gold);
  auto hp = toy_hp();
  hp.learning_rate = 0.004;
  std::vector<ShallowCNN> seen;
  const auto flat = [&](const ShallowCNN& m, int) {
    seen.push_back(m);
    return 0.5;
  };
  const auto tm = train(build_model(hp, 8, 9, true), train_set, {}, {30, 2, 2, 0.5}, 9, flat);
  using A = EpochAction;
  const std::vector<A> want_actions{A::proceed, A::proceed, A::restart, A::proceed, A::restart, A::proceed, A::stop};
  const std::vector<double> want_lr{0.004, 0.004, 0.004, 0.002, 0.002, 0.001, 0.001};
  std::vector<A> actions;
  std::vector<double> lrs;
  for (const auto& r : tm.history) {
    actions.push_back(r.action);
    lrs.push_back(r.learning_rate);
  }
  // Epoch 1 is the only improvement, so its snapshot is what must come back.
  const bool trace = actions == want_actions && lrs == want_lr && tm.restart_count == 2 && tm.epochs_run == 7;
  const bool best = !seen.empty() && tm.weights == seen[0];
  return {trace && best, std::string("restarts at epochs 3 and 5, stop at ") + std::to_string(tm.epochs_run) +
                             (trace ? "" : " (trace mismatch)") + (best ? "" : " (best weights not returned)")};
}

// ---------------------------------------------------------------- 10

Outcome round_trips() {
  std::vector<std::string> bad;
  // model file
  const auto data = toy_data(30, 6, 1010);
  const auto tm = train(build_model(toy_hp(), 8, 3, true), labeled(data.train_docs, data.train_gold),
                        labeled(data.test_docs, data.test_gold), {5, 2, 2, 0.5}, 4);
  const auto dir = g_work / "round_trip";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_model(tm, dir / "m.scnn");
  const auto back = load_model(dir / "m.scnn");
  if (!(back == tm) || serialize_model(back) != read_file(dir / "m.scnn")) bad.push_back("model file");
  // ensemble manifest
  std::vector<std::shared_ptr<const FoldEnsemble>> trials{random_fold_ensemble(4, 0.75, 1, 8, 2),
                                                          random_fold_ensemble(9, 0.5, 2, 8, 2)};
  std::vector<std::string> ids{"a", "b"};
  std::vector<ClassLabel> gold{ClassLabel::personal_intake, ClassLabel::no_intake};
  for (auto& t : trials) std::const_pointer_cast<FoldEnsemble>(t)->oof_probs = {{1, 0, 0}, {0, 0, 1}};
  const auto se = stack_top_k(trials, 2);
  save_ensemble(se, ids, gold, 77, "space", dir / "ens");
  const auto manifest_text = read_file(dir / "ens" / "ensemble.json");
  const auto loaded = load_ensemble(dir / "ens" / "ensemble.json");
  if (manifest_json(loaded.manifest) != manifest_text ||
      stacked_predict(loaded.ensemble, data.test_docs) != stacked_predict(se, data.test_docs))
    bad.push_back("ensemble manifest");
  // dataset TSV
  write_dataset(data.corpus.train, dir / "train.tsv");
  const auto ds = parse_dataset(dir / "train.tsv", true);
  if (!(ds == data.corpus.train) || format_dataset(ds) != read_file(dir / "train.tsv")) bad.push_back("dataset TSV");
  // embedding text file
  save_embeddings(data.corpus.godin, dir / "godin.txt");
  const auto emb = load_embeddings(dir / "godin.txt", "godin");
  if (emb.words != data.corpus.godin.words || emb.vectors != data.corpus.godin.vectors ||
      format_embeddings(emb) != read_file(dir / "godin.txt"))
    bad.push_back("embedding text file");
  std::string detail = bad.empty() ? "model file, ensemble manifest, dataset TSV, embedding text all exact" : "";
  for (const auto& b : bad) detail += "mismatch: " + b + "; ";
  return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = fs::temp_directory_path() / "scnn_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string n;
      while (std::getline(ss, n, ',')) only.insert(std::stoi(n));
    } else {
      g_work = a;
    }
  }
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric identity against published precision/recall", metric_identity},
      {"gradient oracle (25 cases, central differences)", gradient_oracle},
      {"overfit a 30-example separable corpus", overfit},
      {"desk-scale synth/search/stack/predict/evaluate pipeline", desk_scale},
      {"determinism across repeats and parallelism", determinism},
      {"ensemble algebra suite", ensemble_algebra},
      {"fold stratification", stratification},
      {"statistical suites", statistics},
      {"annealing schedule trace", annealing},
      {"format round trips", round_trips},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#include "search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "errors.hpp"
#include "fileio.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace scnn {

namespace {

constexpr const char* kLeaderboardHeader =
    "trial_id,cv_score,status,wall_time_s,adam_b2,n_dense_output,keep_prob,batch_size,learning_rate,"
    "word_embedding,n_filters,filter_sizes";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t p = 0;
  for (;;) {
    const auto c = line.find(',', p);
    out.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
    if (c == std::string_view::npos) return out;
    p = c + 1;
  }
}

}  // namespace

void Leaderboard::sort() {
  std::stable_sort(trials.begin(), trials.end(), [](const TrialRecord& a, const TrialRecord& b) {
    const bool a_ok = a.status == TrialStatus::ok;
    const bool b_ok = b.status == TrialStatus::ok;
    if (a_ok != b_ok) return a_ok;
    if (!a_ok) return a.trial_id < b.trial_id;
    return ranks_before({a.cv_score, a.trial_id}, {b.cv_score, b.trial_id});
  });
}

std::vector<const TrialRecord*> Leaderboard::ok_trials() const {
  std::vector<const TrialRecord*> out;
  for (const auto& t : trials)
    if (t.status == TrialStatus::ok) out.push_back(&t);
  return out;
}

std::string leaderboard_csv(const Leaderboard& board) {
  std::string out = std::string(kLeaderboardHeader) + "\n";
  for (const auto& t : board.trials) {
    const auto& hp = t.hp;
    out += std::to_string(t.trial_id) + ",";
    out += (t.status == TrialStatus::ok ? format_exact(t.cv_score) : std::string("nan")) + ",";
    out += std::string(t.status == TrialStatus::ok ? "ok" : "failed") + ",";
    out += (t.wall_time_s ? format_fixed(*t.wall_time_s, 3) : std::string("NA")) + ",";
    out += format_exact(hp.adam_b2) + "," + std::to_string(hp.n_dense_output) + "," + format_exact(hp.keep_prob) +
           "," + std::to_string(hp.batch_size) + "," + format_exact(hp.learning_rate) + "," + hp.word_embedding +
           "," + std::to_string(hp.n_filters) + "," + filter_sizes_string(hp.filter_sizes) + "\n";
  }
  return out;
}

Leaderboard parse_leaderboard_csv(std::string_view text) {
  Leaderboard board;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kLeaderboardHeader) throw DataError("leaderboard: unexpected header");
      continue;
    }
    const auto f = split_commas(line);
    if (f.size() != 12) throw DataError("leaderboard: expected 12 columns at line " + std::to_string(line_no));
    TrialRecord t;
    t.trial_id = static_cast<int>(parse_int(f[0], "trial_id"));
    if (f[2] == "ok") {
      t.status = TrialStatus::ok;
      t.cv_score = parse_double(f[1], "cv_score");
    } else if (f[2] == "failed") {
      t.status = TrialStatus::failed;
      t.cv_score = std::numeric_limits<double>::quiet_NaN();
    } else {
      throw DataError("leaderboard: bad status at line " + std::to_string(line_no));
    }
    if (f[3] != "NA") t.wall_time_s = parse_double(f[3], "wall_time_s");
    t.hp.adam_b2 = parse_double(f[4], "adam_b2");
    t.hp.n_dense_output = static_cast<int>(parse_int(f[5], "n_dense_output"));
    t.hp.keep_prob = parse_double(f[6], "keep_prob");
    t.hp.batch_size = static_cast<int>(parse_int(f[7], "batch_size"));
    t.hp.learning_rate = parse_double(f[8], "learning_rate");
    t.hp.word_embedding = std::string(f[9]);
    t.hp.n_filters = static_cast<int>(parse_int(f[10], "n_filters"));
    t.hp.filter_sizes = parse_filter_sizes(std::string(f[11]));
    board.trials.push_back(std::move(t));
  }
  return board;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial_id) {
  return derive_seed(seed, "trial:" + std::to_string(trial_id));
}

std::uint64_t sampler_seed(std::uint64_t seed) { return derive_seed(seed, "sampler"); }

SearchResult run_search(const DocSets& docs, std::span<const ClassLabel> gold, std::span<const std::string> ids,
                        const SearchSpace& space, const FoldAssignment& folds, const TrainSchedule& schedule,
                        std::uint64_t seed, const SearchOptions& options) {
  namespace fs = std::filesystem;
  if (options.n_trials < 1) throw UsageError("at least one trial is required");
  if (options.n_trials > space.size()) {
    throw UsageError("cannot draw " + std::to_string(options.n_trials) + " distinct configurations from a space of " +
                     std::to_string(space.size()));
  }
  for (const auto& name : space.word_embedding)
    if (!docs.count(name)) throw UsageError("search space uses embedding '" + name + "' but none is registered");
  if (ids.size() != gold.size()) throw UsageError("ids and labels differ in length");

  Rng sampler(sampler_seed(seed));
  std::set<SearchSpace::Key> seen;
  std::vector<HyperParams> configs;
  for (std::size_t t = 0; t < options.n_trials; ++t) configs.push_back(sample_config(space, sampler, &seen));

  std::vector<TrialRecord> records(configs.size());
  std::vector<std::shared_ptr<const FoldEnsemble>> kept(configs.size());

  parallel_for(configs.size(), options.parallelism, [&](std::size_t t) {
    auto& rec = records[t];
    rec.trial_id = static_cast<int>(t);
    rec.hp = configs[t];
    const auto started = std::chrono::steady_clock::now();
    try {
      const auto& trial_docs = docs.at(rec.hp.word_embedding);
      auto fe = std::make_shared<FoldEnsemble>(train_fold_ensemble(rec.hp, trial_docs, gold, folds, schedule,
                                                                   trial_seed(seed, rec.trial_id), rec.trial_id, 1,
                                                                   options.unrestricted));
      rec.cv_score = fe->cv_score;
      rec.status = TrialStatus::ok;
      if (options.run_dir) {
        const auto sub = fs::path("trials") / std::to_string(rec.trial_id);
        fs::create_directories(*options.run_dir / sub);
        for (std::size_t f = 0; f < fe->members.size(); ++f) {
          const auto rel = (sub / ("fold" + std::to_string(f) + ".scnn")).generic_string();
          save_model(fe->members[f], *options.run_dir / rel);
          rec.model_paths.push_back(rel);
        }
        write_file(*options.run_dir / sub / "oof.tsv", format_oof(ids, gold, fe->oof_probs));
      }
      if (options.keep_models) kept[t] = std::move(fe);
    } catch (const std::exception& e) {
      rec.status = TrialStatus::failed;
      rec.cv_score = std::numeric_limits<double>::quiet_NaN();
      rec.error = e.what();
    }
    if (options.record_wall_time)
      rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  });

  SearchResult result;
  for (auto& fe : kept)
    if (fe) result.ensembles.push_back(std::move(fe));
  result.board.trials = std::move(records);
  result.board.sort();
  return result;
}

std::vector<TopKRow> top_k_report(const Leaderboard& board, std::span<const std::size_t> ks,
                                  std::span<const ClassLabel> test_gold, const TrialTestProbs& probs_for) {
  const auto ranked = board.ok_trials();
  std::vector<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::sort(sorted_ks.begin(), sorted_ks.end());
  sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());
  for (auto k : sorted_ks) {
    if (k < 1 || k > ranked.size()) {
      throw UsageError("top-k " + std::to_string(k) + " is outside 1.." + std::to_string(ranked.size()) +
                       " successful trials");
    }
  }

  std::vector<TopKRow> rows;
  std::vector<TopKRow> stacked;
  ProbAccumulator acc;
  std::size_t next_k = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& trial = *ranked[r];
    const auto probs = probs_for(trial);
    TopKRow row{TopKRow::Series::individual, r + 1, trial.trial_id, 0, trial.cv_score, {}};
    row.test = micro_prf_12(confusion(test_gold, argmax_labels(probs)));
    rows.push_back(row);
    acc.add(probs);
    while (next_k < sorted_ks.size() && sorted_ks[next_k] == r + 1) {
      TopKRow s{TopKRow::Series::stacked, 0, -1, sorted_ks[next_k], 0.0, {}};
      s.test = micro_prf_12(confusion(test_gold, argmax_labels(acc.mean())));
      stacked.push_back(s);
      ++next_k;
    }
  }
  rows.insert(rows.end(), stacked.begin(), stacked.end());
  return rows;
}

std::string top_k_csv(std::span<const TopKRow> rows) {
  std::string out = "series,rank,trial_id,k,cv_score,test_precision_m,test_recall_m,test_f1_m\n";
  for (const auto& r : rows) {
    const bool ind = r.series == TopKRow::Series::individual;
    out += ind ? "individual," : "stacked,";
    out += (ind ? std::to_string(r.rank) : std::string()) + ",";
    out += (ind ? std::to_string(r.trial_id) : std::string()) + ",";
    out += (ind ? std::string() : std::to_string(r.k)) + ",";
    out += (ind ? format_fixed(r.cv_score, 6) : std::string()) + ",";
    out += format_fixed(r.test.precision, 6) + "," + format_fixed(r.test.recall, 6) + "," +
           format_fixed(r.test.f1, 6) + "\n";
  }
  return out;
}

}  // namespace scnn

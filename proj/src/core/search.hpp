#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embeddings.hpp"
#include "ensemble.hpp"
#include "metrics.hpp"
#include "search_space.hpp"

namespace scnn {

enum class TrialStatus { ok, failed };

struct TrialRecord {
  int trial_id = 0;
  HyperParams hp;
  double cv_score = 0.0;  // NaN for failed trials
  TrialStatus status = TrialStatus::ok;
  std::string error;
  std::optional<double> wall_time_s;
  std::vector<std::string> model_paths;  // relative to the run directory

  bool operator==(const TrialRecord&) const = default;
};

// Trials ordered by (-cv_score, trial_id); failed trials last by trial_id.
struct Leaderboard {
  std::vector<TrialRecord> trials;

  void sort();
  std::vector<const TrialRecord*> ok_trials() const;
};

// Header: trial_id,cv_score,status,wall_time_s,<hyperparameter fields>.
std::string leaderboard_csv(const Leaderboard& board);
Leaderboard parse_leaderboard_csv(std::string_view text);

struct SearchOptions {
  std::size_t n_trials = 1;
  int parallelism = 1;
  bool unrestricted = false;
  bool record_wall_time = false;
  // When set, trial artifacts go to <run_dir>/trials/<id>/.
  std::optional<std::filesystem::path> run_dir;
  bool keep_models = false;
};

struct SearchResult {
  Leaderboard board;
  // Successful trials in trial-id order; populated with keep_models.
  std::vector<std::shared_ptr<const FoldEnsemble>> ensembles;
};

// Seed of trial `trial_id` and of the configuration sampler.
std::uint64_t trial_seed(std::uint64_t seed, int trial_id);
std::uint64_t sampler_seed(std::uint64_t seed);

// Samples `n_trials` distinct configurations, trains one fold ensemble per
// configuration and ranks them. The result does not depend on parallelism.
SearchResult run_search(const DocSets& docs, std::span<const ClassLabel> gold, std::span<const std::string> ids,
                        const SearchSpace& space, const FoldAssignment& folds, const TrainSchedule& schedule,
                        std::uint64_t seed, const SearchOptions& options);

// Test-set probabilities of one trial's fold ensemble.
using TrialTestProbs = std::function<ProbMatrix(const TrialRecord&)>;

struct TopKRow {
  enum class Series { individual, stacked } series;
  std::size_t rank = 0;  // individual rows: 1-based position on the board
  int trial_id = -1;
  std::size_t k = 0;     // stacked rows
  double cv_score = 0.0;
  Prf test;
};

// One row per successful trial (rank order) followed by one stacked row per
// K (ascending).
std::vector<TopKRow> top_k_report(const Leaderboard& board, std::span<const std::size_t> ks,
                                  std::span<const ClassLabel> test_gold, const TrialTestProbs& probs_for);
std::string top_k_csv(std::span<const TopKRow> rows);

}  // namespace scnn

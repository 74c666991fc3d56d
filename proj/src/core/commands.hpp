#pragma once

// Batch operations behind the command-line subcommands. Each writes plain
// files (TSV/CSV/JSON and the binary model format) and removes whatever it
// created if it fails.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embeddings.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace scnn {

using EmbeddingSpecs = std::vector<std::pair<std::string, std::filesystem::path>>;

// Parses `name=path[,name=path...]`.
EmbeddingSpecs parse_embedding_specs(const std::string& text);
EmbeddingRegistry load_registry(const EmbeddingSpecs& specs);

struct RunOptions {
  std::filesystem::path train_path;
  EmbeddingSpecs embeddings;
  int folds = 5;
  std::uint64_t seed = 0;
  int parallelism = 1;
  TrainSchedule schedule;
  bool unrestricted = false;
  bool record_wall_time = false;
  std::filesystem::path out_dir;
};

struct SearchCommand : RunOptions {
  std::size_t n_trials = 99;
  std::optional<std::filesystem::path> space_path;
};

struct TrainCommand : RunOptions {
  std::filesystem::path config_path;
};

// Writes run/{manifest.json, leaderboard.csv, trials/<id>/{fold*.scnn, oof.tsv}}.
void search_command(const SearchCommand& cmd);
// Same layout with a single trial (id 0) for the configured hyperparameters.
double train_command(const TrainCommand& cmd);

struct StackCommand {
  std::filesystem::path run_dir;
  std::vector<std::size_t> ks;
  // Manifest path; only valid with a single K. Default: <run>/ensemble_top<K>.json.
  std::optional<std::filesystem::path> out;
  // With a labeled test set, also writes the top-K report CSV.
  std::optional<std::filesystem::path> test_path;
  EmbeddingSpecs embeddings;
  std::optional<std::filesystem::path> report_path;
};

// Returns the written manifest paths.
std::vector<std::filesystem::path> stack_command(const StackCommand& cmd);

struct PredictCommand {
  std::filesystem::path manifest;
  std::filesystem::path input;
  EmbeddingSpecs embeddings;
  std::filesystem::path out;
  bool verify_scores = false;
};

// Rows `id<TAB>pred<TAB>p1<TAB>p2<TAB>p3`, 6 decimals, input order.
std::vector<std::string> predict_command(const PredictCommand& cmd);
std::string format_predictions(std::span<const Example> examples, const ProbMatrix& probs);

struct Prediction {
  std::string id;
  ClassLabel label;
  ProbRow probs;
};
std::vector<Prediction> parse_predictions(std::string_view text);

MetricsReport evaluate_command(const std::filesystem::path& gold_path, const std::filesystem::path& pred_path,
                               const std::optional<std::filesystem::path>& out);

void synth_command(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace scnn

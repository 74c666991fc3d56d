#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "model.hpp"

namespace scnn {

// k models from k-fold cross-validation; member i held out fold i.
struct FoldEnsemble {
  HyperParams hp;
  int trial_id = 0;
  std::vector<TrainedModel> members;
  ProbMatrix oof_probs;  // one row per training example, in dataset order
  double cv_score = 0.0;
};

// Trains the fold models of one configuration. `docs` and `gold` cover the
// whole training set; fold i's model trains on every other fold and uses
// fold i as its dev set. Fold trainings run on up to `parallelism` threads.
FoldEnsemble train_fold_ensemble(const HyperParams& hp, std::span<const DocMatrix> docs,
                                 std::span<const ClassLabel> gold, const FoldAssignment& folds,
                                 const TrainSchedule& schedule, std::uint64_t seed, int trial_id = 0,
                                 int parallelism = 1, bool unrestricted = false);

// Seed of the model trained for fold `fold` of a trial seeded with `seed`.
std::uint64_t fold_seed(std::uint64_t seed, int fold);

// Running mean of probability matrices, added in a fixed order.
class ProbAccumulator {
 public:
  void add(const ProbMatrix& probs);
  std::size_t count() const { return count_; }
  ProbMatrix mean() const;

 private:
  ProbMatrix sum_;
  std::size_t count_ = 0;
};

ProbMatrix ensemble_predict(const FoldEnsemble& fe, std::span<const DocMatrix> docs);

// Ranking key for stacking: descending cv_score, then ascending trial_id.
struct RankKey {
  double cv_score;
  int trial_id;
};
bool ranks_before(const RankKey& a, const RankKey& b);
std::vector<std::size_t> rank_order(std::span<const RankKey> keys);

struct StackedEnsemble {
  std::vector<std::shared_ptr<const FoldEnsemble>> ranked_members;
  std::size_t k() const { return ranked_members.size(); }
};

StackedEnsemble stack_top_k(std::span<const std::shared_ptr<const FoldEnsemble>> trials, std::size_t k);

// Mean of the members' ensemble predictions; each member selects its own
// embedding through `docs_for`.
using DocsForHp = std::function<std::span<const DocMatrix>(const HyperParams&)>;
ProbMatrix stacked_predict(const StackedEnsemble& se, const DocsForHp& docs_for);
ProbMatrix stacked_predict(const StackedEnsemble& se, std::span<const DocMatrix> docs);

// ---------------------------------------------------------------------------
// Persistence. A manifest lists every member model file (paths relative to
// the manifest) with its sha256, trial id, fold and cv score, in rank order.

struct ManifestMember {
  std::string path;
  std::string sha256;
  int trial_id = 0;
  int fold = 0;
  double cv_score = 0.0;

  bool operator==(const ManifestMember&) const = default;
};

struct EnsembleManifest {
  int format_version = 1;
  std::size_t k = 0;
  std::uint64_t fold_seed = 0;
  std::string space_descriptor;
  std::vector<ManifestMember> members;

  bool operator==(const EnsembleManifest&) const = default;
};

inline constexpr int kManifestFormatVersion = 1;

std::string manifest_json(const EnsembleManifest& m);
EnsembleManifest parse_manifest(std::string_view text);

// Out-of-fold predictions file: `id<TAB>gold<TAB>p1<TAB>p2<TAB>p3`, exact
// decimal probabilities.
std::string format_oof(std::span<const std::string> ids, std::span<const ClassLabel> gold, const ProbMatrix& probs);
struct OofTable {
  std::vector<std::string> ids;
  std::vector<ClassLabel> gold;
  ProbMatrix probs;
};
OofTable parse_oof(std::string_view text);

// Writes trial_<id>/fold<i>.scnn + oof.tsv for every member and the manifest.
void save_ensemble(const StackedEnsemble& se, std::span<const std::string> train_ids,
                   std::span<const ClassLabel> train_gold, std::uint64_t fold_seed,
                   const std::string& space_descriptor, const std::filesystem::path& dir,
                   const std::string& manifest_name = "ensemble.json");

struct LoadedEnsemble {
  StackedEnsemble ensemble;
  EnsembleManifest manifest;
  std::vector<std::string> warnings;
};

// Verifies every member file's hash. With `verify_scores`, each member's
// cv_score is recomputed from the oof.tsv beside its model files; a
// disagreement is reported as a warning, not an error.
LoadedEnsemble load_ensemble(const std::filesystem::path& manifest_path, bool verify_scores = false);

}  // namespace scnn

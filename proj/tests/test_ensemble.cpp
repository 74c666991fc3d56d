#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "ensemble.hpp"
#include "errors.hpp"
#include "fileio.hpp"
#include "helpers.hpp"
#include "rng.hpp"

using namespace scnn;
using namespace scnn::testing;
namespace fs = std::filesystem;

namespace {

using Trials = std::vector<std::shared_ptr<const FoldEnsemble>>;

std::vector<int> member_ids(const StackedEnsemble& se) {
  std::vector<int> ids;
  for (const auto& m : se.ranked_members) ids.push_back(m->trial_id);
  return ids;
}

double max_abs_diff(const ProbMatrix& a, const ProbMatrix& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(a[i][c] - b[i][c]));
  return d;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("probability averaging") {
  ProbAccumulator acc;
  acc.add({{1, 0, 0}});
  acc.add({{0, 1, 0}});
  CHECK(acc.mean() == ProbMatrix{{0.5, 0.5, 0.0}});
  ProbAccumulator bad;
  bad.add({{1, 0, 0}});
  CHECK_THROWS(bad.add({{1, 0, 0}, {0, 1, 0}}));
}

TEST_CASE("identical members average to one member") {
  Rng rng(1);
  const auto docs = random_docs(6, 4, rng);
  auto fe = random_fold_ensemble(0, 0.5, 3, 4);
  for (auto& m : fe->members) m = fe->members[0];
  const auto single = predict_proba(fe->members[0].weights, docs);
  CHECK(max_abs_diff(ensemble_predict(*fe, docs), single) <= 1e-7);
  for (const auto& row : ensemble_predict(*random_fold_ensemble(1, 0.5, 4, 4), docs))
    CHECK(std::abs(row[0] + row[1] + row[2] - 1.0) <= 1e-6);
}

TEST_CASE("stack ranking and tie-break") {
  Trials trials{random_fold_ensemble(0, 0.7, 1, 4), random_fold_ensemble(1, 0.9, 2, 4),
                random_fold_ensemble(2, 0.8, 3, 4)};
  CHECK(member_ids(stack_top_k(trials, 2)) == std::vector<int>{1, 2});
  Trials tied{random_fold_ensemble(5, 0.6, 1, 4), random_fold_ensemble(3, 0.6, 2, 4)};
  CHECK(member_ids(stack_top_k(tied, 1)) == std::vector<int>{3});
  CHECK_THROWS_AS(stack_top_k(trials, 0), UsageError);
  CHECK_THROWS_AS(stack_top_k(trials, 4), UsageError);
}

TEST_CASE("singleton stack equals the best trial") {
  Rng rng(2);
  const auto docs = random_docs(5, 4, rng);
  Trials trials{random_fold_ensemble(0, 0.4, 1, 4), random_fold_ensemble(1, 0.8, 2, 4)};
  CHECK(stacked_predict(stack_top_k(trials, 1), docs) == ensemble_predict(*trials[1], docs));
}

TEST_CASE("twenty five-model ensembles make a hundred models") {
  Trials trials;
  for (int t = 0; t < 25; ++t) trials.push_back(random_fold_ensemble(t, 0.01 * t, t, 2));
  const auto se = stack_top_k(trials, 20);
  std::size_t models = 0;
  for (const auto& m : se.ranked_members) models += m->members.size();
  CHECK(models == 100);
}

TEST_CASE("stacking algebra on random instances") {
  Rng rng(33);
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 2 + rng.below(6);
    Trials trials;
    for (std::size_t t = 0; t < n; ++t)
      trials.push_back(random_fold_ensemble(static_cast<int>(t), static_cast<double>(rng.below(3)) / 3.0,
                                            rng.next_u64(), 3));
    const auto docs = random_docs(4, 3, rng);
    const std::size_t k = 1 + rng.below(n);
    const auto se = stack_top_k(trials, k);
    ProbAccumulator flat;
    for (const auto& fe : se.ranked_members)
      for (const auto& m : fe->members) flat.add(predict_proba(m.weights, docs));
    const auto stacked = stacked_predict(se, docs);
    CHECK(max_abs_diff(stacked, flat.mean()) <= 1e-6);
    if (k < n) {
      const auto bigger = member_ids(stack_top_k(trials, k + 1));
      const auto ids = member_ids(se);
      CHECK(std::equal(ids.begin(), ids.end(), bigger.begin()));
    }
    auto shuffled = trials;
    rng.shuffle(std::span(shuffled));
    const auto se2 = stack_top_k(shuffled, k);
    CHECK(member_ids(se2) == member_ids(se));
    CHECK(max_abs_diff(stacked_predict(se2, docs), stacked) <= 1e-6);
  }
}

TEST_CASE("fold ensemble training") {
  const auto data = toy_data(60, 5, 4);
  const auto folds = stratified_kfold(data.corpus.train, 3, 10);
  const TrainSchedule sched{3, 2, 2, 0.5};
  const auto fe = train_fold_ensemble(toy_hp(), data.train_docs, data.train_gold, folds, sched, 77, 4, 1, true);
  REQUIRE(fe.members.size() == 3);
  CHECK(fe.trial_id == 4);
  REQUIRE(fe.oof_probs.size() == data.train_docs.size());
  for (std::size_t i = 0; i < data.train_docs.size(); ++i)
    CHECK(fe.oof_probs[i] == forward_probs(fe.members[folds.fold_of[i]].weights, data.train_docs[i]));
  CHECK(fe.cv_score == micro_f1_12(fe.oof_probs, data.train_gold));
  CHECK(fe.members[1].weights.init_seed == derive_seed(fold_seed(77, 1), "init"));

  const auto again = train_fold_ensemble(toy_hp(), data.train_docs, data.train_gold, folds, sched, 77, 4, 3, true);
  CHECK(again.cv_score == fe.cv_score);
  CHECK(again.oof_probs == fe.oof_probs);
  CHECK(again.members == fe.members);
}

TEST_CASE("fold training errors name the fold") {
  const auto data = toy_data(30, 5, 4);
  const auto folds = stratified_kfold(data.corpus.train, 2, 1);
  auto hp = toy_hp();
  hp.filter_sizes = {1, 2, 3, 4, 50};
  CHECK_THROWS_WITH(train_fold_ensemble(hp, data.train_docs, data.train_gold, folds, {2, 2, 2, 0.5}, 1, 0, 1, true),
                    doctest::Contains("fold 0"));
}

TEST_CASE("manifest and oof text round trips") {
  EnsembleManifest m;
  m.k = 2;
  m.fold_seed = 0xfeedfacecafebeefULL;
  m.space_descriptor = "abc";
  m.members = {{"trial_3/fold0.scnn", "00ff", 3, 0, 0.8125}, {"trial_1/fold0.scnn", "11aa", 1, 0, 1.0 / 3.0}};
  CHECK(parse_manifest(manifest_json(m)) == m);

  Rng rng(6);
  std::vector<std::string> ids{"a", "b", "c"};
  std::vector<ClassLabel> gold{ClassLabel::no_intake, ClassLabel::personal_intake, ClassLabel::possible_intake};
  ProbMatrix probs(3);
  for (auto& r : probs) {
    const double a = rng.uniform01(), b = rng.uniform01() * (1 - a);
    r = {a, b, 1 - a - b};
  }
  const auto t = parse_oof(format_oof(ids, gold, probs));
  CHECK(t.ids == ids);
  CHECK(t.gold == gold);
  CHECK(t.probs == probs);
}

TEST_CASE("ensemble save and load") {
  Rng rng(3);
  const auto docs = random_docs(5, 4, rng);
  Trials trials{random_fold_ensemble(2, 0.9, 1, 4, 2), random_fold_ensemble(7, 0.5, 2, 4, 2)};
  std::vector<std::string> ids{"x", "y"};
  std::vector<ClassLabel> gold{ClassLabel::personal_intake, ClassLabel::no_intake};
  for (auto& t : trials) {
    auto fe = std::const_pointer_cast<FoldEnsemble>(t);
    fe->oof_probs = {{0.9, 0.05, 0.05}, {0.1, 0.1, 0.8}};
    fe->cv_score = micro_f1_12(fe->oof_probs, gold);
  }
  // Distinct scores so the rank order is fixed.
  std::const_pointer_cast<FoldEnsemble>(trials[1])->oof_probs = {{0.1, 0.1, 0.8}, {0.1, 0.1, 0.8}};
  std::const_pointer_cast<FoldEnsemble>(trials[1])->cv_score = 0.0;
  const auto se = stack_top_k(trials, 2);
  const auto dir = fresh_dir("scnn_ensemble_test");
  save_ensemble(se, ids, gold, 42, "desc", dir);

  const auto loaded = load_ensemble(dir / "ensemble.json", true);
  CHECK(loaded.warnings.empty());
  CHECK(loaded.manifest.k == 2);
  CHECK(loaded.manifest.members.size() == 4);
  CHECK(member_ids(loaded.ensemble) == member_ids(se));
  CHECK(stacked_predict(loaded.ensemble, docs) == stacked_predict(se, docs));

  SUBCASE("edited cv_score warns") {
    auto m = parse_manifest(read_file(dir / "ensemble.json"));
    for (auto& mem : m.members)
      if (mem.trial_id == 2) mem.cv_score = 0.95;
    write_file(dir / "ensemble.json", manifest_json(m));
    CHECK(load_ensemble(dir / "ensemble.json", false).warnings.empty());
    const auto w = load_ensemble(dir / "ensemble.json", true).warnings;
    REQUIRE(w.size() == 1);
    CHECK(w[0].find("trial 2") != std::string::npos);
  }
  SUBCASE("tampered member") {
    write_file(dir / "trial_7/fold1.scnn", read_file(dir / "trial_7/fold1.scnn") + "x");
    CHECK_THROWS_WITH_AS(load_ensemble(dir / "ensemble.json"), doctest::Contains("hash mismatch: trial_7/fold1.scnn"),
                         DataError);
  }
  SUBCASE("missing member") {
    fs::remove(dir / "trial_2/fold0.scnn");
    CHECK_THROWS_WITH_AS(load_ensemble(dir / "ensemble.json"), doctest::Contains("missing: trial_2/fold0.scnn"),
                         DataError);
  }
  fs::remove_all(dir);
}

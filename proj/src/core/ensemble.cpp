#include "ensemble.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <json.hpp>

#include "errors.hpp"
#include "fileio.hpp"
#include "metrics.hpp"
#include "parallel.hpp"

namespace scnn {

std::uint64_t fold_seed(std::uint64_t seed, int fold) { return derive_seed(seed, "fold:" + std::to_string(fold)); }

FoldEnsemble train_fold_ensemble(const HyperParams& hp, std::span<const DocMatrix> docs,
                                 std::span<const ClassLabel> gold, const FoldAssignment& folds,
                                 const TrainSchedule& schedule, std::uint64_t seed, int trial_id, int parallelism,
                                 bool unrestricted) {
  if (docs.size() != gold.size() || docs.size() != folds.fold_of.size())
    throw UsageError("documents, labels and fold assignment differ in length");
  if (docs.empty()) throw UsageError("empty training set");
  validate(hp, unrestricted);

  FoldEnsemble fe;
  fe.hp = hp;
  fe.trial_id = trial_id;
  fe.members.resize(static_cast<std::size_t>(folds.k));
  fe.oof_probs.assign(docs.size(), ProbRow{});

  parallel_for(static_cast<std::size_t>(folds.k), parallelism, [&](std::size_t i) {
    const int fold = static_cast<int>(i);
    try {
      std::vector<LabeledDoc> train_set;
      std::vector<LabeledDoc> dev_set;
      for (std::size_t n = 0; n < docs.size(); ++n)
        (folds.fold_of[n] == fold ? dev_set : train_set).push_back({&docs[n], gold[n]});
      const auto s = fold_seed(seed, fold);
      auto model = build_model(hp, docs.front().dim, derive_seed(s, "init"), unrestricted, docs.front().rows);
      fe.members[i] = train(std::move(model), train_set, dev_set, schedule, derive_seed(s, "train"));

      std::vector<const DocMatrix*> held_out;
      std::vector<std::size_t> where;
      for (std::size_t n = 0; n < docs.size(); ++n) {
        if (folds.fold_of[n] == fold) {
          held_out.push_back(&docs[n]);
          where.push_back(n);
        }
      }
      const auto probs = predict_proba(fe.members[i].weights, std::span<const DocMatrix* const>(held_out));
      for (std::size_t r = 0; r < where.size(); ++r) fe.oof_probs[where[r]] = probs[r];
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(fold) + ": " + e.what());
    }
  });

  fe.cv_score = micro_f1_12(fe.oof_probs, gold);
  return fe;
}

void ProbAccumulator::add(const ProbMatrix& probs) {
  if (count_ == 0) {
    sum_ = probs;
  } else {
    if (probs.size() != sum_.size()) throw UsageError("cannot average prediction matrices of different sizes");
    for (std::size_t r = 0; r < sum_.size(); ++r)
      for (int c = 0; c < kNumClasses; ++c) sum_[r][c] += probs[r][c];
  }
  ++count_;
}

ProbMatrix ProbAccumulator::mean() const {
  ProbMatrix out = sum_;
  if (count_ == 0) return out;
  const auto n = static_cast<double>(count_);
  for (auto& row : out)
    for (auto& v : row) v /= n;
  return out;
}

ProbMatrix ensemble_predict(const FoldEnsemble& fe, std::span<const DocMatrix> docs) {
  ProbAccumulator acc;
  for (const auto& m : fe.members) acc.add(predict_proba(m.weights, docs));
  if (acc.count() == 0) return ProbMatrix(docs.size(), ProbRow{});
  return acc.mean();
}

bool ranks_before(const RankKey& a, const RankKey& b) {
  if (a.cv_score != b.cv_score) return a.cv_score > b.cv_score;
  return a.trial_id < b.trial_id;
}

std::vector<std::size_t> rank_order(std::span<const RankKey> keys) {
  std::vector<std::size_t> idx(keys.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ranks_before(keys[a], keys[b]); });
  return idx;
}

StackedEnsemble stack_top_k(std::span<const std::shared_ptr<const FoldEnsemble>> trials, std::size_t k) {
  if (k < 1 || k > trials.size()) {
    throw UsageError("top-k must be between 1 and " + std::to_string(trials.size()) + ", got " + std::to_string(k));
  }
  std::vector<RankKey> keys;
  keys.reserve(trials.size());
  for (const auto& t : trials) keys.push_back({t->cv_score, t->trial_id});
  const auto order = rank_order(keys);
  StackedEnsemble se;
  for (std::size_t i = 0; i < k; ++i) se.ranked_members.push_back(trials[order[i]]);
  return se;
}

ProbMatrix stacked_predict(const StackedEnsemble& se, const DocsForHp& docs_for) {
  ProbAccumulator acc;
  for (const auto& member : se.ranked_members) acc.add(ensemble_predict(*member, docs_for(member->hp)));
  return acc.mean();
}

ProbMatrix stacked_predict(const StackedEnsemble& se, std::span<const DocMatrix> docs) {
  return stacked_predict(se, [docs](const HyperParams&) { return docs; });
}

// ---------------------------------------------------------------------------

std::string manifest_json(const EnsembleManifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = m.format_version;
  j["K"] = m.k;
  j["fold_seed"] = m.fold_seed;
  j["space_descriptor"] = m.space_descriptor;
  auto members = nlohmann::ordered_json::array();
  for (const auto& mem : m.members) {
    nlohmann::ordered_json e;
    e["path"] = mem.path;
    e["sha256"] = mem.sha256;
    e["trial_id"] = mem.trial_id;
    e["fold"] = mem.fold;
    e["cv_score"] = mem.cv_score;
    members.push_back(std::move(e));
  }
  j["members"] = std::move(members);
  return j.dump(2) + "\n";
}

EnsembleManifest parse_manifest(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EnsembleManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestFormatVersion)
      throw DataError("unsupported manifest format version " + std::to_string(m.format_version));
    m.k = j.at("K").get<std::size_t>();
    m.fold_seed = j.at("fold_seed").get<std::uint64_t>();
    m.space_descriptor = j.at("space_descriptor").get<std::string>();
    for (const auto& e : j.at("members")) {
      m.members.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>(),
                           e.at("trial_id").get<int>(), e.at("fold").get<int>(), e.at("cv_score").get<double>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ensemble manifest: ") + e.what());
  }
}

std::string format_oof(std::span<const std::string> ids, std::span<const ClassLabel> gold, const ProbMatrix& probs) {
  if (ids.size() != gold.size() || ids.size() != probs.size())
    throw UsageError("oof table columns differ in length");
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    out += '\t';
    out += std::to_string(static_cast<int>(gold[i]));
    for (double p : probs[i]) {
      out += '\t';
      out += format_exact(p);
    }
    out += '\n';
  }
  return out;
}

OofTable parse_oof(std::string_view text) {
  OofTable t;
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
    if (f.size() != 5) throw DataError("oof table: expected 5 fields at line " + std::to_string(line_no));
    const auto label = parse_label(f[1]);
    if (!label) throw DataError("oof table: bad label at line " + std::to_string(line_no));
    t.ids.emplace_back(f[0]);
    t.gold.push_back(*label);
    t.probs.push_back({parse_double(f[2], "probability"), parse_double(f[3], "probability"),
                       parse_double(f[4], "probability")});
  }
  return t;
}

void save_ensemble(const StackedEnsemble& se, std::span<const std::string> train_ids,
                   std::span<const ClassLabel> train_gold, std::uint64_t folds_seed,
                   const std::string& space_descriptor, const std::filesystem::path& dir,
                   const std::string& manifest_name) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  EnsembleManifest manifest;
  manifest.k = se.k();
  manifest.fold_seed = folds_seed;
  manifest.space_descriptor = space_descriptor;
  for (const auto& member : se.ranked_members) {
    const auto sub = "trial_" + std::to_string(member->trial_id);
    fs::create_directories(dir / sub);
    write_file(dir / sub / "oof.tsv", format_oof(train_ids, train_gold, member->oof_probs));
    for (std::size_t f = 0; f < member->members.size(); ++f) {
      const auto rel = sub + "/fold" + std::to_string(f) + ".scnn";
      const auto bytes = serialize_model(member->members[f]);
      write_file(dir / rel, bytes);
      manifest.members.push_back({rel, sha256_hex(bytes), member->trial_id, static_cast<int>(f), member->cv_score});
    }
  }
  write_file(dir / manifest_name, manifest_json(manifest));
}

LoadedEnsemble load_ensemble(const std::filesystem::path& manifest_path, bool verify_scores) {
  namespace fs = std::filesystem;
  LoadedEnsemble out;
  out.manifest = parse_manifest(read_file(manifest_path));
  const auto base = manifest_path.parent_path();

  // Group member files by trial, keeping manifest (rank) order.
  std::vector<std::shared_ptr<FoldEnsemble>> groups;
  std::map<int, std::size_t> slot;
  for (const auto& mem : out.manifest.members) {
    const auto file = base / mem.path;
    if (!fs::exists(file)) throw DataError("ensemble member missing: " + mem.path);
    const auto bytes = read_file(file);
    if (sha256_hex(bytes) != mem.sha256) throw DataError("ensemble member hash mismatch: " + mem.path);
    auto model = [&] {
      try {
        return deserialize_model(bytes);
      } catch (const DataError& e) {
        throw DataError(mem.path + ": " + e.what());
      }
    }();
    auto [it, fresh] = slot.emplace(mem.trial_id, groups.size());
    if (fresh) {
      auto fe = std::make_shared<FoldEnsemble>();
      fe->trial_id = mem.trial_id;
      fe->hp = model.weights.hp;
      fe->cv_score = mem.cv_score;
      groups.push_back(fe);
    }
    auto& fe = *groups[it->second];
    if (static_cast<std::size_t>(mem.fold) != fe.members.size())
      throw DataError("ensemble member out of fold order: " + mem.path);
    if (mem.cv_score != fe.cv_score) throw DataError("inconsistent cv_score for trial " + std::to_string(mem.trial_id));
    if (!(model.weights.hp == fe.hp))
      throw DataError("member " + mem.path + " has different hyperparameters than its trial");
    fe.members.push_back(std::move(model));
  }
  if (groups.size() != out.manifest.k) {
    throw DataError("manifest K=" + std::to_string(out.manifest.k) + " but lists " + std::to_string(groups.size()) +
                    " trials");
  }
  for (std::size_t i = 1; i < groups.size(); ++i) {
    if (!ranks_before({groups[i - 1]->cv_score, groups[i - 1]->trial_id}, {groups[i]->cv_score, groups[i]->trial_id}))
      out.warnings.push_back("manifest members are not in rank order at trial " + std::to_string(groups[i]->trial_id));
  }

  if (verify_scores) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto& fe = *groups[g];
      const auto first = std::find_if(out.manifest.members.begin(), out.manifest.members.end(),
                                      [&](const ManifestMember& m) { return m.trial_id == fe.trial_id; });
      const auto oof_path = (base / first->path).parent_path() / "oof.tsv";
      if (!fs::exists(oof_path)) {
        out.warnings.push_back("trial " + std::to_string(fe.trial_id) + ": no oof.tsv to verify cv_score");
        continue;
      }
      const auto oof = parse_oof(read_file(oof_path));
      fe.oof_probs = oof.probs;
      const double recomputed = micro_f1_12(oof.probs, oof.gold);
      if (recomputed != fe.cv_score) {
        out.warnings.push_back("trial " + std::to_string(fe.trial_id) + ": manifest cv_score " +
                               format_exact(fe.cv_score) + " differs from recomputed " + format_exact(recomputed));
      }
    }
  }
  for (auto& g : groups) out.ensemble.ranked_members.push_back(std::move(g));
  return out;
}

}  // namespace scnn

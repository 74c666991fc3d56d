#include "scnn/scnn.h"

#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <memory>
#include <string>
#include <vector>

#include "commands.hpp"
#include "corpus.hpp"
#include "embeddings.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"

struct scnn_dataset {
  std::vector<scnn::Example> examples;
};

struct scnn_embeddings {
  scnn::EmbeddingRegistry registry;
};

struct scnn_ensemble {
  scnn::LoadedEnsemble loaded;
};

namespace {

thread_local std::string g_last_error;

scnn_status fail(scnn_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
scnn_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return SCNN_OK;
  } catch (const scnn::Error& e) {
    return fail(static_cast<scnn_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SCNN_ERR_DATA, "out of memory");
  } catch (const std::exception& e) {
    return fail(SCNN_ERR_DATA, e.what());
  }
}

std::string need(const char* s, const char* what) {
  if (s == nullptr || *s == '\0') throw scnn::UsageError(std::string(what) + " is required");
  return s;
}

scnn::TrainSchedule to_schedule(const scnn_schedule& s) {
  return {s.max_epochs, s.patience, s.restarts_allowed, s.lr_decay};
}

void fill_run_options(const scnn_run_options& in, scnn::RunOptions& out) {
  out.train_path = need(in.train_path, "training set path");
  out.embeddings = scnn::parse_embedding_specs(need(in.embeddings, "embeddings"));
  out.folds = in.folds;
  out.seed = in.seed;
  out.parallelism = in.parallelism;
  out.schedule = to_schedule(in.schedule);
  out.unrestricted = in.unrestricted_space != 0;
  out.record_wall_time = in.record_wall_time != 0;
  out.out_dir = need(in.out_dir, "output directory");
}

void fill_metrics(const scnn::MetricsReport& r, scnn_metrics* m) {
  for (int c = 0; c < 3; ++c) {
    m->precision[c] = r.per_class[c].precision;
    m->recall[c] = r.per_class[c].recall;
    m->f1[c] = r.per_class[c].f1;
  }
  m->precision_m = r.micro.precision;
  m->recall_m = r.micro.recall;
  m->f1_m = r.micro.f1;
}

}  // namespace

extern "C" {

const char* scnn_version(void) { return "1.0.0"; }

const char* scnn_last_error(void) { return g_last_error.c_str(); }

scnn_status scnn_dataset_load(const char* path, int labeled, scnn_dataset** out) {
  return guarded([&] {
    if (out == nullptr) throw scnn::UsageError("null output handle");
    auto ds = std::make_unique<scnn_dataset>();
    const auto p = need(path, "dataset path");
    ds->examples = labeled < 0 ? scnn::parse_dataset_auto(p) : scnn::parse_dataset(p, labeled != 0);
    *out = ds.release();
  });
}

size_t scnn_dataset_size(const scnn_dataset* dataset) { return dataset ? dataset->examples.size() : 0; }

int scnn_dataset_is_labeled(const scnn_dataset* dataset) {
  return dataset && !dataset->examples.empty() && dataset->examples.front().label.has_value();
}

scnn_status scnn_dataset_write(const scnn_dataset* dataset, const char* path) {
  return guarded([&] {
    if (dataset == nullptr) throw scnn::UsageError("null dataset");
    scnn::write_dataset(dataset->examples, need(path, "output path"));
  });
}

void scnn_dataset_free(scnn_dataset* dataset) { delete dataset; }

scnn_status scnn_embeddings_create(scnn_embeddings** out) {
  return guarded([&] {
    if (out == nullptr) throw scnn::UsageError("null output handle");
    *out = new scnn_embeddings();
  });
}

scnn_status scnn_embeddings_load(scnn_embeddings* registry, const char* name, const char* path) {
  return guarded([&] {
    if (registry == nullptr) throw scnn::UsageError("null embedding registry");
    registry->registry.load(need(name, "embedding name"), need(path, "embedding path"));
  });
}

scnn_status scnn_embeddings_load_spec(scnn_embeddings* registry, const char* spec) {
  return guarded([&] {
    if (registry == nullptr) throw scnn::UsageError("null embedding registry");
    for (const auto& [name, path] : scnn::parse_embedding_specs(need(spec, "embedding spec")))
      registry->registry.load(name, path);
  });
}

size_t scnn_embeddings_dim(const scnn_embeddings* registry, const char* name) {
  if (registry == nullptr || name == nullptr || !registry->registry.contains(name)) return 0;
  return registry->registry.get(name).dim;
}

void scnn_embeddings_free(scnn_embeddings* registry) { delete registry; }

void scnn_run_options_init(scnn_run_options* options) {
  if (options == nullptr) return;
  *options = scnn_run_options{};
  const scnn::TrainSchedule defaults;
  options->folds = 5;
  options->parallelism = 1;
  options->schedule = {defaults.max_epochs, defaults.patience, defaults.restarts_allowed, defaults.lr_decay};
  options->n_trials = 99;
}

scnn_status scnn_search(const scnn_run_options* options) {
  return guarded([&] {
    if (options == nullptr) throw scnn::UsageError("null options");
    scnn::SearchCommand cmd;
    fill_run_options(*options, cmd);
    cmd.n_trials = options->n_trials;
    if (options->space_path != nullptr && *options->space_path != '\0') cmd.space_path = options->space_path;
    scnn::search_command(cmd);
  });
}

scnn_status scnn_train(const scnn_run_options* options, double* cv_score) {
  return guarded([&] {
    if (options == nullptr) throw scnn::UsageError("null options");
    scnn::TrainCommand cmd;
    fill_run_options(*options, cmd);
    cmd.config_path = need(options->config_path, "config path");
    const double score = scnn::train_command(cmd);
    if (cv_score != nullptr) *cv_score = score;
  });
}

scnn_status scnn_stack(const char* run_dir, const size_t* ks, size_t n_ks, const char* out_path,
                       const char* test_path, const char* embeddings, const char* report_path) {
  return guarded([&] {
    scnn::StackCommand cmd;
    cmd.run_dir = need(run_dir, "run directory");
    if (ks == nullptr && n_ks != 0) throw scnn::UsageError("null top-k list");
    cmd.ks.assign(ks, ks + n_ks);
    if (out_path != nullptr && *out_path != '\0') cmd.out = out_path;
    if (test_path != nullptr && *test_path != '\0') {
      cmd.test_path = test_path;
      cmd.embeddings = scnn::parse_embedding_specs(need(embeddings, "embeddings for the test set"));
    }
    if (report_path != nullptr && *report_path != '\0') cmd.report_path = report_path;
    scnn::stack_command(cmd);
  });
}

scnn_status scnn_ensemble_load(const char* manifest_path, int verify_scores, scnn_ensemble** out) {
  return guarded([&] {
    if (out == nullptr) throw scnn::UsageError("null output handle");
    auto e = std::make_unique<scnn_ensemble>();
    e->loaded = scnn::load_ensemble(need(manifest_path, "manifest path"), verify_scores != 0);
    *out = e.release();
  });
}

size_t scnn_ensemble_k(const scnn_ensemble* ensemble) { return ensemble ? ensemble->loaded.ensemble.k() : 0; }

size_t scnn_ensemble_model_count(const scnn_ensemble* ensemble) {
  if (ensemble == nullptr) return 0;
  size_t n = 0;
  for (const auto& m : ensemble->loaded.ensemble.ranked_members) n += m->members.size();
  return n;
}

size_t scnn_ensemble_warning_count(const scnn_ensemble* ensemble) {
  return ensemble ? ensemble->loaded.warnings.size() : 0;
}

const char* scnn_ensemble_warning(const scnn_ensemble* ensemble, size_t index) {
  if (ensemble == nullptr || index >= ensemble->loaded.warnings.size()) return nullptr;
  return ensemble->loaded.warnings[index].c_str();
}

scnn_status scnn_ensemble_predict(const scnn_ensemble* ensemble, const scnn_embeddings* registry,
                                  const scnn_dataset* dataset, double* probs) {
  return guarded([&] {
    if (ensemble == nullptr || registry == nullptr || dataset == nullptr || probs == nullptr)
      throw scnn::UsageError("null argument");
    std::map<std::string, std::vector<scnn::DocMatrix>> docs;
    for (const auto& m : ensemble->loaded.ensemble.ranked_members) {
      const auto& name = m->hp.word_embedding;
      if (!docs.count(name)) docs.emplace(name, scnn::embed_examples(registry->registry.get(name), dataset->examples));
    }
    const auto out = scnn::stacked_predict(ensemble->loaded.ensemble, [&](const scnn::HyperParams& hp) {
      return std::span<const scnn::DocMatrix>(docs.at(hp.word_embedding));
    });
    for (size_t i = 0; i < out.size(); ++i)
      for (int c = 0; c < 3; ++c) probs[3 * i + c] = out[i][c];
  });
}

void scnn_ensemble_free(scnn_ensemble* ensemble) { delete ensemble; }

scnn_status scnn_predict_file(const char* manifest_path, const char* input_path, const char* embeddings,
                              const char* out_path, int verify_scores) {
  return guarded([&] {
    scnn::PredictCommand cmd;
    cmd.manifest = need(manifest_path, "manifest path");
    cmd.input = need(input_path, "input path");
    cmd.embeddings = scnn::parse_embedding_specs(need(embeddings, "embeddings"));
    cmd.out = need(out_path, "output path");
    cmd.verify_scores = verify_scores != 0;
    for (const auto& w : scnn::predict_command(cmd)) g_last_error += (g_last_error.empty() ? "" : "\n") + w;
  });
}

scnn_status scnn_evaluate_files(const char* gold_path, const char* pred_path, const char* out_path,
                                scnn_metrics* metrics) {
  return guarded([&] {
    std::optional<std::filesystem::path> out;
    if (out_path != nullptr && *out_path != '\0') out = out_path;
    const auto report = scnn::evaluate_command(need(gold_path, "gold path"), need(pred_path, "predictions path"), out);
    if (metrics != nullptr) fill_metrics(report, metrics);
  });
}

scnn_status scnn_metrics_from_confusion(const int64_t* counts, scnn_metrics* metrics) {
  return guarded([&] {
    if (counts == nullptr || metrics == nullptr) throw scnn::UsageError("null argument");
    scnn::ConfusionMatrix cm;
    for (int g = 0; g < 3; ++g)
      for (int p = 0; p < 3; ++p) {
        if (counts[3 * g + p] < 0) throw scnn::UsageError("negative confusion count");
        cm.counts[g][p] = counts[3 * g + p];
      }
    fill_metrics(scnn::evaluate(cm), metrics);
  });
}

double scnn_f1(double precision, double recall) { return scnn::f1_score(precision, recall); }

scnn_status scnn_gradcheck(uint64_t seed, int cases, double* max_relative_error) {
  return guarded([&] {
    if (cases < 1) throw scnn::UsageError("gradcheck needs at least one case");
    scnn::GradcheckOptions opt;
    opt.cases = cases;
    const auto result = scnn::gradcheck(seed, opt);
    if (max_relative_error != nullptr) *max_relative_error = result.max_relative_error;
  });
}

scnn_status scnn_synth(uint64_t seed, size_t n_train, size_t n_test, size_t dim, const char* out_dir) {
  return guarded([&] {
    scnn::SynthOptions opt;
    opt.seed = seed;
    opt.n_train = n_train;
    opt.n_test = n_test;
    opt.dim = dim;
    scnn::synth_command(opt, need(out_dir, "output directory"));
  });
}

}  // extern "C"

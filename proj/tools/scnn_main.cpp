// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scnn/scnn.h"

namespace {

int report(scnn_status status) {
  if (status != SCNN_OK) std::cerr << "error: " << scnn_last_error() << "\n";
  return static_cast<int>(status);
}

void print_head(const std::string& path, int lines) {
  std::ifstream in(path);
  std::string line;
  for (int i = 0; i < lines && std::getline(in, line); ++i) std::cout << line << "\n";
}

void add_schedule_flags(CLI::App* cmd, scnn_run_options& opt) {
  cmd->add_option("--max-epochs", opt.schedule.max_epochs, "Epoch budget per fold model")->check(CLI::PositiveNumber);
  cmd->add_option("--patience", opt.schedule.patience, "Epochs without dev improvement before annealing")
      ->check(CLI::PositiveNumber);
}

void add_run_flags(CLI::App* cmd, scnn_run_options& opt, std::string& train, std::string& embeddings,
                   std::string& out) {
  cmd->add_option("--train", train, "Labeled training TSV")->required();
  cmd->add_option("--embeddings", embeddings, "Embedding tables, name=path[,name=path]")->required();
  cmd->add_option("--folds", opt.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  cmd->add_option("--seed", opt.seed, "Random seed")->required();
  cmd->add_option("--out", out, "Run directory (must be new or empty)")->required();
  cmd->add_option("--parallelism", opt.parallelism, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--unrestricted-space", opt.unrestricted_space, "Allow values outside the published ranges");
  cmd->add_flag("--record-wall-time", opt.record_wall_time, "Fill the leaderboard wall_time_s column");
  add_schedule_flags(cmd, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stacked ensembles of shallow CNN text classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", scnn_version());

  scnn_run_options run;
  scnn_run_options_init(&run);
  std::string train_path, embeddings, out, space_path, config_path;

  auto* search = app.add_subcommand("search", "Random hyperparameter search with fold ensembles");
  add_run_flags(search, run, train_path, embeddings, out);
  search->add_option("--trials", run.n_trials, "Number of distinct configurations")->check(CLI::PositiveNumber);
  search->add_option("--space", space_path, "JSON search space (with --unrestricted-space)")
      ->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train one configuration's fold ensemble");
  add_run_flags(train, run, train_path, embeddings, out);
  train->add_option("--config", config_path, "Hyperparameter JSON")->required()->check(CLI::ExistingFile);

  std::string run_dir, test_path, report_path;
  std::vector<std::size_t> ks;
  auto* stack = app.add_subcommand("stack", "Build top-K stacked ensemble manifests from a run");
  stack->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  stack->add_option("--top-k", ks, "K values, e.g. 3,10,20")->required()->delimiter(',');
  stack->add_option("--out", out, "Manifest path (single K only)");
  stack->add_option("--test", test_path, "Labeled test TSV for the top-K report")->check(CLI::ExistingFile);
  stack->add_option("--embeddings", embeddings, "Embedding tables for --test");
  stack->add_option("--report", report_path, "Report CSV path");

  std::string manifest, input;
  bool verify = false;
  auto* predict = app.add_subcommand("predict", "Predict with a stacked ensemble");
  predict->add_option("--manifest", manifest, "Ensemble manifest")->required()->check(CLI::ExistingFile);
  predict->add_option("--input", input, "Input TSV (labeled or unlabeled)")->required()->check(CLI::ExistingFile);
  predict->add_option("--embeddings", embeddings, "Embedding tables, name=path[,name=path]")->required();
  predict->add_option("--out", out, "Predictions TSV")->required();
  predict->add_flag("--verify-scores", verify, "Recompute member cv scores from stored out-of-fold predictions");

  std::string gold_path, pred_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--gold", gold_path, "Labeled gold TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--pred", pred_path, "Predictions TSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out, "Metrics JSON (default: stdout)");

  std::uint64_t seed = 0;
  int cases = 25;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check on tiny random models");
  gradcheck->add_option("--seed", seed, "Random seed")->required();
  gradcheck->add_option("--cases", cases, "Random (model, input) cases")->check(CLI::PositiveNumber);

  std::size_t n_train = 600, n_test = 300, dim = 16;
  auto* synth = app.add_subcommand("synth", "Write the keyword-separable synthetic corpus");
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--train-size", n_train, "Training examples")->check(CLI::PositiveNumber);
  synth->add_option("--test-size", n_test, "Test examples");
  synth->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return SCNN_ERR_USAGE;
  }

  run.train_path = train_path.c_str();
  run.embeddings = embeddings.c_str();
  run.out_dir = out.c_str();

  if (search->parsed()) {
    if (!space_path.empty()) run.space_path = space_path.c_str();
    if (const int rc = report(scnn_search(&run))) return rc;
    std::cout << "search finished: " << out << "\n";
    print_head(out + "/leaderboard.csv", 6);
    return 0;
  }
  if (train->parsed()) {
    run.config_path = config_path.c_str();
    double cv = 0.0;
    if (const int rc = report(scnn_train(&run, &cv))) return rc;
    std::cout << "cv_score " << cv << "\n";
    return 0;
  }
  if (stack->parsed()) {
    if (!test_path.empty() && embeddings.empty()) {
      std::cerr << "error: --test needs --embeddings\n";
      return SCNN_ERR_USAGE;
    }
    const auto rc = report(scnn_stack(run_dir.c_str(), ks.data(), ks.size(), out.empty() ? nullptr : out.c_str(),
                                      test_path.empty() ? nullptr : test_path.c_str(),
                                      embeddings.empty() ? nullptr : embeddings.c_str(),
                                      report_path.empty() ? nullptr : report_path.c_str()));
    return rc;
  }
  if (predict->parsed()) {
    const auto status = scnn_predict_file(manifest.c_str(), input.c_str(), embeddings.c_str(), out.c_str(), verify);
    if (status == SCNN_OK && *scnn_last_error() != '\0') std::cerr << "warning: " << scnn_last_error() << "\n";
    return report(status);
  }
  if (evaluate->parsed()) {
    scnn_metrics m{};
    if (const int rc = report(scnn_evaluate_files(gold_path.c_str(), pred_path.c_str(),
                                                  out.empty() ? nullptr : out.c_str(), &m)))
      return rc;
    if (out.empty()) {
      std::printf("{\n");
      for (int c = 0; c < 3; ++c) std::printf("  \"precision_%d\": %.6f,\n", c + 1, m.precision[c]);
      for (int c = 0; c < 3; ++c) std::printf("  \"recall_%d\": %.6f,\n", c + 1, m.recall[c]);
      for (int c = 0; c < 3; ++c) std::printf("  \"f1_%d\": %.6f,\n", c + 1, m.f1[c]);
      std::printf("  \"precision_m\": %.6f,\n  \"recall_m\": %.6f,\n  \"f1_m\": %.6f\n}\n", m.precision_m,
                  m.recall_m, m.f1_m);
    }
    return 0;
  }
  if (gradcheck->parsed()) {
    double err = 0.0;
    if (const int rc = report(scnn_gradcheck(seed, cases, &err))) return rc;
    std::printf("max relative gradient error: %.6e\n", err);
    return err > 1e-4 ? SCNN_ERR_NUMERIC : 0;
  }
  if (synth->parsed()) return report(scnn_synth(seed, n_train, n_test, dim, out.c_str()));
  return SCNN_ERR_USAGE;
}

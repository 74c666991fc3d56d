#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "embeddings.hpp"
#include "hyperparams.hpp"
#include "network.hpp"

namespace scnn {

using ProbRow = std::array<double, kNumClasses>;
using ProbMatrix = std::vector<ProbRow>;

// Most probable class; ties go to the lowest class.
ClassLabel argmax_label(const ProbRow& probs);
std::vector<ClassLabel> argmax_labels(const ProbMatrix& probs);

struct ShallowCNN {
  HyperParams hp;
  std::size_t embedding_dim = 0;
  std::size_t doc_length = kDocLength;
  std::uint64_t init_seed = 0;
  CnnParams<float> params;

  std::size_t pooled_length() const { return kFilterGroups * static_cast<std::size_t>(hp.n_filters); }
  bool operator==(const ShallowCNN&) const = default;
};

// Number of trainable values as a closed form in (hp, dim).
std::size_t expected_parameter_count(const HyperParams& hp, std::size_t embedding_dim);

ShallowCNN build_model(const HyperParams& hp, std::size_t embedding_dim, std::uint64_t seed,
                       bool unrestricted = false, std::size_t doc_length = kDocLength);

DocView<float> view_of(const DocMatrix& doc);

// Inference-mode class probabilities for one document.
ProbRow forward_probs(const ShallowCNN& model, const DocMatrix& doc);
ProbMatrix predict_proba(const ShallowCNN& model, std::span<const DocMatrix> docs);
ProbMatrix predict_proba(const ShallowCNN& model, std::span<const DocMatrix* const> docs);

struct TrainSchedule {
  int max_epochs = 30;
  int patience = 2;
  int restarts_allowed = 2;
  double lr_decay = 0.5;

  bool operator==(const TrainSchedule&) const = default;
};

enum class EpochAction { proceed, restart, stop };

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_score = 0.0;
  double learning_rate = 0.0;  // rate used during this epoch
  bool improved = false;
  EpochAction action = EpochAction::proceed;

  bool operator==(const EpochRecord&) const = default;
};

// Early stopping with annealing restarts. After `patience` epochs without a
// strict dev improvement the trainer restores the best weights, scales the
// learning rate by lr_decay and resets the optimizer moments; once the
// restart budget is spent the next stagnation stops training.
class AnnealingSchedule {
 public:
  AnnealingSchedule(const TrainSchedule& schedule, double initial_lr);

  struct Decision {
    bool improved = false;
    EpochAction action = EpochAction::proceed;
  };

  Decision observe(double dev_score);

  double learning_rate() const { return lr_; }
  int restart_count() const { return restarts_; }
  int epoch() const { return epoch_; }
  double best_score() const { return best_; }

 private:
  TrainSchedule schedule_;
  double lr_;
  double best_;
  int epoch_ = 0;
  int stagnant_ = 0;
  int restarts_ = 0;
};

struct TrainedModel {
  ShallowCNN weights;
  double best_dev_score = 0.0;
  int epochs_run = 0;
  int restart_count = 0;
  std::vector<EpochRecord> history;

  bool operator==(const TrainedModel&) const = default;
};

struct LabeledDoc {
  const DocMatrix* doc;
  ClassLabel label;
};

// Replaces the dev-set evaluation (used to drive the schedule in tests).
using DevScorer = std::function<double(const ShallowCNN& current, int epoch)>;

TrainedModel train(ShallowCNN model, std::span<const LabeledDoc> train_set, std::span<const LabeledDoc> dev_set,
                   const TrainSchedule& schedule, std::uint64_t seed, const DevScorer& dev_scorer = {});

double micro_f1_12(const ProbMatrix& probs, std::span<const ClassLabel> gold);

// Binary model file: "SCNN", u32 version, u64 header length, JSON header,
// then little-endian float32 tensors in declared order.
inline constexpr std::uint32_t kModelFormatVersion = 1;
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace scnn

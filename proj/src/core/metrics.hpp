#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "corpus.hpp"

namespace scnn {

// counts[g][p]: examples with gold class g+1 predicted as p+1.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

  std::int64_t& at(ClassLabel gold, ClassLabel pred) { return counts[class_index(gold)][class_index(pred)]; }
  std::int64_t at(ClassLabel gold, ClassLabel pred) const { return counts[class_index(gold)][class_index(pred)]; }
  std::int64_t total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::array<Prf, kNumClasses> per_class;
  Prf micro;  // pooled over classes 1 and 2
};

ConfusionMatrix confusion(std::span<const ClassLabel> gold, std::span<const ClassLabel> pred);

// Harmonic mean with the 0/0 -> 0 convention.
double f1_score(double precision, double recall);

std::array<Prf, kNumClasses> per_class_prf(const ConfusionMatrix& cm);

// Micro average over classes 1 and 2. Class-3 examples predicted as 1 or 2
// count as false positives; class-3 hits are invisible.
Prf micro_prf_12(const ConfusionMatrix& cm);

MetricsReport evaluate(const ConfusionMatrix& cm);

// Flat JSON object, keys precision_1..3, recall_1..3, f1_1..3,
// precision_m, recall_m, f1_m; 6 decimal places.
std::string metrics_json(const MetricsReport& report);

}  // namespace scnn

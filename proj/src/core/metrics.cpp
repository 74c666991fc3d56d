#include "metrics.hpp"

#include "errors.hpp"
#include "fileio.hpp"

namespace scnn {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

ConfusionMatrix confusion(std::span<const ClassLabel> gold, std::span<const ClassLabel> pred) {
  if (gold.size() != pred.size()) {
    throw UsageError("confusion: " + std::to_string(gold.size()) + " gold labels vs " +
                     std::to_string(pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.at(gold[i], pred[i]);
  return cm;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

std::array<Prf, kNumClasses> per_class_prf(const ConfusionMatrix& cm) {
  std::array<Prf, kNumClasses> out;
  for (int c = 0; c < kNumClasses; ++c) {
    std::int64_t predicted = 0;
    std::int64_t actual = 0;
    for (int k = 0; k < kNumClasses; ++k) {
      predicted += cm.counts[k][c];
      actual += cm.counts[c][k];
    }
    const auto tp = cm.counts[c][c];
    out[c].precision = ratio(tp, predicted);
    out[c].recall = ratio(tp, actual);
    out[c].f1 = f1_score(out[c].precision, out[c].recall);
  }
  return out;
}

Prf micro_prf_12(const ConfusionMatrix& cm) {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  for (int c = 0; c < 2; ++c) {
    tp += cm.counts[c][c];
    for (int k = 0; k < kNumClasses; ++k) {
      if (k == c) continue;
      fp += cm.counts[k][c];
      fn += cm.counts[c][k];
    }
  }
  Prf m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

MetricsReport evaluate(const ConfusionMatrix& cm) { return {per_class_prf(cm), micro_prf_12(cm)}; }

std::string metrics_json(const MetricsReport& r) {
  std::string out = "{\n";
  auto field = [&out](const std::string& key, double v, bool last = false) {
    out += "  \"" + key + "\": " + format_fixed(v, 6) + (last ? "\n" : ",\n");
  };
  for (int c = 0; c < kNumClasses; ++c) field("precision_" + std::to_string(c + 1), r.per_class[c].precision);
  for (int c = 0; c < kNumClasses; ++c) field("recall_" + std::to_string(c + 1), r.per_class[c].recall);
  for (int c = 0; c < kNumClasses; ++c) field("f1_" + std::to_string(c + 1), r.per_class[c].f1);
  field("precision_m", r.micro.precision);
  field("recall_m", r.micro.recall);
  field("f1_m", r.micro.f1, true);
  return out + "}\n";
}

}  // namespace scnn

#pragma once

#include <vector>

#include "corpus.hpp"
#include "embeddings.hpp"
#include "model.hpp"
#include "synth.hpp"

namespace scnn::testing {

// Small hyperparameters that train quickly; outside the published ranges.
inline HyperParams toy_hp() {
  HyperParams hp;
  hp.n_filters = 8;
  hp.n_dense_output = 16;
  hp.keep_prob = 1.0;
  hp.batch_size = 10;
  hp.learning_rate = 0.01;
  hp.filter_sizes = {1, 1, 2, 2, 3};
  return hp;
}

struct ToyData {
  SynthCorpus corpus;
  std::vector<DocMatrix> train_docs;
  std::vector<DocMatrix> test_docs;
  std::vector<ClassLabel> train_gold;
  std::vector<ClassLabel> test_gold;
};

inline ToyData toy_data(std::size_t n_train, std::size_t n_test, std::uint64_t seed, std::size_t dim = 8) {
  ToyData d;
  d.corpus = make_synth_corpus({seed, n_train, n_test, dim});
  d.train_docs = embed_examples(d.corpus.godin, d.corpus.train);
  d.test_docs = embed_examples(d.corpus.godin, d.corpus.test);
  d.train_gold = gold_labels(d.corpus.train);
  d.test_gold = gold_labels(d.corpus.test);
  return d;
}

inline std::vector<LabeledDoc> labeled(const std::vector<DocMatrix>& docs, const std::vector<ClassLabel>& gold) {
  std::vector<LabeledDoc> out;
  for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({&docs[i], gold[i]});
  return out;
}

inline double accuracy(const ProbMatrix& probs, const std::vector<ClassLabel>& gold) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) hits += argmax_label(probs[i]) == gold[i];
  return probs.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(probs.size());
}

}  // namespace scnn::testing

#include <memory>

#include "ensemble.hpp"
#include "rng.hpp"

namespace scnn::testing {

// Untrained fold ensemble with `k` randomly initialised members.
inline std::shared_ptr<FoldEnsemble> random_fold_ensemble(int trial_id, double cv_score, std::uint64_t seed,
                                                          std::size_t dim, int k = 5) {
  auto fe = std::make_shared<FoldEnsemble>();
  fe->trial_id = trial_id;
  fe->cv_score = cv_score;
  fe->hp = toy_hp();
  fe->hp.n_filters = 3;
  fe->hp.n_dense_output = 5;
  for (int f = 0; f < k; ++f) {
    TrainedModel tm;
    tm.weights = build_model(fe->hp, dim, derive_seed(seed, static_cast<std::uint64_t>(f)), true);
    // Non-zero biases so members disagree on padding-only inputs too.
    Rng rng(derive_seed(seed, "bias:" + std::to_string(f)));
    for (auto& b : tm.weights.params.out_b.data) b = static_cast<float>(rng.uniform(-1, 1));
    fe->members.push_back(std::move(tm));
  }
  return fe;
}

inline std::vector<DocMatrix> random_docs(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<DocMatrix> docs(n);
  for (auto& d : docs) {
    d.rows = kDocLength;
    d.dim = dim;
    d.values.assign(kDocLength * dim, 0.0f);
    d.real_length = 1 + rng.below(kDocLength);
    for (std::size_t i = 0; i < d.real_length * dim; ++i) d.values[i] = static_cast<float>(rng.uniform(-1, 1));
  }
  return docs;
}

}  // namespace scnn::testing

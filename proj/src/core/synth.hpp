#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "corpus.hpp"
#include "embeddings.hpp"

namespace scnn {

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t n_train = 600;
  std::size_t n_test = 300;
  std::size_t dim = 16;
};

// Keyword-separable three-class corpus: every text carries exactly one
// keyword of its class among shared filler and drug words, so one filter
// of width 1 suffices to separate the classes. Class proportions follow the
// task's train and test distributions. A fraction of fillers is left out
// of the embedding tables to exercise the out-of-vocabulary path.
struct SynthCorpus {
  std::vector<Example> train;
  std::vector<Example> test;
  EmbeddingTable godin;
  EmbeddingTable shin;
};

SynthCorpus make_synth_corpus(const SynthOptions& options);

// Writes train.tsv, test.tsv, test_unlabeled.tsv, godin.txt and shin.txt.
void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

// Per-class counts for n examples split in proportion to `weights`.
std::array<std::size_t, kNumClasses> proportional_counts(std::size_t n, const std::array<double, kNumClasses>& weights);

}  // namespace scnn

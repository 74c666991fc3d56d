#include "synth.hpp"

#include <array>
#include <cmath>
#include <string>

#include "errors.hpp"
#include "fileio.hpp"
#include "rng.hpp"

namespace scnn {

namespace {

const std::array<std::vector<std::string>, kNumClasses> kKeywords = {{
    {"took", "swallowed", "popped", "downed"},
    {"maybe", "might", "should", "considering"},
    {"ad", "recall", "article", "lawsuit"},
}};

const std::vector<std::string> kDrugs = {"advil", "tylenol", "xanax", "adderall", "ibuprofen", "aspirin"};

constexpr std::size_t kFillers = 120;
constexpr std::size_t kOovFillers = 24;  // the last fillers have no vector

std::string filler(std::size_t i) {
  std::string s = std::to_string(i);
  return "w" + std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
}

std::vector<Example> make_split(Rng& rng, std::size_t n, const std::array<double, kNumClasses>& weights,
                                const std::string& prefix) {
  const auto counts = proportional_counts(n, weights);
  std::vector<ClassLabel> labels;
  for (int c = 0; c < kNumClasses; ++c) labels.insert(labels.end(), counts[c], label_from_index(c));
  rng.shuffle(std::span(labels));

  std::vector<Example> out;
  const auto width = std::to_string(n).size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = labels[i];
    const std::size_t length = 6 + rng.below(9);
    std::vector<std::string> words;
    for (std::size_t w = 0; w < length; ++w) words.push_back(filler(rng.below(kFillers)));
    words[rng.below(length)] = kDrugs[rng.below(kDrugs.size())];
    const auto& kws = kKeywords[class_index(label)];
    words[rng.below(length)] = kws[rng.below(kws.size())];

    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) text += ' ';
      text += words[w];
    }
    // Surface variation the tokenizer undoes.
    if (rng.below(3) == 0) text[0] = static_cast<char>(text[0] - 'a' + 'A');
    if (rng.below(4) == 0) text += "!";

    auto id = std::to_string(i);
    id = prefix + std::string(width - id.size(), '0') + id;
    out.push_back({std::move(id), label, std::move(text)});
  }
  return out;
}

EmbeddingTable make_table(const std::string& name, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingTable t;
  t.name = name;
  t.dim = dim;
  std::vector<float> v(dim);
  auto add = [&](const std::string& word, const std::vector<double>* center, double spread) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = (center ? (*center)[d] : 0.0) + rng.uniform(-spread, spread);
      v[d] = static_cast<float>(std::round(x * 1e4) / 1e4);
    }
    t.add(word, v);
  };
  // Keywords of a class sit near a shared prototype; everything else is
  // low-norm noise.
  for (const auto& kws : kKeywords) {
    std::vector<double> center(dim);
    for (auto& x : center) x = rng.uniform(-1.0, 1.0);
    for (const auto& w : kws) add(w, &center, 0.1);
  }
  for (const auto& d : kDrugs) add(d, nullptr, 0.3);
  for (std::size_t i = 0; i < kFillers - kOovFillers; ++i) add(filler(i), nullptr, 0.3);
  add("!", nullptr, 0.3);
  return t;
}

}  // namespace

std::array<std::size_t, kNumClasses> proportional_counts(std::size_t n, const std::array<double, kNumClasses>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t assigned = 0;
  for (int c = 0; c + 1 < kNumClasses; ++c) {
    counts[c] = static_cast<std::size_t>(std::llround(static_cast<double>(n) * weights[c] / total));
    assigned += counts[c];
  }
  counts[kNumClasses - 1] = n - std::min(n, assigned);
  return counts;
}

SynthCorpus make_synth_corpus(const SynthOptions& options) {
  if (options.dim == 0) throw UsageError("synthetic embedding dimension must be at least 1");
  if (options.n_train == 0) throw UsageError("synthetic training set must not be empty");
  SynthCorpus corpus;
  // Class proportions of the task's train and test sets.
  const std::array<double, kNumClasses> train_weights{1847, 3027, 4789};
  const std::array<double, kNumClasses> test_weights{1731, 2697, 3085};
  Rng train_rng(derive_seed(options.seed, "synth:train"));
  corpus.train = make_split(train_rng, options.n_train, train_weights, "train-");
  Rng test_rng(derive_seed(options.seed, "synth:test"));
  corpus.test = make_split(test_rng, options.n_test, test_weights, "test-");
  corpus.godin = make_table("godin", options.dim, derive_seed(options.seed, "synth:godin"));
  corpus.shin = make_table("shin", options.dim, derive_seed(options.seed, "synth:shin"));
  return corpus;
}

void write_synth_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_dataset(corpus.train, dir / "train.tsv");
  write_dataset(corpus.test, dir / "test.tsv");
  auto unlabeled = corpus.test;
  for (auto& ex : unlabeled) ex.label.reset();
  write_dataset(unlabeled, dir / "test_unlabeled.tsv");
  save_embeddings(corpus.godin, dir / "godin.txt");
  save_embeddings(corpus.shin, dir / "shin.txt");
}

}  // namespace scnn

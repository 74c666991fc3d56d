#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"

namespace scnn {

// Frozen pretrained word vectors, row-major |vocab| x dim.
struct EmbeddingTable {
  std::string name;
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::unordered_map<std::string, std::size_t> vocab;
  std::vector<float> vectors;

  std::size_t size() const { return words.size(); }
  // Row for `word`, or nullptr when out of vocabulary.
  const float* find(const std::string& word) const;
  void add(std::string word, std::span<const float> vector);
};

// Fixed-shape document: `rows` x dim, zero rows for PAD and OOV positions.
struct DocMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;
  std::size_t real_length = 0;

  const float* row(std::size_t i) const { return values.data() + i * dim; }
};

// word2vec text format: `<vocab_size> <dim>` header, then `word v1 .. v_dim`.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const std::string& name);
EmbeddingTable parse_embeddings(std::string_view content, const std::string& name);
std::string format_embeddings(const EmbeddingTable& table);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

DocMatrix lookup_doc(const EmbeddingTable& table, const TokenSeq& seq);

// Tokenize, pad and embed every example text.
std::vector<DocMatrix> embed_examples(const EmbeddingTable& table, std::span<const Example> examples,
                                      std::size_t length = kDocLength);

// Named tables, as selected by the `word_embedding` hyperparameter.
class EmbeddingRegistry {
 public:
  void add(std::shared_ptr<const EmbeddingTable> table);
  void load(const std::string& name, const std::filesystem::path& path);
  const EmbeddingTable& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tables_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const EmbeddingTable>> tables_;
};

// Embedded documents of one dataset under every registered table.
using DocSets = std::map<std::string, std::vector<DocMatrix>>;
DocSets embed_all(const EmbeddingRegistry& registry, std::span<const Example> examples,
                  std::size_t length = kDocLength);

}  // namespace scnn

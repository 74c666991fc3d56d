#include "embeddings.hpp"

#include <algorithm>

#include "errors.hpp"
#include "fileio.hpp"

namespace scnn {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
    const auto begin = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > begin) out.push_back(line.substr(begin, i - begin));
  }
  return out;
}

}  // namespace

const float* EmbeddingTable::find(const std::string& word) const {
  const auto it = vocab.find(word);
  return it == vocab.end() ? nullptr : vectors.data() + it->second * dim;
}

void EmbeddingTable::add(std::string word, std::span<const float> vector) {
  if (vector.size() != dim) throw DataError("embedding for '" + word + "' has wrong dimension");
  if (vocab.count(word)) throw DataError("duplicate word '" + word + "'");
  vocab.emplace(word, words.size());
  words.push_back(std::move(word));
  vectors.insert(vectors.end(), vector.begin(), vector.end());
}

EmbeddingTable parse_embeddings(std::string_view content, const std::string& name) {
  EmbeddingTable table;
  table.name = name;
  std::size_t line_no = 0;
  std::size_t start = 0;
  std::size_t expected_words = 0;
  bool have_header = false;
  std::vector<float> row;

  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto parts = split_spaces(line);
    if (parts.empty()) continue;
    const auto at = " at line " + std::to_string(line_no);

    if (!have_header) {
      if (parts.size() != 2) throw DataError("expected header '<vocab_size> <dim>'" + at);
      const auto count = parse_int(parts[0], "vocabulary size");
      const auto dim = parse_int(parts[1], "dimension");
      if (count < 0 || dim < 1) throw DataError("invalid header" + at);
      expected_words = static_cast<std::size_t>(count);
      table.dim = static_cast<std::size_t>(dim);
      table.vectors.reserve(expected_words * table.dim);
      have_header = true;
      continue;
    }

    if (table.size() == expected_words)
      throw DataError("more words than the header's " + std::to_string(expected_words) + at);
    if (parts.size() != table.dim + 1)
      throw DataError("expected " + std::to_string(table.dim) + " components" + at);
    row.clear();
    for (std::size_t d = 1; d < parts.size(); ++d) {
      try {
        row.push_back(parse_float(parts[d], "component"));
      } catch (const DataError& e) {
        throw DataError(e.what() + at);
      }
    }
    std::string word(parts[0]);
    if (table.vocab.count(word)) throw DataError("duplicate word '" + word + "'" + at);
    table.add(std::move(word), row);
  }
  if (!have_header) throw DataError("empty embedding file");
  if (table.size() != expected_words) {
    throw DataError("header declares " + std::to_string(expected_words) + " words but file has " +
                    std::to_string(table.size()));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const std::string& name) {
  try {
    return parse_embeddings(read_file(path), name);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_embeddings(const EmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dim) + "\n";
  for (std::size_t w = 0; w < table.size(); ++w) {
    out += table.words[w];
    for (std::size_t d = 0; d < table.dim; ++d) {
      out += ' ';
      out += format_exact(table.vectors[w * table.dim + d]);
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  write_file(path, format_embeddings(table));
}

DocMatrix lookup_doc(const EmbeddingTable& table, const TokenSeq& seq) {
  DocMatrix doc;
  doc.rows = seq.tokens.size();
  doc.dim = table.dim;
  doc.real_length = seq.real_length;
  doc.values.assign(doc.rows * doc.dim, 0.0f);
  for (std::size_t i = 0; i < seq.real_length && i < doc.rows; ++i) {
    if (seq.tokens[i] == kPadToken) continue;
    if (const float* v = table.find(seq.tokens[i]))
      std::copy(v, v + table.dim, doc.values.begin() + static_cast<std::ptrdiff_t>(i * doc.dim));
  }
  return doc;
}

std::vector<DocMatrix> embed_examples(const EmbeddingTable& table, std::span<const Example> examples,
                                      std::size_t length) {
  std::vector<DocMatrix> docs;
  docs.reserve(examples.size());
  for (const auto& ex : examples) {
    const auto tokens = tokenize(ex.text);
    docs.push_back(lookup_doc(table, pad_or_truncate(tokens, length)));
  }
  return docs;
}

void EmbeddingRegistry::add(std::shared_ptr<const EmbeddingTable> table) {
  if (!table) throw UsageError("null embedding table");
  const auto name = table->name;
  if (name.empty()) throw UsageError("embedding table needs a name");
  if (!tables_.emplace(name, std::move(table)).second)
    throw UsageError("embedding '" + name + "' registered twice");
}

void EmbeddingRegistry::load(const std::string& name, const std::filesystem::path& path) {
  add(std::make_shared<const EmbeddingTable>(load_embeddings(path, name)));
}

const EmbeddingTable& EmbeddingRegistry::get(const std::string& name) const {
  const auto it = tables_.find(name);
  if (it == tables_.end()) throw UsageError("no embedding registered under '" + name + "'");
  return *it->second;
}

std::vector<std::string> EmbeddingRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

DocSets embed_all(const EmbeddingRegistry& registry, std::span<const Example> examples, std::size_t length) {
  DocSets sets;
  for (const auto& name : registry.names()) sets.emplace(name, embed_examples(registry.get(name), examples, length));
  return sets;
}

}  // namespace scnn

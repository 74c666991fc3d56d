#include "corpus.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "errors.hpp"
#include "fileio.hpp"
#include "rng.hpp"

namespace scnn {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) ||
         (u >= 123 && u <= 126);
}

bool kept_whole(std::string_view token) {
  return token.starts_with('@') || token.starts_with('#') || token.starts_with("http://") ||
         token.starts_with("https://") || token.starts_with("www.");
}

}  // namespace

std::optional<ClassLabel> parse_label(std::string_view s) {
  if (s == "1") return ClassLabel::personal_intake;
  if (s == "2") return ClassLabel::possible_intake;
  if (s == "3") return ClassLabel::no_intake;
  return std::nullopt;
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

std::vector<Example> parse_dataset_text(std::string_view content, bool labeled) {
  std::vector<Example> out;
  std::unordered_set<std::string> ids;
  const std::size_t want = labeled ? 3 : 2;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() != want) {
      throw DataError("expected " + std::to_string(want) + " tab-separated fields at line " +
                      std::to_string(line_no) + ", found " + std::to_string(fields.size()));
    }
    Example ex;
    ex.id = std::string(fields[0]);
    if (ex.id.empty()) throw DataError("empty id at line " + std::to_string(line_no));
    if (labeled) {
      const auto& raw = fields[1];
      const bool numeric = !raw.empty() && raw.find_first_not_of("0123456789") == std::string_view::npos;
      ex.label = parse_label(raw);
      if (!ex.label) {
        throw DataError(std::string(numeric ? "label out of range" : "invalid label '" + std::string(raw) + "'") +
                        " at line " + std::to_string(line_no));
      }
      ex.text = std::string(fields[2]);
    } else {
      ex.text = std::string(fields[1]);
    }
    if (!ids.insert(ex.id).second)
      throw DataError("duplicate id '" + ex.id + "' at line " + std::to_string(line_no));
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> parse_dataset(const std::filesystem::path& path, bool labeled) {
  return parse_dataset_text(read_file(path), labeled);
}

std::vector<Example> parse_dataset_auto(const std::filesystem::path& path) {
  const auto content = read_file(path);
  std::string_view view(content);
  std::size_t start = 0;
  while (start < view.size()) {
    auto end = view.find('\n', start);
    if (end == std::string_view::npos) end = view.size();
    const auto line = view.substr(start, end - start);
    if (!line.empty()) {
      const auto fields = split_tabs(line).size();
      return parse_dataset_text(view, fields == 3);
    }
    start = end + 1;
  }
  return {};
}

std::string format_dataset(std::span<const Example> examples) {
  std::string out;
  if (examples.empty()) return out;
  const bool labeled = examples.front().label.has_value();
  for (const auto& ex : examples) {
    if (ex.label.has_value() != labeled)
      throw UsageError("cannot mix labeled and unlabeled examples in one file (id '" + ex.id + "')");
    if (ex.id.empty()) throw UsageError("example with empty id");
    for (const auto* field : {&ex.id, &ex.text}) {
      if (field->find_first_of("\t\n") != std::string::npos)
        throw UsageError("example '" + ex.id + "' contains a TAB or newline");
    }
    out += ex.id;
    out += '\t';
    if (labeled) {
      out += std::to_string(static_cast<int>(*ex.label));
      out += '\t';
    }
    out += ex.text;
    out += '\n';
  }
  return out;
}

void write_dataset(std::span<const Example> examples, const std::filesystem::path& path) {
  write_file(path, format_dataset(examples));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    if (begin == i) break;

    std::string chunk(text.substr(begin, i - begin));
    for (auto& c : chunk)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');

    if (kept_whole(chunk)) {
      tokens.push_back(std::move(chunk));
      continue;
    }
    std::size_t lo = 0;
    std::size_t hi = chunk.size();
    while (lo < hi && is_ascii_punct(chunk[lo])) ++lo;
    while (hi > lo && is_ascii_punct(chunk[hi - 1])) --hi;
    for (std::size_t p = 0; p < lo; ++p) tokens.emplace_back(1, chunk[p]);
    if (hi > lo) tokens.push_back(chunk.substr(lo, hi - lo));
    for (std::size_t p = hi; p < chunk.size(); ++p) tokens.emplace_back(1, chunk[p]);
  }
  return tokens;
}

TokenSeq pad_or_truncate(std::span<const std::string> tokens, std::size_t length) {
  if (length == 0) throw UsageError("sequence length must be at least 1");
  TokenSeq seq;
  seq.real_length = std::min(tokens.size(), length);
  for (std::size_t i = 0; i < seq.real_length; ++i) {
    // An already padded sequence keeps its original real length.
    if (tokens[i] == kPadToken) {
      seq.real_length = i;
      break;
    }
  }
  seq.tokens.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(seq.real_length));
  seq.tokens.resize(length, std::string(kPadToken));
  return seq;
}

FoldAssignment stratified_kfold(std::span<const Example> examples, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("fold count must be at least 2, got " + std::to_string(k));
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].label) throw UsageError("cannot fold unlabeled example '" + examples[i].id + "'");
    by_class[class_index(*examples[i].label)].push_back(i);
  }
  for (int c = 0; c < kNumClasses; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw DataError("class " + std::to_string(c + 1) + " has " + std::to_string(by_class[c].size()) +
                      " examples, fewer than the " + std::to_string(k) + " folds");
    }
  }

  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  folds.fold_of.assign(examples.size(), -1);
  // The deal continues across classes so overall fold sizes stay balanced too.
  std::size_t dealt = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& members = by_class[c];
    Rng rng(derive_seed(seed, "class:" + std::to_string(c + 1)));
    rng.shuffle(std::span(members));
    for (auto idx : members) folds.fold_of[idx] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return folds;
}

std::vector<ClassLabel> gold_labels(std::span<const Example> examples) {
  std::vector<ClassLabel> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (!ex.label) throw UsageError("example '" + ex.id + "' has no label");
    out.push_back(*ex.label);
  }
  return out;
}

}  // namespace scnn

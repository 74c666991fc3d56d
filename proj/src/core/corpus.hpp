#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scnn {

// Gold classes of the intake task.
enum class ClassLabel : int { personal_intake = 1, possible_intake = 2, no_intake = 3 };

inline constexpr int kNumClasses = 3;
inline constexpr std::size_t kDocLength = 47;

inline int class_index(ClassLabel c) { return static_cast<int>(c) - 1; }
inline ClassLabel label_from_index(int i) { return static_cast<ClassLabel>(i + 1); }
std::optional<ClassLabel> parse_label(std::string_view s);

struct Example {
  std::string id;
  std::optional<ClassLabel> label;
  std::string text;

  bool operator==(const Example&) const = default;
};

// Reserved padding token. The tokenizer lowercases and detaches '<' and '>',
// so it can never produce this string.
inline constexpr std::string_view kPadToken = "<PAD>";

struct TokenSeq {
  std::vector<std::string> tokens;
  std::size_t real_length = 0;

  bool operator==(const TokenSeq&) const = default;
};

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 5;
  std::uint64_t seed = 0;

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

// Reads a dataset TSV. Labeled lines are `id<TAB>label<TAB>text`, unlabeled
// lines `id<TAB>text`. Empty lines are skipped; line numbers in errors are
// physical (1-based).
std::vector<Example> parse_dataset(const std::filesystem::path& path, bool labeled);
std::vector<Example> parse_dataset_text(std::string_view content, bool labeled);

// Detects the layout from the first non-empty line: three fields means
// labeled, two means unlabeled.
std::vector<Example> parse_dataset_auto(const std::filesystem::path& path);

// Inverse of parse_dataset. Examples without a label are written in the
// unlabeled layout; mixing both layouts in one file is rejected.
void write_dataset(std::span<const Example> examples, const std::filesystem::path& path);
std::string format_dataset(std::span<const Example> examples);

std::vector<std::string> tokenize(std::string_view text);

TokenSeq pad_or_truncate(std::span<const std::string> tokens, std::size_t length = kDocLength);

FoldAssignment stratified_kfold(std::span<const Example> examples, int k, std::uint64_t seed);

std::vector<ClassLabel> gold_labels(std::span<const Example> examples);

}  // namespace scnn

#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace scnn {

// One point of the random-search space. Field names match the config keys.
struct HyperParams {
  double adam_b2 = 0.999;
  int n_dense_output = 100;
  double keep_prob = 0.5;
  int batch_size = 50;
  double learning_rate = 0.001;
  std::string word_embedding = "godin";
  int n_filters = 100;
  std::array<int, 5> filter_sizes{1, 2, 3, 4, 5};

  bool operator==(const HyperParams&) const = default;
};

inline constexpr std::array<const char*, 8> kHyperParamKeys = {
    "adam_b2",       "n_dense_output", "keep_prob", "batch_size",
    "learning_rate", "word_embedding", "n_filters", "filter_sizes"};

// Names of fields outside their allowed domain. In restricted mode the
// domains are the paper search space; unrestricted mode only requires values
// that define a valid network.
std::vector<std::string> invalid_fields(const HyperParams& hp, bool unrestricted);
// Throws UsageError listing every offending field.
void validate(const HyperParams& hp, bool unrestricted);

nlohmann::json to_json(const HyperParams& hp);
// Keys must be exactly the eight field names.
HyperParams hyperparams_from_json(const nlohmann::json& j);

std::string filter_sizes_string(const std::array<int, 5>& sizes);
std::array<int, 5> parse_filter_sizes(const std::string& text);

}  // namespace scnn

#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperparams.hpp"
#include "rng.hpp"

namespace scnn {

// Finite per-field domains of the random search.
struct SearchSpace {
  std::vector<double> adam_b2;
  std::vector<int> n_dense_output;
  std::vector<double> keep_prob;
  std::vector<int> batch_size;
  std::vector<double> learning_rate;
  std::vector<std::string> word_embedding;
  std::vector<int> n_filters;
  std::vector<std::array<int, 5>> filter_sizes;

  // The published ranges: 2*4*6*3*2*2*4*7 = 16,128 configurations.
  static const SearchSpace& paper();
  static SearchSpace from_json(const nlohmann::json& j);

  nlohmann::json to_json() const;
  std::array<std::size_t, 8> domain_sizes() const;
  std::uint64_t size() const;
  // sha256 of the canonical JSON form.
  std::string descriptor() const;

  using Key = std::array<std::uint16_t, 8>;
  HyperParams at(const Key& key) const;

  bool operator==(const SearchSpace&) const = default;
};

// Draws every field independently and uniformly. With `seen` non-null, draws
// are repeated until the configuration is new, and the result is inserted.
HyperParams sample_config(const SearchSpace& space, Rng& rng, std::set<SearchSpace::Key>* seen);

}  // namespace scnn

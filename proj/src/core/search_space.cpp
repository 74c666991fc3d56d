#include "search_space.hpp"

#include <algorithm>

#include "errors.hpp"
#include "fileio.hpp"

namespace scnn {

const SearchSpace& SearchSpace::paper() {
  static const SearchSpace space{
      {0.9, 0.999},
      {100, 200, 300, 400},
      {0.4, 0.5, 0.6, 0.7, 0.8, 0.9},
      {50, 100, 150},
      {0.0001, 0.001},
      {"godin", "shin"},
      {100, 200, 300, 400},
      {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}, {3, 4, 5, 6, 7}, {1, 2, 2, 2, 3}, {2, 3, 3, 3, 4}, {3, 4, 4, 4, 5},
       {4, 5, 5, 5, 6}}};
  return space;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("search space must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kHyperParamKeys.begin(), kHyperParamKeys.end(), key) == kHyperParamKeys.end())
      throw UsageError("unknown search space field '" + key + "'");
  }
  SearchSpace s;
  try {
    s.adam_b2 = j.at("adam_b2").get<std::vector<double>>();
    s.n_dense_output = j.at("n_dense_output").get<std::vector<int>>();
    s.keep_prob = j.at("keep_prob").get<std::vector<double>>();
    s.batch_size = j.at("batch_size").get<std::vector<int>>();
    s.learning_rate = j.at("learning_rate").get<std::vector<double>>();
    s.word_embedding = j.at("word_embedding").get<std::vector<std::string>>();
    s.n_filters = j.at("n_filters").get<std::vector<int>>();
    s.filter_sizes = j.at("filter_sizes").get<std::vector<std::array<int, 5>>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad search space: ") + e.what());
  }
  for (auto n : s.domain_sizes())
    if (n == 0 || n > 65535) throw UsageError("every search space field needs 1..65535 values");
  return s;
}

nlohmann::json SearchSpace::to_json() const {
  return nlohmann::json{{"adam_b2", adam_b2},       {"n_dense_output", n_dense_output},
                        {"keep_prob", keep_prob},   {"batch_size", batch_size},
                        {"learning_rate", learning_rate}, {"word_embedding", word_embedding},
                        {"n_filters", n_filters},   {"filter_sizes", filter_sizes}};
}

std::array<std::size_t, 8> SearchSpace::domain_sizes() const {
  return {adam_b2.size(),       n_dense_output.size(), keep_prob.size(), batch_size.size(),
          learning_rate.size(), word_embedding.size(), n_filters.size(), filter_sizes.size()};
}

std::uint64_t SearchSpace::size() const {
  std::uint64_t n = 1;
  for (auto d : domain_sizes()) n *= d;
  return n;
}

std::string SearchSpace::descriptor() const { return sha256_hex(to_json().dump()); }

HyperParams SearchSpace::at(const Key& key) const {
  HyperParams hp;
  hp.adam_b2 = adam_b2.at(key[0]);
  hp.n_dense_output = n_dense_output.at(key[1]);
  hp.keep_prob = keep_prob.at(key[2]);
  hp.batch_size = batch_size.at(key[3]);
  hp.learning_rate = learning_rate.at(key[4]);
  hp.word_embedding = word_embedding.at(key[5]);
  hp.n_filters = n_filters.at(key[6]);
  hp.filter_sizes = filter_sizes.at(key[7]);
  return hp;
}

HyperParams sample_config(const SearchSpace& space, Rng& rng, std::set<SearchSpace::Key>* seen) {
  if (seen != nullptr && seen->size() >= space.size())
    throw UsageError("search space exhausted: all " + std::to_string(space.size()) + " configurations already used");
  const auto sizes = space.domain_sizes();
  for (;;) {
    SearchSpace::Key key{};
    for (std::size_t f = 0; f < sizes.size(); ++f) key[f] = static_cast<std::uint16_t>(rng.below(sizes[f]));
    if (seen == nullptr) return space.at(key);
    if (seen->insert(key).second) return space.at(key);
  }
}

}  // namespace scnn

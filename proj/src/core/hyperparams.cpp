#include "hyperparams.hpp"

#include <algorithm>
#include <set>

#include "errors.hpp"
#include "fileio.hpp"
#include "search_space.hpp"

namespace scnn {

namespace {

template <typename T>
bool member(const std::vector<T>& domain, const T& v) {
  return std::find(domain.begin(), domain.end(), v) != domain.end();
}

}  // namespace

std::vector<std::string> invalid_fields(const HyperParams& hp, bool unrestricted) {
  std::vector<std::string> bad;
  if (unrestricted) {
    if (!(hp.adam_b2 > 0.0 && hp.adam_b2 < 1.0)) bad.emplace_back("adam_b2");
    if (hp.n_dense_output < 1) bad.emplace_back("n_dense_output");
    if (!(hp.keep_prob > 0.0 && hp.keep_prob <= 1.0)) bad.emplace_back("keep_prob");
    if (hp.batch_size < 1) bad.emplace_back("batch_size");
    if (!(hp.learning_rate > 0.0)) bad.emplace_back("learning_rate");
    if (hp.word_embedding.empty()) bad.emplace_back("word_embedding");
    if (hp.n_filters < 1) bad.emplace_back("n_filters");
    if (std::any_of(hp.filter_sizes.begin(), hp.filter_sizes.end(), [](int h) { return h < 1; }))
      bad.emplace_back("filter_sizes");
    return bad;
  }
  const auto& s = SearchSpace::paper();
  if (!member(s.adam_b2, hp.adam_b2)) bad.emplace_back("adam_b2");
  if (!member(s.n_dense_output, hp.n_dense_output)) bad.emplace_back("n_dense_output");
  if (!member(s.keep_prob, hp.keep_prob)) bad.emplace_back("keep_prob");
  if (!member(s.batch_size, hp.batch_size)) bad.emplace_back("batch_size");
  if (!member(s.learning_rate, hp.learning_rate)) bad.emplace_back("learning_rate");
  if (!member(s.word_embedding, hp.word_embedding)) bad.emplace_back("word_embedding");
  if (!member(s.n_filters, hp.n_filters)) bad.emplace_back("n_filters");
  if (!member(s.filter_sizes, hp.filter_sizes)) bad.emplace_back("filter_sizes");
  return bad;
}

void validate(const HyperParams& hp, bool unrestricted) {
  const auto bad = invalid_fields(hp, unrestricted);
  if (bad.empty()) return;
  std::string msg = "hyperparameters out of domain:";
  for (const auto& f : bad) msg += " " + f;
  if (!unrestricted) msg += " (use --unrestricted-space for values outside the search space)";
  throw UsageError(msg);
}

nlohmann::json to_json(const HyperParams& hp) {
  return nlohmann::json{{"adam_b2", hp.adam_b2},
                        {"n_dense_output", hp.n_dense_output},
                        {"keep_prob", hp.keep_prob},
                        {"batch_size", hp.batch_size},
                        {"learning_rate", hp.learning_rate},
                        {"word_embedding", hp.word_embedding},
                        {"n_filters", hp.n_filters},
                        {"filter_sizes", hp.filter_sizes}};
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("hyperparameter config must be a JSON object");
  const std::set<std::string> expected(kHyperParamKeys.begin(), kHyperParamKeys.end());
  std::set<std::string> present;
  for (const auto& [key, _] : j.items()) {
    if (!expected.count(key)) throw UsageError("unknown hyperparameter '" + key + "'");
    present.insert(key);
  }
  for (const auto& key : expected)
    if (!present.count(key)) throw UsageError("missing hyperparameter '" + key + "'");
  try {
    HyperParams hp;
    hp.adam_b2 = j.at("adam_b2").get<double>();
    hp.n_dense_output = j.at("n_dense_output").get<int>();
    hp.keep_prob = j.at("keep_prob").get<double>();
    hp.batch_size = j.at("batch_size").get<int>();
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.word_embedding = j.at("word_embedding").get<std::string>();
    hp.n_filters = j.at("n_filters").get<int>();
    const auto sizes = j.at("filter_sizes").get<std::vector<int>>();
    if (sizes.size() != 5) throw UsageError("filter_sizes must list exactly 5 widths");
    std::copy(sizes.begin(), sizes.end(), hp.filter_sizes.begin());
    return hp;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad hyperparameter value: ") + e.what());
  }
}

std::string filter_sizes_string(const std::array<int, 5>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(sizes[i]);
  }
  return out;
}

std::array<int, 5> parse_filter_sizes(const std::string& text) {
  std::array<int, 5> out{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto end = text.find('-', pos);
    if ((end == std::string::npos) != (i == 4)) throw DataError("bad filter_sizes '" + text + "'");
    out[i] = static_cast<int>(parse_int(text.substr(pos, end - pos), "filter size"));
    pos = end + 1;
  }
  return out;
}

}  // namespace scnn

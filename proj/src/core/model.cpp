#include "model.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "errors.hpp"
#include "fileio.hpp"
#include "metrics.hpp"

namespace scnn {

ClassLabel argmax_label(const ProbRow& probs) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (probs[c] > probs[best]) best = c;
  return label_from_index(best);
}

std::vector<ClassLabel> argmax_labels(const ProbMatrix& probs) {
  std::vector<ClassLabel> out;
  out.reserve(probs.size());
  for (const auto& row : probs) out.push_back(argmax_label(row));
  return out;
}

std::size_t expected_parameter_count(const HyperParams& hp, std::size_t dim) {
  const auto nf = static_cast<std::size_t>(hp.n_filters);
  const auto nd = static_cast<std::size_t>(hp.n_dense_output);
  std::size_t n = 0;
  for (int h : hp.filter_sizes) n += static_cast<std::size_t>(h) * dim * nf + nf;
  n += kFilterGroups * nf * nd + nd;
  n += nd * kNumClasses + kNumClasses;
  return n;
}

ShallowCNN build_model(const HyperParams& hp, std::size_t embedding_dim, std::uint64_t seed, bool unrestricted,
                       std::size_t doc_length) {
  validate(hp, unrestricted);
  if (embedding_dim == 0) throw UsageError("embedding dimension must be at least 1");
  for (int h : hp.filter_sizes) {
    if (static_cast<std::size_t>(h) > doc_length)
      throw UsageError("filter width " + std::to_string(h) + " exceeds document length " + std::to_string(doc_length));
  }
  ShallowCNN m;
  m.hp = hp;
  m.embedding_dim = embedding_dim;
  m.doc_length = doc_length;
  m.init_seed = seed;
  m.params = init_params<float>(hp, embedding_dim, seed);
  return m;
}

DocView<float> view_of(const DocMatrix& doc) { return {doc.values.data(), doc.rows, doc.dim}; }

namespace {

void check_doc(const ShallowCNN& model, const DocMatrix& doc) {
  if (doc.dim != model.embedding_dim || doc.rows != model.doc_length) {
    throw UsageError("document shape " + std::to_string(doc.rows) + "x" + std::to_string(doc.dim) +
                     " does not match model input " + std::to_string(model.doc_length) + "x" +
                     std::to_string(model.embedding_dim));
  }
}

ProbRow to_row(std::span<const float> p) { return {p[0], p[1], p[2]}; }

}  // namespace

ProbRow forward_probs(const ShallowCNN& model, const DocMatrix& doc) {
  check_doc(model, doc);
  ForwardCache<float> cache;
  return to_row(forward<float>(model.params, model.hp.keep_prob, view_of(doc), false, nullptr, cache));
}

ProbMatrix predict_proba(const ShallowCNN& model, std::span<const DocMatrix* const> docs) {
  ProbMatrix out;
  out.reserve(docs.size());
  ForwardCache<float> cache;
  for (const DocMatrix* doc : docs) {
    check_doc(model, *doc);
    out.push_back(to_row(forward<float>(model.params, model.hp.keep_prob, view_of(*doc), false, nullptr, cache)));
  }
  return out;
}

ProbMatrix predict_proba(const ShallowCNN& model, std::span<const DocMatrix> docs) {
  std::vector<const DocMatrix*> ptrs;
  ptrs.reserve(docs.size());
  for (const auto& d : docs) ptrs.push_back(&d);
  return predict_proba(model, std::span<const DocMatrix* const>(ptrs));
}

double micro_f1_12(const ProbMatrix& probs, std::span<const ClassLabel> gold) {
  const auto pred = argmax_labels(probs);
  return micro_prf_12(confusion(gold, pred)).f1;
}

AnnealingSchedule::AnnealingSchedule(const TrainSchedule& schedule, double initial_lr)
    : schedule_(schedule), lr_(initial_lr), best_(-std::numeric_limits<double>::infinity()) {
  if (schedule.max_epochs < 1) throw UsageError("max_epochs must be at least 1");
  if (schedule.patience < 1) throw UsageError("patience must be at least 1");
  if (schedule.restarts_allowed < 0) throw UsageError("restarts_allowed must be non-negative");
  if (!(schedule.lr_decay > 0.0)) throw UsageError("lr_decay must be positive");
}

AnnealingSchedule::Decision AnnealingSchedule::observe(double dev_score) {
  Decision d;
  ++epoch_;
  if (dev_score > best_) {
    best_ = dev_score;
    stagnant_ = 0;
    d.improved = true;
  } else {
    ++stagnant_;
  }
  if (stagnant_ >= schedule_.patience) {
    if (restarts_ < schedule_.restarts_allowed) {
      ++restarts_;
      lr_ *= schedule_.lr_decay;
      stagnant_ = 0;
      d.action = EpochAction::restart;
    } else {
      d.action = EpochAction::stop;
    }
  }
  if (d.action != EpochAction::stop && epoch_ >= schedule_.max_epochs) d.action = EpochAction::stop;
  return d;
}

TrainedModel train(ShallowCNN model, std::span<const LabeledDoc> train_set, std::span<const LabeledDoc> dev_set,
                   const TrainSchedule& schedule, std::uint64_t seed, const DevScorer& dev_scorer) {
  if (train_set.empty()) throw UsageError("training set is empty");
  if (dev_set.empty() && !dev_scorer) throw UsageError("dev set is empty");
  for (const auto& ex : train_set) check_doc(model, *ex.doc);

  auto& params = model.params;
  auto grads = params.zeros_like();
  const auto slots = params.slots(grads);
  auto adam = make_adam_state<float>(slots, model.hp.adam_b2);
  AnnealingSchedule anneal(schedule, model.hp.learning_rate);

  std::vector<const DocMatrix*> dev_docs;
  std::vector<ClassLabel> dev_gold;
  for (const auto& ex : dev_set) {
    dev_docs.push_back(ex.doc);
    dev_gold.push_back(ex.label);
  }

  TrainedModel result;
  CnnParams<float> best = params;
  std::vector<std::size_t> order(train_set.size());
  ForwardCache<float> cache;
  const auto batch = static_cast<std::size_t>(model.hp.batch_size);

  for (;;) {
    const int epoch = anneal.epoch() + 1;
    const double lr = anneal.learning_rate();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, "shuffle:" + std::to_string(epoch)));
    shuffle_rng.shuffle(std::span(order));
    Rng dropout_rng(derive_seed(seed, "dropout:" + std::to_string(epoch)));

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      const float scale = 1.0f / static_cast<float>(count);
      grads.set_zero();
      for (std::size_t k = start; k < start + count; ++k) {
        const auto& ex = train_set[order[k]];
        const auto probs = forward<float>(params, model.hp.keep_prob, view_of(*ex.doc), true, &dropout_rng, cache);
        const double loss = cross_entropy<float>(probs, ex.label);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                             std::to_string(start) + " (learning rate " + format_exact(lr) + ")");
        }
        loss_sum += loss;
        backward<float>(params, cache, ex.label, scale, grads);
      }
      adam_step<float>(slots, adam, lr);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(train_loss))
      throw NumericError("non-finite mean training loss at epoch " + std::to_string(epoch));

    const double dev_score =
        dev_scorer ? dev_scorer(model, epoch)
                   : micro_f1_12(predict_proba(model, std::span<const DocMatrix* const>(dev_docs)), dev_gold);
    const auto decision = anneal.observe(dev_score);
    result.history.push_back({epoch, train_loss, dev_score, lr, decision.improved, decision.action});

    if (decision.improved) best = params;
    if (decision.action == EpochAction::stop) break;
    if (decision.action == EpochAction::restart) {
      params = best;
      adam.reset();
    }
  }

  model.params = std::move(best);
  result.weights = std::move(model);
  result.best_dev_score = anneal.best_score();
  result.epochs_run = anneal.epoch();
  result.restart_count = anneal.restart_count();
  return result;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

constexpr char kMagic[4] = {'S', 'C', 'N', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_le(std::string_view bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

const char* action_name(EpochAction a) {
  switch (a) {
    case EpochAction::proceed: return "proceed";
    case EpochAction::restart: return "restart";
    case EpochAction::stop: return "stop";
  }
  return "proceed";
}

EpochAction action_from(const std::string& s) {
  if (s == "proceed") return EpochAction::proceed;
  if (s == "restart") return EpochAction::restart;
  if (s == "stop") return EpochAction::stop;
  throw DataError("unknown epoch action '" + s + "' in model header");
}

}  // namespace

std::string serialize_model(const TrainedModel& tm) {
  const auto& m = tm.weights;
  nlohmann::json header;
  header["hp"] = to_json(m.hp);
  header["embedding_dim"] = m.embedding_dim;
  header["doc_length"] = m.doc_length;
  header["init_seed"] = m.init_seed;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : tm.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"dev_score", e.dev_score},
                       {"learning_rate", e.learning_rate},
                       {"improved", e.improved},
                       {"action", action_name(e.action)}});
  }
  header["training"] = {{"best_dev_score", tm.best_dev_score},
                        {"epochs_run", tm.epochs_run},
                        {"restart_count", tm.restart_count},
                        {"history", history}};
  nlohmann::json tensors = nlohmann::json::array();
  m.params.for_each([&](std::string_view name, const Tensor<float>& t) {
    tensors.push_back({{"name", std::string(name)}, {"shape", t.shape}});
  });
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_u32(out, kModelFormatVersion);
  put_u64(out, text.size());
  out += text;
  m.params.for_each([&](std::string_view, const Tensor<float>& t) {
    for (float v : t.data) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  });
  return out;
}

TrainedModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a model file");
  if (bytes.size() < 16) throw DataError("truncated model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  const auto header_len = get_le(bytes, 8, 8);
  if (header_len > bytes.size() - 16) throw DataError("truncated model file");

  TrainedModel tm;
  auto& m = tm.weights;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> declared;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
    m.hp = hyperparams_from_json(header.at("hp"));
    m.embedding_dim = header.at("embedding_dim").get<std::size_t>();
    m.doc_length = header.at("doc_length").get<std::size_t>();
    m.init_seed = header.at("init_seed").get<std::uint64_t>();
    const auto& tr = header.at("training");
    tm.best_dev_score = tr.at("best_dev_score").get<double>();
    tm.epochs_run = tr.at("epochs_run").get<int>();
    tm.restart_count = tr.at("restart_count").get<int>();
    for (const auto& e : tr.at("history")) {
      tm.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                            e.at("dev_score").get<double>(), e.at("learning_rate").get<double>(),
                            e.at("improved").get<bool>(), action_from(e.at("action").get<std::string>())});
    }
    for (const auto& t : header.at("tensors"))
      declared.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt model header: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("corrupt model header: ") + e.what());
  }

  // Rebuild the expected layout from the header and check it matches.
  m.params = init_params<float>(m.hp, m.embedding_dim, 0);
  std::size_t index = 0;
  std::size_t offset = 16 + header_len;
  m.params.for_each([&](std::string_view name, Tensor<float>& t) {
    if (index >= declared.size() || declared[index].first != name || declared[index].second != t.shape)
      throw DataError("model tensor layout does not match its hyperparameters at '" + std::string(name) + "'");
    ++index;
    if (bytes.size() - offset < 4 * t.size()) throw DataError("truncated model file");
    for (auto& v : t.data) {
      const auto bits = static_cast<std::uint32_t>(get_le(bytes, offset, 4));
      std::memcpy(&v, &bits, 4);
      offset += 4;
    }
  });
  if (index != declared.size()) throw DataError("model header declares extra tensors");
  if (offset != bytes.size()) throw DataError("trailing bytes after model tensors");
  return tm;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  try {
    return deserialize_model(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace scnn

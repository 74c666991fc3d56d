#pragma once

// The shallow CNN as a parameter set plus forward and backward passes:
//   5 filter groups (conv + ReLU + max-over-time) -> concat -> dropout
//   -> dense ReLU -> dropout -> dense (3) -> softmax.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperparams.hpp"
#include "nn.hpp"

namespace scnn {

inline constexpr std::size_t kFilterGroups = 5;

template <typename T>
struct CnnParams {
  std::array<Tensor<T>, kFilterGroups> conv_w;  // h_g x dim x n_filters
  std::array<Tensor<T>, kFilterGroups> conv_b;  // n_filters
  Tensor<T> dense_w;                            // 5*n_filters x n_dense_output
  Tensor<T> dense_b;
  Tensor<T> out_w;                              // n_dense_output x 3
  Tensor<T> out_b;

  // Visits tensors in the declared (file and optimizer) order.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t g = 0; g < kFilterGroups; ++g) {
      f(tensor_name(2 * g), conv_w[g]);
      f(tensor_name(2 * g + 1), conv_b[g]);
    }
    f(tensor_name(10), dense_w);
    f(tensor_name(11), dense_b);
    f(tensor_name(12), out_w);
    f(tensor_name(13), out_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<CnnParams*>(this)->for_each([&](std::string_view n, const Tensor<T>& t) { f(n, t); });
  }

  static std::string_view tensor_name(std::size_t i) {
    static constexpr std::array<std::string_view, 14> kNames = {
        "conv0.w", "conv0.b", "conv1.w", "conv1.b", "conv2.w", "conv2.b", "conv3.w",
        "conv3.b", "conv4.w", "conv4.b", "dense.w", "dense.b", "out.w",   "out.b"};
    return kNames[i];
  }

  CnnParams zeros_like() const {
    CnnParams z = *this;
    z.for_each([](std::string_view, Tensor<T>& t) { t.fill(T{0}); });
    return z;
  }

  void set_zero() {
    for_each([](std::string_view, Tensor<T>& t) { t.fill(T{0}); });
  }

  template <typename U>
  CnnParams<U> cast() const {
    CnnParams<U> out;
    for (std::size_t g = 0; g < kFilterGroups; ++g) {
      out.conv_w[g] = conv_w[g].template cast<U>();
      out.conv_b[g] = conv_b[g].template cast<U>();
    }
    out.dense_w = dense_w.template cast<U>();
    out.dense_b = dense_b.template cast<U>();
    out.out_w = out_w.template cast<U>();
    out.out_b = out_b.template cast<U>();
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  std::vector<ParamSlot<T>> slots(const CnnParams& grads) {
    std::vector<ParamSlot<T>> out;
    std::vector<const Tensor<T>*> g;
    grads.for_each([&](std::string_view, const Tensor<T>& t) { g.push_back(&t); });
    std::size_t k = 0;
    for_each([&](std::string_view n, Tensor<T>& t) { out.push_back({n, &t, g[k++]}); });
    return out;
  }

  bool operator==(const CnnParams&) const = default;
};

// Xavier-initialized weights, zero biases. Each tensor draws from its own
// substream of `seed`, so equal-width groups get distinct weights.
template <typename T>
CnnParams<T> init_params(const HyperParams& hp, std::size_t embedding_dim, std::uint64_t seed) {
  const auto nf = static_cast<std::size_t>(hp.n_filters);
  const auto nd = static_cast<std::size_t>(hp.n_dense_output);
  CnnParams<T> p;
  for (std::size_t g = 0; g < kFilterGroups; ++g) {
    const auto h = static_cast<std::size_t>(hp.filter_sizes[g]);
    Rng rng(derive_seed(seed, "conv" + std::to_string(g)));
    p.conv_w[g] = xavier_init<T>(h * embedding_dim, nf, {h, embedding_dim, nf}, rng);
    p.conv_b[g] = Tensor<T>({nf});
  }
  Rng dense_rng(derive_seed(seed, "dense"));
  p.dense_w = xavier_init<T>(kFilterGroups * nf, nd, {kFilterGroups * nf, nd}, dense_rng);
  p.dense_b = Tensor<T>({nd});
  Rng out_rng(derive_seed(seed, "out"));
  p.out_w = xavier_init<T>(nd, kNumClasses, {nd, static_cast<std::size_t>(kNumClasses)}, out_rng);
  p.out_b = Tensor<T>({static_cast<std::size_t>(kNumClasses)});
  return p;
}

template <typename T>
struct ForwardCache {
  bool valid = false;
  bool training = false;
  DocView<T> doc;
  std::array<ConvCache<T>, kFilterGroups> conv;
  std::vector<T> pooled;
  std::vector<T> drop1_mask;
  std::vector<T> pooled_drop;
  std::vector<T> hidden_pre;
  std::vector<T> hidden;
  std::vector<T> drop2_mask;
  std::vector<T> hidden_drop;
  std::vector<T> logits_pre;
  std::vector<T> logits;
  std::vector<T> probs;
  std::vector<T> scratch;
  // backward buffers
  std::vector<T> d_logits;
  std::vector<T> d_hidden;
  std::vector<T> d_pooled;
};

template <typename T>
std::span<const T> forward(const CnnParams<T>& p, double keep_prob, DocView<T> doc, bool training, Rng* rng,
                           ForwardCache<T>& c) {
  const std::size_t nf = p.conv_b[0].size();
  const std::size_t nd = p.dense_b.size();
  if (doc.dim != p.conv_w[0].shape[1]) {
    throw UsageError("document dimension " + std::to_string(doc.dim) + " does not match model dimension " +
                     std::to_string(p.conv_w[0].shape[1]));
  }
  c.valid = false;
  c.training = training;
  c.doc = doc;
  c.pooled.resize(kFilterGroups * nf);
  for (std::size_t g = 0; g < kFilterGroups; ++g) {
    conv_group_forward<T>(doc, p.conv_w[g], p.conv_b[g], std::span(c.pooled).subspan(g * nf, nf), c.conv[g],
                          c.scratch);
  }
  c.pooled_drop.resize(c.pooled.size());
  dropout<T>(c.pooled, keep_prob, rng, training, c.pooled_drop, c.drop1_mask);
  c.hidden_pre.resize(nd);
  c.hidden.resize(nd);
  dense_forward<T>(c.pooled_drop, p.dense_w, p.dense_b, Activation::relu, c.hidden, c.hidden_pre);
  c.hidden_drop.resize(nd);
  dropout<T>(c.hidden, keep_prob, rng, training, c.hidden_drop, c.drop2_mask);
  c.logits_pre.resize(kNumClasses);
  c.logits.resize(kNumClasses);
  dense_forward<T>(c.hidden_drop, p.out_w, p.out_b, Activation::identity, c.logits, c.logits_pre);
  c.probs.resize(kNumClasses);
  softmax<T>(c.logits, c.probs);
  c.valid = true;
  return c.probs;
}

// Adds scale * d(cross-entropy)/d(theta) for the cached example into `grads`.
template <typename T>
void backward(const CnnParams<T>& p, ForwardCache<T>& c, ClassLabel gold, T scale, CnnParams<T>& grads) {
  if (!c.valid) throw UsageError("backward called without a forward cache");
  const std::size_t nf = p.conv_b[0].size();
  c.d_logits.resize(kNumClasses);
  softmax_cross_entropy_backward<T>(c.probs, gold, scale, c.d_logits);

  c.d_hidden.resize(c.hidden_drop.size());
  dense_backward<T>(c.hidden_drop, p.out_w, c.logits_pre, Activation::identity, c.d_logits, grads.out_w,
                    grads.out_b, c.d_hidden);
  if (c.training)
    for (std::size_t j = 0; j < c.d_hidden.size(); ++j) c.d_hidden[j] *= c.drop2_mask[j];

  c.d_pooled.resize(c.pooled_drop.size());
  dense_backward<T>(c.pooled_drop, p.dense_w, c.hidden_pre, Activation::relu, c.d_hidden, grads.dense_w,
                    grads.dense_b, c.d_pooled);
  if (c.training)
    for (std::size_t j = 0; j < c.d_pooled.size(); ++j) c.d_pooled[j] *= c.drop1_mask[j];

  for (std::size_t g = 0; g < kFilterGroups; ++g) {
    conv_group_backward<T>(c.doc, c.conv[g], std::span<const T>(c.d_pooled).subspan(g * nf, nf), grads.conv_w[g],
                           grads.conv_b[g]);
  }
}

}  // namespace scnn

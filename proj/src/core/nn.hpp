#pragma once

// Forward/backward primitives of the shallow text CNN. Every reduction runs
// in a fixed sequential order so results are bit-reproducible; the scalar
// type is a template parameter so the same code runs in 32-bit for training
// and 64-bit for gradient checking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace scnn {

// Read-only view of a rows x dim document.
template <typename T>
struct DocView {
  const T* data = nullptr;
  std::size_t rows = 0;
  std::size_t dim = 0;

  const T* row(std::size_t i) const { return data + i * dim; }
};

enum class Activation { relu, identity };

// Uniform on [-b, b] with b = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> xavier_init(std::size_t fan_in, std::size_t fan_out, std::vector<std::size_t> shape, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw UsageError("xavier_init needs non-zero fan_in and fan_out");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  for (auto& x : t.data) x = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
struct ConvCache {
  std::vector<std::size_t> argmax;  // window position per filter
  std::vector<T> preact;            // pre-activation at argmax
};

// Valid 1-D convolution of one filter group (W: h x dim x f, b: f) followed by
// ReLU and max-over-time pooling. Rows that are entirely zero contribute
// nothing and are skipped; positions with no contributing rows keep the bias.
template <typename T>
void conv_group_forward(DocView<T> doc, const Tensor<T>& w, const Tensor<T>& b, std::span<T> pooled,
                        ConvCache<T>& cache, std::vector<T>& scratch) {
  if (w.shape.size() != 3 || w.shape[1] != doc.dim || b.shape.size() != 1 || b.shape[0] != w.shape[2] ||
      pooled.size() != w.shape[2]) {
    throw UsageError("conv_group_forward: shape mismatch (W " + shape_string(w.shape) + ", b " +
                     shape_string(b.shape) + ", doc dim " + std::to_string(doc.dim) + ")");
  }
  const std::size_t h = w.shape[0];
  const std::size_t dim = doc.dim;
  const std::size_t f = w.shape[2];
  if (h == 0 || h > doc.rows)
    throw UsageError("filter width " + std::to_string(h) + " exceeds document length " + std::to_string(doc.rows));
  const std::size_t positions = doc.rows - h + 1;

  scratch.resize(positions * f);
  for (std::size_t i = 0; i < positions; ++i) std::copy(b.data.begin(), b.data.end(), scratch.begin() + i * f);

  // Position i sums rows i..i+h-1 in ascending row order, so iterating rows
  // outermost preserves a fixed summation order per output.
  for (std::size_t r = 0; r < doc.rows; ++r) {
    const T* x = doc.row(r);
    if (std::all_of(x, x + dim, [](T v) { return v == T{0}; })) continue;
    const std::size_t o_lo = r >= positions ? r - positions + 1 : 0;
    const std::size_t o_hi = std::min(h - 1, r);
    for (std::size_t o = o_lo; o <= o_hi; ++o) {
      T* acc = scratch.data() + (r - o) * f;
      const T* wo = w.data.data() + o * dim * f;
      for (std::size_t d = 0; d < dim; ++d) {
        const T xv = x[d];
        if (xv == T{0}) continue;
        const T* wd = wo + d * f;
        for (std::size_t j = 0; j < f; ++j) acc[j] += xv * wd[j];
      }
    }
  }

  cache.argmax.assign(f, 0);
  cache.preact.assign(f, T{0});
  for (std::size_t j = 0; j < f; ++j) {
    std::size_t best = 0;
    T best_val = std::max(scratch[j], T{0});
    for (std::size_t i = 1; i < positions; ++i) {
      const T v = std::max(scratch[i * f + j], T{0});
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    cache.argmax[j] = best;
    cache.preact[j] = scratch[best * f + j];
    pooled[j] = best_val;
  }
}

// Accumulates gradients of one filter group given d(loss)/d(pooled).
// Gradient reaches only the argmax window of each filter, gated by ReLU.
template <typename T>
void conv_group_backward(DocView<T> doc, const ConvCache<T>& cache, std::span<const T> d_pooled, Tensor<T>& dw,
                         Tensor<T>& db) {
  const std::size_t h = dw.shape[0];
  const std::size_t dim = dw.shape[1];
  const std::size_t f = dw.shape[2];
  for (std::size_t j = 0; j < f; ++j) {
    if (!(cache.preact[j] > T{0})) continue;
    const T g = d_pooled[j];
    if (g == T{0}) continue;
    db.data[j] += g;
    const std::size_t start = cache.argmax[j];
    for (std::size_t o = 0; o < h; ++o) {
      const T* x = doc.row(start + o);
      T* dwo = dw.data.data() + o * dim * f;
      for (std::size_t d = 0; d < dim; ++d) dwo[d * f + j] += x[d] * g;
    }
  }
}

// y = act(x W + b) with W: n x m.
template <typename T>
void dense_forward(std::span<const T> x, const Tensor<T>& w, const Tensor<T>& b, Activation act, std::span<T> y,
                   std::span<T> preact) {
  if (w.shape.size() != 2 || w.shape[0] != x.size() || b.shape.size() != 1 || b.shape[0] != w.shape[1] ||
      y.size() != w.shape[1] || preact.size() != y.size()) {
    throw UsageError("dense_forward: shape mismatch (x " + std::to_string(x.size()) + ", W " +
                     shape_string(w.shape) + ", b " + shape_string(b.shape) + ")");
  }
  const std::size_t m = w.shape[1];
  std::copy(b.data.begin(), b.data.end(), preact.begin());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T xi = x[i];
    if (xi == T{0}) continue;
    const T* wi = w.data.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) preact[j] += xi * wi[j];
  }
  for (std::size_t j = 0; j < m; ++j) y[j] = act == Activation::relu ? std::max(preact[j], T{0}) : preact[j];
}

// Given d(loss)/dy, accumulates dW and db and writes d(loss)/dx when dx is
// non-empty. `dy` is consumed as scratch (gated in place).
template <typename T>
void dense_backward(std::span<const T> x, const Tensor<T>& w, std::span<const T> preact, Activation act,
                    std::span<T> dy, Tensor<T>& dw, Tensor<T>& db, std::span<T> dx) {
  const std::size_t m = w.shape[1];
  if (act == Activation::relu)
    for (std::size_t j = 0; j < m; ++j)
      if (!(preact[j] > T{0})) dy[j] = T{0};
  for (std::size_t j = 0; j < m; ++j) db.data[j] += dy[j];
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T xi = x[i];
    T* dwi = dw.data.data() + i * m;
    const T* wi = w.data.data() + i * m;
    if (xi != T{0})
      for (std::size_t j = 0; j < m; ++j) dwi[j] += xi * dy[j];
    if (!dx.empty()) {
      T acc{0};
      for (std::size_t j = 0; j < m; ++j) acc += wi[j] * dy[j];
      dx[i] = acc;
    }
  }
}

template <typename T>
void softmax(std::span<const T> logits, std::span<T> probs) {
  for (const T v : logits)
    if (std::isnan(v)) throw NumericError("softmax: NaN logit");
  const T top = *std::max_element(logits.begin(), logits.end());
  T total{0};
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - top);
    total += probs[j];
  }
  for (auto& p : probs) p /= total;
}

inline constexpr double kProbFloor = 1e-12;

template <typename T>
double cross_entropy(std::span<const T> probs, ClassLabel gold) {
  return -std::log(std::max(static_cast<double>(probs[class_index(gold)]), kProbFloor));
}

// d(cross-entropy)/d(logits) = p - onehot(gold), times `scale`.
template <typename T>
void softmax_cross_entropy_backward(std::span<const T> probs, ClassLabel gold, T scale, std::span<T> d_logits) {
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const T target = static_cast<int>(j) == class_index(gold) ? T{1} : T{0};
    d_logits[j] = (probs[j] - target) * scale;
  }
}

// Inverted dropout. In training mode each entry survives with probability
// keep_prob and is scaled by 1/keep_prob; `mask` receives the scale factor
// (0 or 1/keep_prob) per entry. Inference copies x unchanged.
template <typename T>
void dropout(std::span<const T> x, double keep_prob, Rng* rng, bool training, std::span<T> y, std::vector<T>& mask) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw UsageError("keep_prob must be in (0, 1], got " + std::to_string(keep_prob));
  if (!training) {
    std::copy(x.begin(), x.end(), y.begin());
    mask.clear();
    return;
  }
  if (rng == nullptr) throw UsageError("dropout in training mode needs an Rng");
  const T scale = static_cast<T>(1.0 / keep_prob);
  mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool keep = keep_prob >= 1.0 || rng->uniform01() < keep_prob;
    mask[i] = keep ? scale : T{0};
    y[i] = x[i] * mask[i];
  }
}

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  long long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void reset() {
    for (auto& x : m) x.fill(T{0});
    for (auto& x : v) x.fill(T{0});
    t = 0;
  }
};

template <typename T>
struct ParamSlot {
  std::string_view name;
  Tensor<T>* value;
  const Tensor<T>* grad;
};

template <typename T>
AdamState<T> make_adam_state(std::span<const ParamSlot<T>> params, double beta2) {
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw UsageError("adam beta2 must be in (0, 1)");
  AdamState<T> s;
  s.beta2 = beta2;
  for (const auto& p : params) {
    s.m.emplace_back(p.value->shape);
    s.v.emplace_back(p.value->shape);
  }
  return s;
}

// One bias-corrected Adam update over all parameter tensors.
template <typename T>
void adam_step(std::span<const ParamSlot<T>> params, AdamState<T>& state, double lr) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (state.m.size() != params.size()) throw UsageError("adam state does not match parameter list");
  for (const auto& p : params) {
    if (p.grad->shape != p.value->shape)
      throw UsageError("gradient shape mismatch for " + std::string(p.name));
    for (const T g : p.grad->data)
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + std::string(p.name));
  }
  state.t += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const T c1 = static_cast<T>(1.0 - b1);
  const T c2 = static_cast<T>(1.0 - b2);
  const T bias1 = static_cast<T>(1.0 - std::pow(b1, static_cast<double>(state.t)));
  const T bias2 = static_cast<T>(1.0 - std::pow(b2, static_cast<double>(state.t)));
  const T rate = static_cast<T>(lr);
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& theta = params[k].value->data;
    const auto& g = params[k].grad->data;
    auto& m = state.m[k].data;
    auto& v = state.v[k].data;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = static_cast<T>(b1) * m[i] + c1 * g[i];
      v[i] = static_cast<T>(b2) * v[i] + c2 * g[i] * g[i];
      const T m_hat = m[i] / bias1;
      const T v_hat = v[i] / bias2;
      theta[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace scnn

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "network.hpp"

namespace scnn {

double relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

namespace {

struct Case {
  HyperParams hp;
  CnnParams<double> params;
  std::vector<std::vector<double>> docs;
  std::vector<ClassLabel> labels;
  std::uint64_t dropout_seed = 0;
};

Case make_case(std::uint64_t seed, const GradcheckOptions& opt) {
  Rng rng(seed);
  Case c;
  c.hp.n_filters = 4;
  c.hp.filter_sizes = {1, 2, 2, 2, 3};
  c.hp.n_dense_output = 6;
  static constexpr double kKeep[] = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  c.hp.keep_prob = kKeep[rng.below(6)];
  c.params = init_params<double>(c.hp, opt.embedding_dim, derive_seed(seed, "init"));
  // Non-zero biases so ReLU gates and pooling positions vary.
  c.params.for_each([&](std::string_view name, Tensor<double>& t) {
    if (name.ends_with(".b"))
      for (auto& v : t.data) v = rng.uniform(-0.2, 0.2);
  });
  const std::size_t batch = 1 + rng.below(3);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> doc(opt.doc_length * opt.embedding_dim, 0.0);
    const std::size_t real = 1 + rng.below(opt.doc_length);
    for (std::size_t i = 0; i < real * opt.embedding_dim; ++i) doc[i] = rng.uniform(-1.0, 1.0);
    c.docs.push_back(std::move(doc));
    c.labels.push_back(label_from_index(static_cast<int>(rng.below(kNumClasses))));
  }
  c.dropout_seed = derive_seed(seed, "dropout");
  return c;
}

// Smallest distance of any ReLU pre-activation or max-pool comparison from its
// kink. Central differences straddling a kink are meaningless.
double kink_margin(const Case& c, const GradcheckOptions& opt) {
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t dim = opt.embedding_dim;
  for (const auto& doc : c.docs) {
    for (std::size_t g = 0; g < kFilterGroups; ++g) {
      const auto& w = c.params.conv_w[g];
      const auto& b = c.params.conv_b[g];
      const std::size_t h = w.shape[0], nf = w.shape[2];
      for (std::size_t j = 0; j < nf; ++j) {
        double top = -std::numeric_limits<double>::infinity(), second = top;
        for (std::size_t i = 0; i + h <= opt.doc_length; ++i) {
          double a = b.data[j];
          for (std::size_t r = 0; r < h; ++r)
            for (std::size_t d = 0; d < dim; ++d) a += doc[(i + r) * dim + d] * w.data[(r * dim + d) * nf + j];
          margin = std::min(margin, std::abs(a));
          if (a > top) {
            second = top;
            top = a;
          } else if (a > second && a != top) {  // all-padding windows tie exactly and move together
            second = a;
          }
        }
        if (top > 0.0 && std::isfinite(second)) margin = std::min(margin, top - second);
      }
    }
  }
  Rng dropout_rng(c.dropout_seed);
  ForwardCache<double> cache;
  for (const auto& doc : c.docs) {
    forward<double>(c.params, c.hp.keep_prob, DocView<double>{doc.data(), opt.doc_length, dim}, true, &dropout_rng,
                    cache);
    for (const double v : cache.hidden_pre) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

double batch_loss(const Case& c, const CnnParams<double>& p, const GradcheckOptions& opt, CnnParams<double>* grads) {
  Rng dropout_rng(c.dropout_seed);
  ForwardCache<double> cache;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(c.docs.size());
  for (std::size_t b = 0; b < c.docs.size(); ++b) {
    const DocView<double> view{c.docs[b].data(), opt.doc_length, opt.embedding_dim};
    const auto probs = forward<double>(p, c.hp.keep_prob, view, true, &dropout_rng, cache);
    loss += -std::log(probs[class_index(c.labels[b])]) * scale;
    if (grads != nullptr) backward<double>(p, cache, c.labels[b], scale, *grads);
  }
  return loss;
}

}  // namespace

GradcheckResult gradcheck(std::uint64_t seed, const GradcheckOptions& opt) {
  GradcheckResult result;
  for (int k = 0; k < opt.cases; ++k) {
    const std::uint64_t case_seed = derive_seed(seed, "case:" + std::to_string(k));
    Case c = make_case(case_seed, opt);
    for (int attempt = 1; kink_margin(c, opt) < opt.kink_margin; ++attempt)
      c = make_case(derive_seed(case_seed, "attempt:" + std::to_string(attempt)), opt);
    auto grads = c.params.zeros_like();
    batch_loss(c, c.params, opt, &grads);

    std::vector<const Tensor<double>*> grad_tensors;
    grads.for_each([&](std::string_view, const Tensor<double>& t) { grad_tensors.push_back(&t); });

    auto probe = c.params;
    std::size_t index = 0;
    probe.for_each([&](std::string_view name, Tensor<double>& t) {
      const auto& g = *grad_tensors[index++];
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double saved = t.data[i];
        t.data[i] = saved + opt.step;
        const double up = batch_loss(c, probe, opt, nullptr);
        t.data[i] = saved - opt.step;
        const double down = batch_loss(c, probe, opt, nullptr);
        t.data[i] = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        const double err = relative_error(g.data[i], numeric);
        ++result.parameters_checked;
        if (err > result.max_relative_error) {
          result.max_relative_error = err;
          result.worst_case = k;
          result.worst_tensor = std::string(name) + "[" + std::to_string(i) + "]";
        }
      }
    });
  }
  return result;
}

}  // namespace scnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace scnn {

struct GradcheckOptions {
  int cases = 25;
  std::size_t embedding_dim = 8;
  std::size_t doc_length = 12;
  double step = 1e-5;
  double kink_margin = 1e-3;  // cases closer than this to a ReLU or pooling kink are redrawn
};

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  int worst_case = -1;
  std::string worst_tensor;
};

// Relative error used by the check: |a - n| / max(|a|, |n|, 1e-6). Entries
// whose analytic and numeric values are both exactly zero count as 0.
double relative_error(double analytic, double numeric);

// Compares analytic gradients of the mean batch cross-entropy against
// central finite differences on random tiny networks in 64-bit arithmetic.
// Each case draws its own keep_prob, weights, biases, documents and labels.
GradcheckResult gradcheck(std::uint64_t seed, const GradcheckOptions& options = {});

}  // namespace scnn

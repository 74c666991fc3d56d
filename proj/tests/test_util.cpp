#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "fileio.hpp"
#include "gradcheck.hpp"
#include "nn.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "synth.hpp"

using namespace scnn;

TEST_CASE("rng substreams are reproducible and distinct") {
  CHECK(derive_seed(7, "folds") == derive_seed(7, "folds"));
  CHECK(derive_seed(7, "folds") != derive_seed(7, "sampler"));
  CHECK(derive_seed(7, "folds") != derive_seed(8, "folds"));
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(r.below(7) < 7);
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::vector<int> v{1, 2, 3, 4, 5, 6};
  r.shuffle(std::span(v));
  std::multiset<int> s(v.begin(), v.end());
  CHECK(s == std::multiset<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("xavier sample variance") {
  Rng rng(2024);
  const auto t = xavier_init<double>(100, 100, {100000}, rng);
  double mean = 0;
  for (double x : t.data) mean += x;
  mean /= static_cast<double>(t.size());
  double var = 0;
  for (double x : t.data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(t.size() - 1);
  const double b = std::sqrt(6.0 / 200.0);
  CHECK(std::abs(var - b * b / 3.0) <= 0.05 * b * b / 3.0);
}

TEST_CASE("inverted dropout preserves the mean") {
  Rng rng(1);
  std::vector<double> x(10000, 1.0), y(10000), mask;
  dropout<double>(x, 0.5, &rng, true, y, mask);
  double mean = 0;
  for (double v : y) mean += v;
  mean /= 10000.0;
  CHECK(std::abs(mean - 1.0) <= 0.02);
}

TEST_CASE("exact decimal formatting round trips") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double d = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(80)) - 40);
    CHECK(parse_double(format_exact(d), "x") == d);
    const float f = static_cast<float>(d);
    CHECK(parse_float(format_exact(f), "x") == f);
  }
  CHECK(format_fixed(2.0 / 3.0, 6) == "0.666667");
  CHECK_THROWS_WITH_AS(parse_double("1.5x", "weight"), doctest::Contains("non-numeric weight"), DataError);
  CHECK(parse_int("-12", "n") == -12);
}

TEST_CASE("sha256 of a known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("parallel_for runs every index once and reports the first failure") {
  for (int workers : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    try {
      parallel_for(20, workers, [](std::size_t i) {
        if (i == 7 || i == 12) throw std::runtime_error("boom " + std::to_string(i));
      });
      FAIL("expected an error");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 7");
    }
  }
}

TEST_CASE("relative error convention") {
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(1e-9, 0.0) == doctest::Approx(1e-3));
}

TEST_CASE("gradient check on tiny networks") {
  const auto a = gradcheck(7);
  const auto b = gradcheck(7);
  CHECK(a.max_relative_error == b.max_relative_error);
  CHECK(a.parameters_checked > 0);
  CHECK(a.max_relative_error < 1e-4);
}

TEST_CASE("synthetic corpus") {
  const auto c = make_synth_corpus({42, 600, 300, 16});
  const auto again = make_synth_corpus({42, 600, 300, 16});
  CHECK(c.train == again.train);
  CHECK(c.godin.vectors == again.godin.vectors);
  CHECK(c.train.size() == 600);
  CHECK(c.test.size() == 300);
  CHECK(c.godin.dim == 16);
  const auto counts = proportional_counts(600, {1847, 3027, 4789});
  CHECK(counts[0] + counts[1] + counts[2] == 600);
  CHECK(counts[0] == 115);
  CHECK(counts[1] == 188);
  std::array<std::size_t, 3> seen{};
  for (const auto& e : c.train) seen[class_index(*e.label)]++;
  CHECK(seen == counts);
  CHECK_FALSE(make_synth_corpus({43, 600, 300, 16}).train == c.train);
  CHECK_THROWS_AS(make_synth_corpus({1, 10, 10, 0}), UsageError);
}

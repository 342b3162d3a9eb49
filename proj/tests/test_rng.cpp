#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "sativ/rng.hpp"

using sativ::RandomStream;

TEST_CASE("streams are reproducible from seed and split path") {
  RandomStream a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());

  const RandomStream root(7);
  auto c1 = root.split(3).split("design");
  auto c2 = root.split(3).split("design");
  CHECK(c1.key() == c2.key());
  CHECK(c1() == c2());
}

TEST_CASE("children do not depend on draws taken from the parent") {
  RandomStream root(11);
  const auto before = root.split(5).key();
  for (int i = 0; i < 10; ++i) root();
  CHECK(root.split(5).key() == before);
}

TEST_CASE("distinct split indices and labels give distinct keys") {
  const RandomStream root(1);
  std::vector<std::uint64_t> keys;
  for (std::uint64_t i = 0; i < 1000; ++i) keys.push_back(root.split(i).key());
  keys.push_back(root.split("design").key());
  keys.push_back(root.split("oracle").key());
  std::sort(keys.begin(), keys.end());
  CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
}

TEST_CASE("uniform draws fill [0, 1) evenly") {
  RandomStream rng(2024);
  std::vector<double> counts(10, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    counts[std::size_t(u * 10)] += 1.0;
  }
  const std::vector<double> expected(10, draws / 10.0);
  CHECK(oracle::chi_square_gof(counts, expected) > 0.001);
}

TEST_CASE("normal draws have unit variance") {
  RandomStream rng(99);
  const int draws = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(draws));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / draws));
}

TEST_CASE("uniform_index is unbiased and categorical follows weights") {
  RandomStream rng(5);
  std::vector<double> counts(7, 0.0);
  for (int i = 0; i < 70000; ++i) counts[rng.uniform_index(7)] += 1.0;
  CHECK(oracle::chi_square_gof(counts, std::vector<double>(7, 10000.0)) > 0.001);

  const std::vector<double> w{0.1, 0.0, 0.6, 0.3};
  std::vector<double> cat(4, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) cat[rng.categorical(w)] += 1.0;
  CHECK(cat[1] == 0.0);
  CHECK(oracle::chi_square_gof({cat[0], cat[2], cat[3]}, {0.1 * draws, 0.6 * draws, 0.3 * draws}) > 0.001);
}

TEST_CASE("shuffle is a permutation") {
  RandomStream rng(3);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[std::size_t(i)] == i);
  CHECK(!std::is_sorted(v.begin(), v.end()));
}

TEST_CASE("bernoulli corners are deterministic") {
  RandomStream rng(8);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

#include "cnlcu/noise.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace cnlcu;

namespace {

NoiseSpec spec_of(NoiseKind kind, double rate) {
  NoiseSpec s{kind, rate, {}, 1};
  if (kind == NoiseKind::Asymmetric) s.pair_map = mnist_asymmetric_pairs();
  return s;
}

} // namespace

TEST_CASE("symmetric matrix at 20%") {
  const auto m = build_matrix(spec_of(NoiseKind::Symmetric, 0.2), 10);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      CHECK(m.at(i, j) == doctest::Approx(i == j ? 0.8 : 0.2 / 9.0).epsilon(1e-15));
    }
  }
  CHECK(m.at(0, 1) == doctest::Approx(0.02222).epsilon(1e-4));
}

TEST_CASE("pairflip k=3") {
  const auto m = build_matrix(spec_of(NoiseKind::Pairflip, 0.2), 3);
  const double expected[3][3] = {{0.8, 0.2, 0.0}, {0.0, 0.8, 0.2}, {0.2, 0.0, 0.8}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(m.at(i, j) == doctest::Approx(expected[i][j]));
  }
}

TEST_CASE("tridiagonal band and asymmetric pairs") {
  const auto t = build_matrix(spec_of(NoiseKind::Tridiagonal, 0.4), 5);
  CHECK(t.at(2, 2) == doctest::Approx(0.6));
  CHECK(t.at(2, 1) == doctest::Approx(0.2));
  CHECK(t.at(2, 3) == doctest::Approx(0.2));
  CHECK(t.at(0, 4) == doctest::Approx(0.2));
  CHECK(t.at(2, 0) == 0.0);

  const auto a = build_matrix(spec_of(NoiseKind::Asymmetric, 0.3), 10);
  CHECK(a.at(2, 7) == doctest::Approx(0.3));
  CHECK(a.at(3, 8) == doctest::Approx(0.3));
  CHECK(a.at(5, 6) == doctest::Approx(0.3));
  CHECK(a.at(6, 5) == doctest::Approx(0.3));
  CHECK(a.at(7, 7) == 1.0);
  CHECK(a.at(0, 0) == 1.0);
}

TEST_CASE("every matrix is row-stochastic and diagonally dominant up to 40%") {
  for (auto kind : {NoiseKind::Symmetric, NoiseKind::Asymmetric, NoiseKind::Pairflip,
                    NoiseKind::Tridiagonal}) {
    for (double r : {0.0, 0.1, 0.2, 0.3, 0.4, 0.45}) {
      for (int k : {2, 3, 10}) {
        if (kind == NoiseKind::Asymmetric && k < 10) continue;
        const auto m = build_matrix(spec_of(kind, r), k);
        CHECK(m.row_stochastic());
        if (r <= 0.4) CHECK(m.diagonally_dominant());
        if (r == 0.0) {
          for (int i = 0; i < k; ++i) CHECK(m.at(i, i) == 1.0);
        }
      }
    }
  }
}

TEST_CASE("matrix construction errors") {
  CHECK_THROWS_AS(build_matrix(spec_of(NoiseKind::Instance, 0.2), 10), std::invalid_argument);
  CHECK_THROWS_AS(build_matrix(spec_of(NoiseKind::Symmetric, 0.5), 10), std::invalid_argument);
  NoiseSpec bad{NoiseKind::Asymmetric, 0.2, {{1, 2}, {1, 3}}, 0};
  CHECK_THROWS_AS(build_matrix(bad, 10), std::invalid_argument);
  NoiseSpec empty{NoiseKind::Asymmetric, 0.2, {}, 0};
  CHECK_THROWS_AS(build_matrix(empty, 10), std::invalid_argument);
  CHECK(parse_noise("pairflip") == NoiseKind::Pairflip);
  CHECK_THROWS_AS(parse_noise("open-set"), std::invalid_argument);
}

TEST_CASE("class-dependent corruption") {
  std::vector<int> labels(60000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 10);

  const auto same = corrupt_class_dependent(labels, TransitionMatrix::identity(10), 3);
  CHECK(same == labels);

  const auto noisy = corrupt_class_dependent(labels, build_matrix(spec_of(NoiseKind::Symmetric, 0.2), 10), 4);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) flipped += noisy[i] != labels[i];
  const double frac = static_cast<double>(flipped) / labels.size();
  CHECK(std::abs(frac - 0.2) <= 3.0 * std::sqrt(0.2 * 0.8 / 60000.0));

  std::vector<int> fours(20000, 4);
  const auto pf = corrupt_class_dependent(fours, build_matrix(spec_of(NoiseKind::Pairflip, 0.4), 10), 5);
  std::size_t to_five = 0;
  for (int y : pf) {
    CHECK((y == 4 || y == 5));
    to_five += y == 5;
  }
  CHECK(std::abs(to_five / 20000.0 - 0.4) <= 3.0 * std::sqrt(0.4 * 0.6 / 20000.0));

  CHECK(corrupt_class_dependent(labels, build_matrix(spec_of(NoiseKind::Symmetric, 0.2), 10), 4) == noisy);
  CHECK_THROWS_AS(corrupt_class_dependent(std::vector{0, 11}, TransitionMatrix::identity(10), 1),
                  std::invalid_argument);
}

TEST_CASE("instance-dependent corruption") {
  const std::size_t n = 10000, d = 8;
  std::vector<double> features(n * d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 10);
    for (std::size_t j = 0; j < d; ++j) features[i * d + j] = std::fmod(0.37 * (i + 1) * (j + 3), 1.0);
  }

  CHECK(corrupt_instance_dependent(features, d, labels, 10, 0.0, 9) == labels);

  const auto noisy = corrupt_instance_dependent(features, d, labels, 10, 0.2, 9);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < n; ++i) flipped += noisy[i] != labels[i];
  const double frac = static_cast<double>(flipped) / n;
  CHECK(frac >= 0.15);
  CHECK(frac <= 0.25);
  CHECK(corrupt_instance_dependent(features, d, labels, 10, 0.2, 9) == noisy);

  // Flip targets depend on the features: two feature patterns with the same
  // label flip towards different class mixes.
  std::vector<double> two(2 * 4 * 2000, 0.0);
  std::vector<int> same_label(2 * 2000, 0);
  for (std::size_t i = 0; i < 2000; ++i) {
    two[(2 * i) * 4 + 0] = 1.0;
    two[(2 * i + 1) * 4 + 3] = 1.0;
  }
  const auto mixed = corrupt_instance_dependent(two, 4, same_label, 3, 0.4, 17);
  std::vector<int> counts_a(3, 0), counts_b(3, 0);
  for (std::size_t i = 0; i < 2000; ++i) {
    ++counts_a[mixed[2 * i]];
    ++counts_b[mixed[2 * i + 1]];
  }
  CHECK(counts_a[0] + counts_a[1] + counts_a[2] == 2000);
  CHECK((counts_a[1] != counts_b[1] || counts_a[2] != counts_b[2]));

  CHECK_THROWS_AS(corrupt_instance_dependent(features, d, labels, 10, 0.5, 1), std::invalid_argument);
}

TEST_CASE("imbalance keeps ceil(fraction * count) of each minority class") {
  NoisyDataset ds;
  ds.k = 10;
  ds.d = 1;
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < 600; ++i) {
      ds.clean_labels.push_back(c);
      ds.features.push_back(c / 10.0);
    }
  }
  ds.noisy_labels = ds.clean_labels;
  ds.n = ds.clean_labels.size();

  const std::vector<int> minority{0, 1, 2, 3, 4};
  const auto im = make_imbalanced(ds, minority, 0.01, 3);
  const auto counts = im.class_counts();
  for (int c = 0; c < 5; ++c) CHECK(counts[c] == 6);
  for (int c = 5; c < 10; ++c) CHECK(counts[c] == 600);
  for (std::size_t i = 0; i < im.n; ++i) CHECK(im.features[i] == im.clean_labels[i] / 10.0);

  const auto half = make_imbalanced(ds, std::vector{7}, 0.5, 3);
  CHECK(half.class_counts()[7] == 300);

  const auto full = make_imbalanced(ds, minority, 1.0, 3);
  CHECK(full.class_counts() == ds.class_counts());
  CHECK(full.n == ds.n);

  CHECK_THROWS_AS(make_imbalanced(ds, std::vector{10}, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_imbalanced(ds, minority, 0.0, 1), std::invalid_argument);
}

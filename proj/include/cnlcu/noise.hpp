#pragma once

#include "cnlcu/dataset.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace cnlcu {

enum class NoiseKind { Symmetric, Asymmetric, Pairflip, Tridiagonal, Instance };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise(std::string_view name);

using ClassPair = std::pair<int, int>; // source -> target

/// 2->7, 3->8, 5<->6.
std::vector<ClassPair> mnist_asymmetric_pairs();
/// T-shirt->shirt, pullover->coat, sandal->sneaker.
std::vector<ClassPair> fmnist_asymmetric_pairs();
/// truck->automobile, bird->airplane, deer->horse, cat<->dog.
std::vector<ClassPair> cifar10_asymmetric_pairs();

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Symmetric;
  double rate = 0.0;
  std::vector<ClassPair> pair_map; // Asymmetric only
  std::uint64_t seed = 0;
};

/// Row-stochastic k x k matrix; entry (i, j) = P(noisy = j | clean = i).
class TransitionMatrix {
public:
  explicit TransitionMatrix(int k);

  static TransitionMatrix identity(int k);

  int k() const { return k_; }
  double& at(int i, int j) { return p_[index(i, j)]; }
  double at(int i, int j) const { return p_[index(i, j)]; }
  std::span<const double> row(int i) const {
    return {p_.data() + index(i, 0), static_cast<std::size_t>(k_)};
  }

  bool row_stochastic(double tol = 1e-9) const;
  bool diagonally_dominant() const; // every (i, i) > 0.5

private:
  std::size_t index(int i, int j) const;

  int k_;
  std::vector<double> p_;
};

/// Throws std::invalid_argument for Instance noise, rate outside [0, 0.5), or
/// a malformed pair map.
TransitionMatrix build_matrix(const NoiseSpec& spec, int k);

/// Each label resampled independently from its matrix row.
std::vector<int> corrupt_class_dependent(std::span<const int> labels,
                                         const TransitionMatrix& m,
                                         std::uint64_t seed);

/// Feature-dependent flips: per-row flip rate from a truncated normal around
/// `rate`, spread over the other classes by a random linear projection of
/// the features.
std::vector<int> corrupt_instance_dependent(std::span<const double> features,
                                            std::size_t d,
                                            std::span<const int> labels, int k,
                                            double rate, std::uint64_t seed);

/// Replaces ds.noisy_labels with a corruption of ds.clean_labels.
void apply_noise(NoisyDataset& ds, const NoiseSpec& spec);

/// Keeps ceil(keep_fraction * count) rows of every listed class (chosen on
/// clean labels), all rows of the others, then reshuffles the row order.
NoisyDataset make_imbalanced(const NoisyDataset& ds, std::span<const int> minority,
                             double keep_fraction, std::uint64_t seed);

} // namespace cnlcu

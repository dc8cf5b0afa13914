#include "cnlcu/noise.hpp"

#include "cnlcu/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace cnlcu {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
  case NoiseKind::Symmetric: return "symmetric";
  case NoiseKind::Asymmetric: return "asymmetric";
  case NoiseKind::Pairflip: return "pairflip";
  case NoiseKind::Tridiagonal: return "tridiagonal";
  case NoiseKind::Instance: return "instance";
  }
  return "?";
}

NoiseKind parse_noise(std::string_view name) {
  for (auto k : {NoiseKind::Symmetric, NoiseKind::Asymmetric, NoiseKind::Pairflip,
                 NoiseKind::Tridiagonal, NoiseKind::Instance}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown noise type '" + std::string(name) + "'");
}

std::vector<ClassPair> mnist_asymmetric_pairs() { return {{2, 7}, {3, 8}, {5, 6}, {6, 5}}; }

std::vector<ClassPair> fmnist_asymmetric_pairs() { return {{0, 6}, {2, 4}, {5, 7}}; }

std::vector<ClassPair> cifar10_asymmetric_pairs() {
  return {{9, 1}, {2, 0}, {4, 7}, {3, 5}, {5, 3}};
}

TransitionMatrix::TransitionMatrix(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("TransitionMatrix: k must be >= 1");
  p_.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0);
}

TransitionMatrix TransitionMatrix::identity(int k) {
  TransitionMatrix m(k);
  for (int i = 0; i < k; ++i) m.at(i, i) = 1.0;
  return m;
}

std::size_t TransitionMatrix::index(int i, int j) const {
  if (i < 0 || i >= k_ || j < 0 || j >= k_) {
    throw std::out_of_range("TransitionMatrix: index out of range");
  }
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(j);
}

bool TransitionMatrix::row_stochastic(double tol) const {
  for (int i = 0; i < k_; ++i) {
    double sum = 0.0;
    for (double v : row(i)) {
      if (v < 0.0 || v > 1.0) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool TransitionMatrix::diagonally_dominant() const {
  for (int i = 0; i < k_; ++i) {
    if (!(at(i, i) > 0.5)) return false;
  }
  return true;
}

TransitionMatrix build_matrix(const NoiseSpec& spec, int k) {
  const double r = spec.rate;
  if (!(r >= 0.0 && r < 0.5)) throw std::invalid_argument("noise rate must lie in [0, 0.5)");
  if (k < 2) throw std::invalid_argument("noise needs at least two classes");

  TransitionMatrix m = TransitionMatrix::identity(k);
  if (r == 0.0 && spec.kind != NoiseKind::Instance) return m;

  auto wrap = [k](int i) { return ((i % k) + k) % k; };
  switch (spec.kind) {
  case NoiseKind::Symmetric:
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) m.at(i, j) = i == j ? 1.0 - r : r / (k - 1);
    }
    break;
  case NoiseKind::Asymmetric: {
    if (spec.pair_map.empty()) throw std::invalid_argument("asymmetric noise needs a pair map");
    std::set<int> sources;
    for (auto [s, t] : spec.pair_map) {
      if (s < 0 || s >= k || t < 0 || t >= k || s == t) {
        throw std::invalid_argument("asymmetric pair map entry out of range");
      }
      if (!sources.insert(s).second) {
        throw std::invalid_argument("asymmetric pair map repeats source class " + std::to_string(s));
      }
      m.at(s, s) = 1.0 - r;
      m.at(s, t) = r;
    }
    break;
  }
  case NoiseKind::Pairflip:
    for (int i = 0; i < k; ++i) {
      m.at(i, i) = 1.0 - r;
      m.at(i, wrap(i + 1)) = r;
    }
    break;
  case NoiseKind::Tridiagonal:
    for (int i = 0; i < k; ++i) {
      m.at(i, i) = 1.0 - r;
      m.at(i, wrap(i + 1)) += r / 2.0;
      m.at(i, wrap(i - 1)) += r / 2.0;
    }
    break;
  case NoiseKind::Instance:
    throw std::invalid_argument("instance noise has no single transition matrix");
  }
  return m;
}

std::vector<int> corrupt_class_dependent(std::span<const int> labels,
                                         const TransitionMatrix& m, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= m.k()) {
      throw std::invalid_argument("label " + std::to_string(y) + " at index " +
                                  std::to_string(i) + " is out of range");
    }
    const double draw = u(rng);
    const auto row = m.row(y);
    double cumulative = 0.0;
    int noisy = y;
    for (int j = 0; j < m.k(); ++j) {
      cumulative += row[static_cast<std::size_t>(j)];
      if (draw < cumulative) {
        noisy = j;
        break;
      }
    }
    out[i] = noisy;
  }
  return out;
}

std::vector<int> corrupt_instance_dependent(std::span<const double> features, std::size_t d,
                                            std::span<const int> labels, int k,
                                            double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 0.5)) throw std::invalid_argument("noise rate must lie in [0, 0.5)");
  const std::size_t n = labels.size();
  if (features.size() != n * d) throw std::invalid_argument("instance noise: feature shape mismatch");
  for (double v : features) {
    if (!std::isfinite(v)) throw std::invalid_argument("instance noise: non-finite feature");
  }
  for (int y : labels) {
    if (y < 0 || y >= k) throw std::invalid_argument("instance noise: label out of range");
  }
  std::vector<int> out(labels.begin(), labels.end());
  if (rate == 0.0) return out;

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<double> flip_rate(n);
  for (auto& q : flip_rate) {
    do {
      q = rate + 0.1 * gauss(rng);
    } while (q < 0.0 || q > 1.0);
  }
  const auto ku = static_cast<std::size_t>(k);
  std::vector<double> projection(d * ku);
  for (auto& w : projection) w = gauss(rng);

  std::vector<double> p(ku);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    std::fill(p.begin(), p.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double x = features[i * d + j];
      if (x == 0.0) continue;
      for (std::size_t c = 0; c < ku; ++c) p[c] += x * projection[j * ku + c];
    }
    p[y] = -std::numeric_limits<double>::infinity();
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ku; ++c) peak = std::max(peak, p[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < ku; ++c) {
      p[c] = c == y ? 0.0 : std::exp(p[c] - peak);
      total += p[c];
    }
    for (std::size_t c = 0; c < ku; ++c) p[c] = c == y ? 1.0 - flip_rate[i] : flip_rate[i] * p[c] / total;

    const double draw = u(rng);
    double cumulative = 0.0;
    int noisy = labels[i];
    for (std::size_t c = 0; c < ku; ++c) {
      cumulative += p[c];
      if (draw < cumulative) {
        noisy = static_cast<int>(c);
        break;
      }
    }
    out[i] = noisy;
  }
  return out;
}

void apply_noise(NoisyDataset& ds, const NoiseSpec& spec) {
  if (spec.kind == NoiseKind::Instance) {
    ds.noisy_labels =
        corrupt_instance_dependent(ds.features, ds.d, ds.clean_labels, ds.k, spec.rate, spec.seed);
  } else {
    ds.noisy_labels = corrupt_class_dependent(ds.clean_labels, build_matrix(spec, ds.k), spec.seed);
  }
}

NoisyDataset make_imbalanced(const NoisyDataset& ds, std::span<const int> minority,
                             double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("keep fraction must lie in (0, 1]");
  }
  std::vector<bool> is_minority(static_cast<std::size_t>(ds.k), false);
  for (int c : minority) {
    if (c < 0 || c >= ds.k) {
      throw std::invalid_argument("minority class " + std::to_string(c) + " is out of range");
    }
    is_minority[static_cast<std::size_t>(c)] = true;
  }
  if (keep_fraction == 1.0) return ds;

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.k));
  for (std::size_t i = 0; i < ds.n; ++i) {
    by_class[static_cast<std::size_t>(ds.clean_labels[i])].push_back(i);
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (is_minority[c]) {
      const auto n_keep = static_cast<std::size_t>(
          std::ceil(keep_fraction * static_cast<double>(rows.size()) - 1e-9));
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(std::min(n_keep, rows.size()));
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::shuffle(keep.begin(), keep.end(), rng);
  return take_rows(ds, keep);
}

} // namespace cnlcu

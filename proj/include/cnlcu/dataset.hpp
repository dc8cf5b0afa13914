#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace cnlcu {

/// Features with paired noisy (observed) and clean (hidden) labels.
/// Features are row-major n x d, scaled to [0, 1].
struct NoisyDataset {
  std::size_t n = 0;
  std::size_t d = 0;
  int k = 0;
  std::vector<double> features;
  std::vector<int> noisy_labels;
  std::vector<int> clean_labels;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * d, d};
  }
  std::vector<std::size_t> class_counts(bool clean = true) const;
  /// Throws std::invalid_argument if shapes or label ranges are inconsistent.
  void validate() const;
};

class IdxError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Reads an idx3-ubyte image file and its idx1-ubyte label file. Pixels are
/// divided by 255; both label vectors hold the file's labels.
NoisyDataset read_idx(const std::filesystem::path& images,
                      const std::filesystem::path& labels, int num_classes = 10);

/// Writes the dataset back as IDX (pixels rounded to bytes, clean labels).
void write_idx(const NoisyDataset& ds, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images,
               const std::filesystem::path& labels);

struct BlobSpec {
  int k = 2;
  std::vector<std::size_t> per_class; // one count per class
  std::size_t d = 2;
  std::vector<double> centers; // k x d, row-major
  double spread = 0.1;
  std::uint64_t seed = 0;
};

/// k centers drawn uniformly from [lo, hi]^d.
std::vector<double> random_centers(int k, std::size_t d, std::uint64_t seed,
                                   double lo = 0.2, double hi = 0.8);

/// Isotropic Gaussian clusters around the centers, clipped to [0, 1], rows
/// shuffled by seed.
NoisyDataset make_blobs(const BlobSpec& spec);

/// Partitions all rows into train/validation uniformly at random. The
/// validation labels stay noisy.
NoisyDataset split_validation(NoisyDataset ds, double fraction, std::uint64_t seed);

/// Rows `idx` of `ds`, in that order, with an empty split.
NoisyDataset take_rows(const NoisyDataset& ds, std::span<const std::size_t> idx);

/// Seeded shuffle-and-cut into (first, second) with `second_count` rows in
/// the second part.
std::pair<NoisyDataset, NoisyDataset>
holdout_split(const NoisyDataset& ds, std::size_t second_count, std::uint64_t seed);

/// FNV-1a over shape, features and both label vectors.
std::uint64_t fingerprint(const NoisyDataset& ds);

} // namespace cnlcu

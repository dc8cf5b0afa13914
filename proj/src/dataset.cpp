#include "cnlcu/dataset.hpp"

#include "cnlcu/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace cnlcu {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& file, const char* field) {
  if (bytes.size() < offset + 4) {
    throw IdxError(file + ": truncated file while reading " + field);
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

} // namespace

std::vector<std::size_t> NoisyDataset::class_counts(bool clean) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (int y : clean ? clean_labels : noisy_labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

void NoisyDataset::validate() const {
  if (features.size() != n * d) throw std::invalid_argument("dataset: feature shape mismatch");
  if (noisy_labels.size() != n || clean_labels.size() != n) {
    throw std::invalid_argument("dataset: label count mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (noisy_labels[i] < 0 || noisy_labels[i] >= k || clean_labels[i] < 0 ||
        clean_labels[i] >= k) {
      throw std::invalid_argument("dataset: label out of range at row " + std::to_string(i));
    }
  }
  for (double v : features) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("dataset: feature outside [0, 1]");
  }
}

NoisyDataset read_idx(const std::filesystem::path& images,
                      const std::filesystem::path& labels, int num_classes) {
  const auto img = slurp(images);
  const auto lab = slurp(labels);
  const std::string img_name = images.string();
  const std::string lab_name = labels.string();

  if (read_be32(img, 0, img_name, "magic") != kImageMagic) {
    throw IdxError(img_name + ": bad magic (expected 2051 for images)");
  }
  if (read_be32(lab, 0, lab_name, "magic") != kLabelMagic) {
    throw IdxError(lab_name + ": bad magic (expected 2049 for labels)");
  }
  const std::size_t n = read_be32(img, 4, img_name, "image count");
  const std::size_t rows = read_be32(img, 8, img_name, "rows");
  const std::size_t cols = read_be32(img, 12, img_name, "cols");
  const std::size_t n_labels = read_be32(lab, 4, lab_name, "label count");
  if (n != n_labels) {
    throw IdxError("image count " + std::to_string(n) + " does not match label count " +
                   std::to_string(n_labels));
  }
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n * d) throw IdxError(img_name + ": truncated file in pixel data");
  if (lab.size() < 8 + n) throw IdxError(lab_name + ": truncated file in label data");

  NoisyDataset ds;
  ds.n = n;
  ds.d = d;
  ds.k = num_classes;
  ds.features.resize(n * d);
  for (std::size_t i = 0; i < n * d; ++i) ds.features[i] = img[16 + i] / 255.0;
  ds.clean_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = lab[8 + i];
    if (y >= num_classes) {
      throw IdxError(lab_name + ": label " + std::to_string(y) + " at index " +
                     std::to_string(i) + " exceeds class count");
    }
    ds.clean_labels[i] = y;
  }
  ds.noisy_labels = ds.clean_labels;
  return ds;
}

void write_idx(const NoisyDataset& ds, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels) {
  if (rows * cols != ds.d) throw std::invalid_argument("write_idx: rows*cols != d");
  std::ofstream img(images, std::ios::binary);
  std::ofstream lab(labels, std::ios::binary);
  if (!img || !lab) throw IdxError("write_idx: cannot open output files");
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(ds.n));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : ds.features) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(ds.n));
  for (int y : ds.clean_labels) lab.put(static_cast<char>(y));
}

std::vector<double> random_centers(int k, std::size_t d, std::uint64_t seed, double lo,
                                   double hi) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> c(static_cast<std::size_t>(k) * d);
  for (auto& v : c) v = u(rng);
  return c;
}

NoisyDataset make_blobs(const BlobSpec& spec) {
  const auto k = static_cast<std::size_t>(spec.k);
  if (spec.k < 1 || spec.per_class.size() != k) {
    throw std::invalid_argument("make_blobs: need one count per class");
  }
  if (spec.centers.size() != k * spec.d) {
    throw std::invalid_argument("make_blobs: centers must be k x d");
  }
  if (spec.spread < 0.0) throw std::invalid_argument("make_blobs: spread must be >= 0");
  for (auto c : spec.per_class) {
    if (c < 1) throw std::invalid_argument("make_blobs: per_class must be >= 1");
  }

  const std::size_t n = std::accumulate(spec.per_class.begin(), spec.per_class.end(), std::size_t{0});
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t c = 0; c < k; ++c) labels.insert(labels.end(), spec.per_class[c], static_cast<int>(c));

  Rng rng(spec.seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::normal_distribution<double> gauss(0.0, 1.0);

  NoisyDataset ds;
  ds.n = n;
  ds.d = spec.d;
  ds.k = spec.k;
  ds.features.resize(n * spec.d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* center = spec.centers.data() + static_cast<std::size_t>(labels[i]) * spec.d;
    for (std::size_t j = 0; j < spec.d; ++j) {
      const double noise = spec.spread > 0.0 ? spec.spread * gauss(rng) : 0.0;
      ds.features[i * spec.d + j] = std::clamp(center[j] + noise, 0.0, 1.0);
    }
  }
  ds.clean_labels = labels;
  ds.noisy_labels = std::move(labels);
  return ds;
}

NoisyDataset split_validation(NoisyDataset ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split_validation: fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(ds.n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.n)));
  ds.val_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  ds.train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  return ds;
}

NoisyDataset take_rows(const NoisyDataset& ds, std::span<const std::size_t> idx) {
  NoisyDataset out;
  out.n = idx.size();
  out.d = ds.d;
  out.k = ds.k;
  out.features.reserve(out.n * ds.d);
  out.noisy_labels.reserve(out.n);
  out.clean_labels.reserve(out.n);
  for (auto i : idx) {
    if (i >= ds.n) throw std::out_of_range("take_rows: index out of range");
    const auto r = ds.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.noisy_labels.push_back(ds.noisy_labels[i]);
    out.clean_labels.push_back(ds.clean_labels[i]);
  }
  return out;
}

std::pair<NoisyDataset, NoisyDataset>
holdout_split(const NoisyDataset& ds, std::size_t second_count, std::uint64_t seed) {
  if (second_count > ds.n) throw std::invalid_argument("holdout_split: too many rows requested");
  std::vector<std::size_t> order(ds.n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::ptrdiff_t>(ds.n - second_count);
  std::vector<std::size_t> first(order.begin(), order.begin() + cut);
  std::vector<std::size_t> second(order.begin() + cut, order.end());
  return {take_rows(ds, first), take_rows(ds, second)};
}

std::uint64_t fingerprint(const NoisyDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[3] = {ds.n, ds.d, static_cast<std::uint64_t>(ds.k)};
  mix(shape, sizeof(shape));
  mix(ds.features.data(), ds.features.size() * sizeof(double));
  mix(ds.noisy_labels.data(), ds.noisy_labels.size() * sizeof(int));
  mix(ds.clean_labels.data(), ds.clean_labels.size() * sizeof(int));
  return h;
}

} // namespace cnlcu

#pragma once

// Experiment plumbing behind the cnlcu_run binary: flag parsing into a fully
// resolved manifest, dataset assembly, training or sweeping, CSV output.

#include "cnlcu/dataset.hpp"
#include "cnlcu/noise.hpp"
#include "cnlcu/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnlcu {

/// Bad command line; the binary exits with status 2.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown by parse_args for --help; carries the help text.
class HelpRequested : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ImbalanceSpec {
  std::vector<int> classes;
  double keep_fraction = 1.0;
};

/// Parses "0-4:0.01" or "1,3,7:0.5".
ImbalanceSpec parse_imbalance(const std::string& text);

struct RunManifest {
  std::string dataset = "blobs"; // mnist | fmnist | blobs
  std::filesystem::path images, labels;
  std::filesystem::path test_images, test_labels;
  double test_fraction = 0.2; // held out when no test files are given

  int blob_classes = 10;
  std::size_t blob_per_class = 500;
  std::size_t blob_test_per_class = 100;
  std::size_t blob_dim = 20;
  double blob_spread = 0.15;

  NoiseKind noise = NoiseKind::Symmetric;
  double rate = 0.2;
  std::optional<ImbalanceSpec> imbalance;
  double val_fraction = 0.1;

  TrainConfig train;
  bool sweep = false;
  std::vector<double> sweep_grid{1e-1, 1e-2, 1e-3, 1e-4};

  std::uint64_t seed = 1;
  std::filesystem::path out = "cnlcu_run.csv";
  std::vector<std::string> warnings;

  // Filled in once the data exist.
  std::uint64_t train_fingerprint = 0;
  std::uint64_t test_fingerprint = 0;
  std::string started_at;

  int num_classes() const;
  /// `key=value` lines describing everything that determines the output.
  std::vector<std::string> describe() const;
};

/// Throws UsageError (unknown flag, bad value) or HelpRequested.
RunManifest parse_args(int argc, const char* const* argv);

struct PreparedData {
  NoisyDataset train; // with train/validation split and noisy labels
  NoisyDataset test;  // clean labels
};

/// Loads or generates the data described by the manifest, applies
/// imbalance then noise, splits validation, and records fingerprints.
PreparedData prepare_data(RunManifest& manifest);

struct RunOutcome {
  TrainingResult result;
  std::optional<SweepResult> sweep;
};

RunOutcome execute(RunManifest& manifest, const PreparedData& data);

void write_csv(std::ostream& out, const RunManifest& manifest, const RunOutcome& outcome);
/// Throws std::runtime_error if the file cannot be written.
void emit_csv(const std::filesystem::path& path, const RunManifest& manifest,
              const RunOutcome& outcome);

std::string format_real(double v); // fixed, six decimals

} // namespace cnlcu

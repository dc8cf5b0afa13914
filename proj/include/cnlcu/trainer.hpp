#pragma once

// Two-network co-teaching where each network ranks a minibatch by its
// selection criterion and hands the retained examples to its peer.

#include "cnlcu/dataset.hpp"
#include "cnlcu/estimator.hpp"
#include "cnlcu/loss_tracker.hpp"
#include "cnlcu/metrics.hpp"
#include "cnlcu/mlp.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cnlcu {

struct TrainConfig {
  std::size_t epochs = 30;        // T_max
  std::size_t warmup_epochs = 10; // T_k
  double schedule_rate = 0.0;     // tau in R(T); the injected noise rate by default
  CriterionConfig criterion;
  OptimizerConfig optimizer;
  std::size_t hidden = 64;
  std::array<std::uint64_t, 2> net_seeds{1, 2};
  std::uint64_t shuffle_seed = 3;
  std::vector<int> minority_classes; // for the selected-ratio column

  void validate() const;
};

struct NetEpochStats {
  std::size_t selected_count = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::optional<double> selected_ratio;
  std::optional<double> selection_precision;
};

struct EpochReport {
  std::size_t epoch = 0; // 1-based
  double r_t = 1.0;
  std::array<NetEpochStats, 2> nets;

  double mean_val_acc() const { return 0.5 * (nets[0].val_acc + nets[1].val_acc); }
  double mean_test_acc() const { return 0.5 * (nets[0].test_acc + nets[1].test_acc); }
};

/// 1 - min(T / T_k * tau, tau).
double r_schedule(std::size_t epoch, std::size_t warmup_epochs, double tau);

/// round(rate * batch), at least 1 and at most batch.
std::size_t keep_count(double rate, std::size_t batch);

/// Positions of the `keep` smallest scores, ascending by score, ties to the
/// lower position.
std::vector<std::size_t> select_batch(std::span<const double> scores, std::size_t keep);

/// Learning rate for a 1-based epoch under the linear decay schedule.
double decayed_learning_rate(const OptimizerConfig& opt, std::size_t epoch,
                             std::size_t total_epochs);

/// Observes every minibatch: dataset rows in the batch, then the batch
/// positions selected by network 1 and by network 2.
using BatchObserver = std::function<void(std::size_t epoch, std::span<const std::size_t> rows,
                                         std::span<const std::size_t> selected1,
                                         std::span<const std::size_t> selected2)>;

class CoTeachingTrainer {
public:
  /// `data` supplies train_idx/val_idx (noisy labels); `test` is scored on
  /// its clean labels.
  CoTeachingTrainer(TrainConfig cfg, const NoisyDataset& data, const NoisyDataset& test);

  EpochReport train_epoch();

  void set_observer(BatchObserver observer) { observer_ = std::move(observer); }

  std::size_t epochs_done() const { return epoch_; }
  const MlpState& net(int network) const { return nets_.at(static_cast<std::size_t>(network - 1)); }
  const TrackerBank& bank() const { return bank_; }
  const SelectionLedger& ledger() const { return ledger_; }
  const TrainConfig& config() const { return cfg_; }

private:
  TrainConfig cfg_;
  const NoisyDataset& data_;
  std::array<MlpState, 2> nets_;
  TrackerBank bank_;
  SelectionLedger ledger_;
  Matrix val_x_;
  std::vector<int> val_y_;
  Matrix test_x_;
  std::vector<int> test_y_;
  std::size_t epoch_ = 0;
  BatchObserver observer_;
};

struct TrainingResult {
  std::vector<EpochReport> reports;
  std::size_t best_epoch = 0; // 1-based, highest mean validation accuracy
  std::size_t last_epoch = 0;
  std::array<MlpState, 2> nets;
  SelectionLedger ledger;

  double best_test_acc() const;
  double last_test_acc() const;
  /// Mean test accuracy over the final min(10, T_max) epochs.
  double last_ten_mean_test_acc() const;
};

TrainingResult run_training(const TrainConfig& cfg, const NoisyDataset& data,
                            const NoisyDataset& test);

struct SweepCell {
  double sigma2 = 0.0;
  double tau_min = 0.0;
  double best_val_acc = 0.0;
};

struct SweepResult {
  CriterionConfig best;
  std::vector<SweepCell> cells;
};

/// Trains once per (sigma2, tau_min) pair and keeps the pair with the highest
/// best-epoch validation accuracy; ties go to the smaller values. Cells run
/// on up to `threads` worker threads (0 = hardware concurrency).
SweepResult sweep_hyperparameters(std::span<const double> sigma2_grid,
                                  std::span<const double> tau_min_grid,
                                  const TrainConfig& cfg, const NoisyDataset& data,
                                  const NoisyDataset& test, unsigned threads = 0);

} // namespace cnlcu

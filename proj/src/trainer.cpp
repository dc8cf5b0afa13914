#include "cnlcu/trainer.hpp"

#include "cnlcu/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cnlcu {

namespace {

Matrix gather(const NoisyDataset& ds, std::span<const std::size_t> rows) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.row(rows[i]);
    std::copy(src.begin(), src.end(), x.row(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

std::vector<int> labels_of(const std::vector<int>& labels, std::span<const std::size_t> rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

template <typename T>
std::vector<T> pick(std::span<const T> values, std::span<const std::size_t> positions) {
  std::vector<T> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = values[positions[i]];
  return out;
}

Matrix pick_rows(const Matrix& x, std::span<const std::size_t> positions) {
  Matrix out(static_cast<Eigen::Index>(positions.size()), x.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(positions[i]));
  }
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

} // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (warmup_epochs < 1) throw std::invalid_argument("T_k must be >= 1");
  if (!(schedule_rate >= 0.0 && schedule_rate < 1.0)) {
    throw std::invalid_argument("schedule rate tau must lie in [0, 1)");
  }
  if (hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  criterion.validate();
  optimizer.validate();
}

double r_schedule(std::size_t epoch, std::size_t warmup_epochs, double tau) {
  if (epoch < 1) throw std::invalid_argument("r_schedule: epochs are 1-based");
  const double ramp = static_cast<double>(epoch) / static_cast<double>(warmup_epochs) * tau;
  return 1.0 - std::min(ramp, tau);
}

std::size_t keep_count(double rate, std::size_t batch) {
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(batch)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(batch, 1));
}

std::vector<std::size_t> select_batch(std::span<const double> scores, std::size_t keep) {
  if (keep > scores.size()) throw std::invalid_argument("select_batch: keep exceeds batch size");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(keep);
  return order;
}

double decayed_learning_rate(const OptimizerConfig& opt, std::size_t epoch,
                             std::size_t total_epochs) {
  const std::size_t start = opt.decay_start > 0
                                ? opt.decay_start
                                : static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(total_epochs)));
  if (epoch <= start || start >= total_epochs) return opt.learning_rate;
  return opt.learning_rate * static_cast<double>(total_epochs - epoch + 1) /
         static_cast<double>(total_epochs - start);
}

CoTeachingTrainer::CoTeachingTrainer(TrainConfig cfg, const NoisyDataset& data,
                                     const NoisyDataset& test)
    : cfg_(std::move(cfg)),
      data_(data),
      nets_{init_mlp(data.d, cfg_.hidden, data.k, cfg_.net_seeds[0]),
            init_mlp(data.d, cfg_.hidden, data.k, cfg_.net_seeds[1])},
      bank_(data.n, cfg_.criterion.window, cfg_.criterion.loss_bound) {
  cfg_.validate();
  if (data.train_idx.empty()) throw std::invalid_argument("trainer: empty training split");
  if (test.n == 0) throw std::invalid_argument("trainer: empty test set");
  if (test.d != data.d || test.k != data.k) {
    throw std::invalid_argument("trainer: test set shape differs from training data");
  }
  val_x_ = gather(data, data.val_idx);
  val_y_ = labels_of(data.noisy_labels, data.val_idx);
  const auto test_rows = all_rows(test.n);
  test_x_ = gather(test, test_rows);
  test_y_ = test.clean_labels;
}

EpochReport CoTeachingTrainer::train_epoch() {
  const std::size_t epoch = ++epoch_;
  EpochReport report;
  report.epoch = epoch;
  report.r_t = r_schedule(epoch, cfg_.warmup_epochs, cfg_.schedule_rate);

  OptimizerConfig opt = cfg_.optimizer;
  opt.learning_rate = decayed_learning_rate(cfg_.optimizer, epoch, cfg_.epochs);

  std::vector<std::size_t> order = data_.train_idx;
  Rng rng(derive_seed(cfg_.shuffle_seed, epoch));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t batch_size = cfg_.optimizer.batch_size;
  std::array<std::vector<double>, 2> scores;
  std::array<std::vector<std::size_t>, 2> chosen;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(start + batch_size, order.size());
    const std::span<const std::size_t> rows(order.data() + start, stop - start);
    const Matrix x = gather(data_, rows);
    const std::vector<int> y = labels_of(data_.noisy_labels, rows);
    const std::size_t keep = keep_count(report.r_t, rows.size());

    std::array<std::vector<double>, 2> losses{forward_losses(nets_[0], x, y),
                                              forward_losses(nets_[1], x, y)};
    for (int net = 1; net <= 2; ++net) {
      const auto n = static_cast<std::size_t>(net - 1);
      scores[n].resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto view = bank_.preview(net, rows[i], losses[n][i]);
        scores[n][i] = score(view.window, view.n_t, cfg_.criterion).score;
      }
      chosen[n] = select_batch(scores[n], keep);
    }

    for (int net = 1; net <= 2; ++net) {
      const auto n = static_cast<std::size_t>(net - 1);
      std::vector<bool> flag(rows.size(), false);
      for (auto p : chosen[n]) flag[p] = true;
      for (std::size_t i = 0; i < rows.size(); ++i) bank_.record(net, rows[i], losses[n][i], flag[i]);
      const auto selected_rows = pick<std::size_t>(rows, chosen[n]);
      ledger_.add(epoch - 1, net, selected_rows);
      report.nets[n].selected_count += chosen[n].size();
    }
    if (observer_) observer_(epoch, rows, chosen[0], chosen[1]);

    // Each network learns from the examples its peer selected.
    backward_update(nets_[0], pick_rows(x, chosen[1]), pick<int>(y, chosen[1]), opt);
    backward_update(nets_[1], pick_rows(x, chosen[0]), pick<int>(y, chosen[0]), opt);
  }
  // An epoch with no batches still needs a ledger slot.
  if (ledger_.epochs() < epoch) ledger_.add(epoch - 1, 1, {});

  for (int net = 1; net <= 2; ++net) {
    const auto n = static_cast<std::size_t>(net - 1);
    auto& stats = report.nets[n];
    stats.val_acc = val_y_.empty() ? 0.0 : test_accuracy(nets_[n], val_x_, val_y_);
    stats.test_acc = test_accuracy(nets_[n], test_x_, test_y_);
    stats.selection_precision = selection_precision(ledger_, data_, epoch - 1, net);
    if (!cfg_.minority_classes.empty() && !ledger_.selected(epoch - 1, net).empty()) {
      stats.selected_ratio = selected_ratio(ledger_, cfg_.minority_classes, data_.noisy_labels,
                                            epoch - 1, epoch, net);
    }
  }
  return report;
}

double TrainingResult::best_test_acc() const {
  return reports.at(best_epoch - 1).mean_test_acc();
}

double TrainingResult::last_test_acc() const { return reports.at(last_epoch - 1).mean_test_acc(); }

double TrainingResult::last_ten_mean_test_acc() const {
  const std::size_t count = std::min<std::size_t>(10, reports.size());
  double sum = 0.0;
  for (std::size_t i = reports.size() - count; i < reports.size(); ++i) {
    sum += reports[i].mean_test_acc();
  }
  return sum / static_cast<double>(count);
}

TrainingResult run_training(const TrainConfig& cfg, const NoisyDataset& data,
                            const NoisyDataset& test) {
  CoTeachingTrainer trainer(cfg, data, test);
  TrainingResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) result.reports.push_back(trainer.train_epoch());
  result.last_epoch = result.reports.size();
  result.best_epoch = 1;
  for (std::size_t i = 1; i < result.reports.size(); ++i) {
    if (result.reports[i].mean_val_acc() > result.reports[result.best_epoch - 1].mean_val_acc()) {
      result.best_epoch = i + 1;
    }
  }
  result.nets = {trainer.net(1), trainer.net(2)};
  result.ledger = trainer.ledger();
  return result;
}

SweepResult sweep_hyperparameters(std::span<const double> sigma2_grid,
                                  std::span<const double> tau_min_grid, const TrainConfig& cfg,
                                  const NoisyDataset& data, const NoisyDataset& test,
                                  unsigned threads) {
  if (sigma2_grid.empty() || tau_min_grid.empty()) {
    throw std::invalid_argument("sweep: empty hyperparameter grid");
  }
  std::vector<double> s2(sigma2_grid.begin(), sigma2_grid.end());
  std::vector<double> tm(tau_min_grid.begin(), tau_min_grid.end());
  std::sort(s2.begin(), s2.end());
  std::sort(tm.begin(), tm.end());

  SweepResult result;
  for (double a : s2) {
    for (double b : tm) result.cells.push_back({a, b, 0.0});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      TrainConfig c = cfg;
      c.criterion.sigma2 = result.cells[i].sigma2;
      c.criterion.tau_min = result.cells[i].tau_min;
      const auto run = run_training(c, data, test);
      result.cells[i].best_val_acc = run.reports[run.best_epoch - 1].mean_val_acc();
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(result.cells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  // Cells are in ascending (sigma2, tau_min) order, so strict improvement
  // keeps the smaller parameters on ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    if (result.cells[i].best_val_acc > result.cells[best].best_val_acc) best = i;
  }
  result.best = cfg.criterion;
  result.best.sigma2 = result.cells[best].sigma2;
  result.best.tau_min = result.cells[best].tau_min;
  return result;
}

} // namespace cnlcu

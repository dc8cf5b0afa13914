#include "cnlcu/trainer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace cnlcu;

namespace {

NoisyDataset small_blobs(std::uint64_t seed, std::size_t per_class = 60, double spread = 0.05) {
  BlobSpec spec;
  spec.k = 3;
  spec.d = 4;
  spec.per_class.assign(3, per_class);
  spec.centers = random_centers(3, 4, 77);
  spec.spread = spread;
  spec.seed = seed;
  return make_blobs(spec);
}

TrainConfig quick_config(CriterionFamily family) {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.warmup_epochs = 2;
  cfg.schedule_rate = 0.2;
  cfg.criterion.family = family;
  cfg.criterion.window = default_window(family);
  cfg.criterion.loss_bound = 2.0 * std::log(3.0);
  cfg.optimizer.learning_rate = 2e-2;
  cfg.optimizer.batch_size = 16;
  cfg.hidden = 32;
  return cfg;
}

} // namespace

TEST_CASE("R(T) schedule") {
  CHECK(r_schedule(1, 10, 0.2) == doctest::Approx(0.98));
  CHECK(r_schedule(5, 10, 0.2) == doctest::Approx(0.9));
  CHECK(r_schedule(10, 10, 0.2) == doctest::Approx(0.8));
  CHECK(r_schedule(25, 10, 0.2) == doctest::Approx(0.8));
  CHECK(r_schedule(3, 10, 0.0) == 1.0);
  CHECK_THROWS_AS(r_schedule(0, 10, 0.2), std::invalid_argument);
}

TEST_CASE("keep count rounds and clamps") {
  CHECK(keep_count(0.98, 128) == 125);
  CHECK(keep_count(0.8, 32) == 26);
  CHECK(keep_count(0.01, 5) == 1);
  CHECK(keep_count(1.0, 7) == 7);
}

TEST_CASE("batch selection keeps the smallest scores") {
  const std::vector<double> s{0.5, 0.1, 0.9, 0.1, 0.3};
  CHECK(select_batch(s, 3) == std::vector<std::size_t>{1, 3, 4});
  CHECK(select_batch(s, 5) == std::vector<std::size_t>{1, 3, 4, 0, 2});
  CHECK(select_batch(s, 0).empty());
  CHECK_THROWS_AS(select_batch(s, 6), std::invalid_argument);
}

TEST_CASE("learning-rate decay") {
  OptimizerConfig opt;
  opt.learning_rate = 1.0;
  CHECK(decayed_learning_rate(opt, 1, 30) == 1.0);
  CHECK(decayed_learning_rate(opt, 12, 30) == 1.0);
  CHECK(decayed_learning_rate(opt, 13, 30) == doctest::Approx(18.0 / 18.0));
  CHECK(decayed_learning_rate(opt, 30, 30) == doctest::Approx(1.0 / 18.0));
  opt.decay_start = 5;
  CHECK(decayed_learning_rate(opt, 10, 10) == doctest::Approx(0.2));
}

TEST_CASE("without a schedule every example is selected by both networks") {
  auto data = split_validation(small_blobs(1), 0.2, 2);
  const auto test = small_blobs(9, 20);
  auto cfg = quick_config(CriterionFamily::CnlcuSoft);
  cfg.schedule_rate = 0.0;
  cfg.epochs = 2;
  CoTeachingTrainer trainer(cfg, data, test);
  trainer.train_epoch();
  trainer.train_epoch();
  for (auto row : data.train_idx) {
    for (int net = 1; net <= 2; ++net) {
      const auto& h = trainer.bank().history(net, row);
      CHECK(h.t() == 2);
      CHECK(h.n_t() == h.t());
    }
  }
  CHECK(trainer.ledger().selected(0, 1).size() == data.train_idx.size());
}

TEST_CASE("selection counts follow R(T) for every criterion") {
  auto data = split_validation(small_blobs(3), 0.2, 4);
  const auto test = small_blobs(10, 20);
  for (auto family : {CriterionFamily::CurrentLoss, CriterionFamily::PlainMean, CriterionFamily::CnlcuSoft,
                      CriterionFamily::CnlcuHard, CriterionFamily::SoftNoBound,
                      CriterionFamily::HardNoBound, CriterionFamily::CurrentPlusSoftBound,
                      CriterionFamily::CurrentPlusHardBound}) {
    CAPTURE(to_string(family));
    const auto cfg = quick_config(family);
    CoTeachingTrainer trainer(cfg, data, test);
    std::size_t expected = 0;
    trainer.set_observer([&](std::size_t epoch, std::span<const std::size_t> rows,
                             std::span<const std::size_t> s1, std::span<const std::size_t> s2) {
      const auto keep = keep_count(r_schedule(epoch, cfg.warmup_epochs, cfg.schedule_rate), rows.size());
      CHECK(s1.size() == keep);
      CHECK(s2.size() == keep);
      expected += keep;
    });
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      expected = 0;
      const auto rep = trainer.train_epoch();
      CHECK(rep.nets[0].selected_count == expected);
      CHECK(rep.nets[1].selected_count == expected);
      CHECK(rep.nets[0].selection_precision.has_value());
    }
  }
}

TEST_CASE("training is deterministic and learns separable blobs") {
  auto data = split_validation(small_blobs(5), 0.2, 6);
  const auto test = small_blobs(11, 20);
  auto cfg = quick_config(CriterionFamily::CurrentLoss);
  cfg.epochs = 12;
  cfg.warmup_epochs = 10;
  const auto a = run_training(cfg, data, test);
  const auto b = run_training(cfg, data, test);
  REQUIRE(a.reports.size() == 12);
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].mean_test_acc() == b.reports[i].mean_test_acc());
    CHECK(a.reports[i].mean_val_acc() == b.reports[i].mean_val_acc());
  }
  CHECK(flatten_parameters(a.nets[0]) == flatten_parameters(b.nets[0]));
  CHECK(a.last_test_acc() >= 0.9);

  // Best epoch is the earliest one reaching the highest mean validation accuracy.
  double top = -1.0;
  std::size_t first_top = 0;
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    if (a.reports[i].mean_val_acc() > top) top = a.reports[i].mean_val_acc(), first_top = i + 1;
  }
  CHECK(a.best_epoch == first_top);
  CHECK(a.best_test_acc() == a.reports[first_top - 1].mean_test_acc());

  double sum = 0.0;
  for (std::size_t i = 2; i < 12; ++i) sum += a.reports[i].mean_test_acc();
  CHECK(a.last_ten_mean_test_acc() == doctest::Approx(sum / 10.0));

  cfg.shuffle_seed = 99;
  const auto c = run_training(cfg, data, test);
  CHECK(flatten_parameters(c.nets[0]) != flatten_parameters(a.nets[0]));
}

TEST_CASE("a one-cell sweep returns that cell") {
  auto data = split_validation(small_blobs(7), 0.2, 8);
  const auto test = small_blobs(12, 20);
  auto cfg = quick_config(CriterionFamily::CnlcuHard);
  cfg.epochs = 2;
  const std::vector<double> s2{0.05}, tau{0.3};
  const auto sw = sweep_hyperparameters(s2, tau, cfg, data, test, 1);
  REQUIRE(sw.cells.size() == 1);
  CHECK(sw.best.sigma2 == 0.05);
  CHECK(sw.best.tau_min == 0.3);
  CHECK(sw.best.family == CriterionFamily::CnlcuHard);
  const auto run = run_training([&] {
    auto c = cfg;
    c.criterion.sigma2 = 0.05;
    c.criterion.tau_min = 0.3;
    return c;
  }(), data, test);
  CHECK(sw.cells[0].best_val_acc == run.reports[run.best_epoch - 1].mean_val_acc());

  const std::vector<double> grid{1e-1, 1e-2};
  const auto two = sweep_hyperparameters(grid, grid, cfg, data, test, 2);
  CHECK(two.cells.size() == 4);
  CHECK(two.cells.front().sigma2 == 1e-2);
  CHECK_THROWS_AS(sweep_hyperparameters({}, grid, cfg, data, test), std::invalid_argument);
}

TEST_CASE("trainer configuration errors") {
  auto data = split_validation(small_blobs(1), 0.2, 2);
  const auto test = small_blobs(9, 20);
  auto cfg = quick_config(CriterionFamily::CnlcuSoft);
  cfg.schedule_rate = 1.0;
  CHECK_THROWS_AS(CoTeachingTrainer(cfg, data, test), std::invalid_argument);
  cfg = quick_config(CriterionFamily::CnlcuSoft);
  cfg.epochs = 0;
  CHECK_THROWS_AS(run_training(cfg, data, test), std::invalid_argument);
}

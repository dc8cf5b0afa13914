#include "cnlcu/runner.hpp"

#include "cnlcu/random.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cnlcu {

namespace {

// Seed streams derived from the single --seed flag.
enum SeedStream : std::uint64_t {
  kNet1 = 1,
  kNet2,
  kShuffle,
  kNoise,
  kImbalance,
  kValidation,
  kHoldout,
  kBlobCenters,
  kBlobTrain,
  kBlobTest,
};

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join_classes(const std::vector<int>& classes) {
  std::string s;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(classes[i]);
  }
  return s;
}

std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string{};
}

} // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

ImbalanceSpec parse_imbalance(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw UsageError("--imbalance expects CLASSES:FRACTION, e.g. 0-4:0.01");
  }
  ImbalanceSpec spec;
  const std::string classes = text.substr(0, colon);
  try {
    std::size_t used = 0;
    spec.keep_fraction = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw UsageError("--imbalance: bad keep fraction in '" + text + "'");
  }
  if (!(spec.keep_fraction > 0.0 && spec.keep_fraction <= 1.0)) {
    throw UsageError("--imbalance: keep fraction must lie in (0, 1]");
  }
  std::stringstream ss(classes);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        spec.classes.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument("range");
        for (int c = lo; c <= hi; ++c) spec.classes.push_back(c);
      }
    }
  } catch (const std::exception&) {
    throw UsageError("--imbalance: bad class list in '" + text + "'");
  }
  if (spec.classes.empty()) throw UsageError("--imbalance: no classes given");
  return spec;
}

int RunManifest::num_classes() const { return dataset == "blobs" ? blob_classes : 10; }

std::vector<std::string> RunManifest::describe() const {
  const auto& c = train.criterion;
  std::vector<std::string> lines;
  lines.push_back("dataset=" + dataset);
  if (dataset == "blobs") {
    lines.push_back("blob_classes=" + std::to_string(blob_classes));
    lines.push_back("blob_per_class=" + std::to_string(blob_per_class));
    lines.push_back("blob_test_per_class=" + std::to_string(blob_test_per_class));
    lines.push_back("blob_dim=" + std::to_string(blob_dim));
    lines.push_back("blob_spread=" + shortest(blob_spread));
  } else {
    lines.push_back("images=" + images.string());
    lines.push_back("labels=" + labels.string());
    if (!test_images.empty()) {
      lines.push_back("test_images=" + test_images.string());
      lines.push_back("test_labels=" + test_labels.string());
    } else {
      lines.push_back("test_fraction=" + shortest(test_fraction));
    }
  }
  lines.push_back("noise=" + std::string(to_string(noise)));
  lines.push_back("rate=" + shortest(rate));
  if (imbalance) {
    lines.push_back("imbalance=" + join_classes(imbalance->classes) + ":" +
                    shortest(imbalance->keep_fraction));
  }
  lines.push_back("val_fraction=" + shortest(val_fraction));
  lines.push_back("criterion=" + std::string(to_string(c.family)));
  lines.push_back("sigma2=" + shortest(c.sigma2));
  lines.push_back("tau_min=" + shortest(c.tau_min));
  lines.push_back("loss_bound=" + shortest(c.loss_bound));
  lines.push_back("window=" + std::to_string(c.window));
  lines.push_back("contamination=" + shortest(c.contamination));
  lines.push_back("knn_k=" + (c.knn_k == 0 ? std::string("auto") : std::to_string(c.knn_k)));
  lines.push_back("epochs=" + std::to_string(train.epochs));
  lines.push_back("tk=" + std::to_string(train.warmup_epochs));
  lines.push_back("schedule_rate=" + shortest(train.schedule_rate));
  lines.push_back("batch_size=" + std::to_string(train.optimizer.batch_size));
  lines.push_back("lr=" + shortest(train.optimizer.learning_rate));
  lines.push_back("decay_start=" + std::to_string(train.optimizer.decay_start));
  lines.push_back("hidden=" + std::to_string(train.hidden));
  lines.push_back("sweep=" + std::string(sweep ? "true" : "false"));
  lines.push_back("seed=" + std::to_string(seed));
  lines.push_back("net_seeds=" + std::to_string(train.net_seeds[0]) + "," +
                  std::to_string(train.net_seeds[1]));
  lines.push_back("shuffle_seed=" + std::to_string(train.shuffle_seed));
  if (train_fingerprint != 0) {
    lines.push_back("train_fingerprint=" + hex64(train_fingerprint));
    lines.push_back("test_fingerprint=" + hex64(test_fingerprint));
  }
  return lines;
}

RunManifest parse_args(int argc, const char* const* argv) {
  RunManifest m;
  auto& crit = m.train.criterion;
  std::string noise = "symmetric";
  std::string criterion = "cnlcu-s";
  std::string imbalance;
  double schedule_rate = -1.0;

  CLI::App app{"Co-teaching with robust, exploration-aware sample selection", "cnlcu_run"};
  app.add_option("--dataset", m.dataset, "mnist, fmnist or blobs")
      ->check(CLI::IsMember({"mnist", "fmnist", "blobs"}));
  app.add_option("--images", m.images, "IDX image file (mnist/fmnist)");
  app.add_option("--labels", m.labels, "IDX label file (mnist/fmnist)");
  app.add_option("--test-images", m.test_images, "IDX test images; otherwise a holdout is cut");
  app.add_option("--test-labels", m.test_labels, "IDX test labels");
  app.add_option("--test-fraction", m.test_fraction, "holdout share when no test files are given")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--blob-classes", m.blob_classes)->check(CLI::Range(2, 1000));
  app.add_option("--blob-per-class", m.blob_per_class)->check(CLI::PositiveNumber);
  app.add_option("--blob-test-per-class", m.blob_test_per_class)->check(CLI::PositiveNumber);
  app.add_option("--blob-dim", m.blob_dim)->check(CLI::PositiveNumber);
  app.add_option("--blob-spread", m.blob_spread)->check(CLI::NonNegativeNumber);
  app.add_option("--noise", noise, "symmetric, asymmetric, pairflip, tridiagonal or instance")
      ->check(CLI::IsMember({"symmetric", "asymmetric", "pairflip", "tridiagonal", "instance"}));
  app.add_option("--rate", m.rate, "noise rate, below 0.5");
  app.add_option("--criterion", criterion)
      ->check(CLI::IsMember({"current", "mean", "cnlcu-s", "cnlcu-h", "soft-nobound",
                             "hard-nobound", "current-soft", "current-hard"}));
  app.add_option("--epochs", m.train.epochs)->check(CLI::PositiveNumber);
  app.add_option("--batch-size", m.train.optimizer.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--lr", m.train.optimizer.learning_rate)->check(CLI::PositiveNumber);
  app.add_option("--decay-start", m.train.optimizer.decay_start,
                 "epoch after which the learning rate decays linearly to zero (0 = 0.4 T_max)");
  auto* sigma2_opt = app.add_option("--sigma2", crit.sigma2)->check(CLI::Range(0.0, 1.0));
  auto* tau_opt = app.add_option("--tau-min", crit.tau_min)->check(CLI::PositiveNumber);
  auto* bound_opt = app.add_option("--loss-bound", crit.loss_bound)->check(CLI::PositiveNumber);
  auto* window_opt = app.add_option("--window", crit.window)->check(CLI::PositiveNumber);
  auto* cont_opt = app.add_option("--contamination", crit.contamination)->check(CLI::Range(0.0, 0.5));
  auto* knn_opt = app.add_option("--knn-k", crit.knn_k, "0 = max(1, floor(sqrt(t)))");
  app.add_option("--tk", m.train.warmup_epochs)->check(CLI::PositiveNumber);
  app.add_option("--hidden", m.train.hidden)->check(CLI::PositiveNumber);
  app.add_option("--schedule-rate", schedule_rate,
                 "tau used by R(T) when the true noise rate should not be assumed");
  app.add_option("--seed", m.seed);
  app.add_option("--imbalance", imbalance, "minority classes and keep fraction, e.g. 0-4:0.01");
  app.add_flag("--sweep", m.sweep, "grid-search sigma2 x tau_min on noisy validation accuracy");
  app.add_option("--out", m.out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (!(m.rate >= 0.0 && m.rate < 0.5)) {
    throw UsageError("--rate must be below 0.5 so clean labels stay diagonally dominant");
  }
  m.noise = parse_noise(noise);
  crit.family = parse_criterion(criterion);
  if (!(crit.sigma2 > 0.0 && crit.sigma2 < 1.0)) throw UsageError("--sigma2 must lie in (0, 1)");
  if (m.dataset != "blobs" && m.images.empty()) {
    throw UsageError("--dataset " + m.dataset + " needs --images and --labels");
  }
  if (m.dataset != "blobs" && m.labels.empty()) throw UsageError("--labels is required");
  if (m.test_images.empty() != m.test_labels.empty()) {
    throw UsageError("--test-images and --test-labels go together");
  }
  if (!imbalance.empty()) m.imbalance = parse_imbalance(imbalance);
  if (m.imbalance) {
    for (int c : m.imbalance->classes) {
      if (c < 0 || c >= m.num_classes()) {
        throw UsageError("--imbalance: class " + std::to_string(c) + " is out of range");
      }
    }
  }

  const auto family = crit.family;
  auto warn_ignored = [&m](const CLI::Option* opt, const char* flag, const char* why) {
    if (opt->count() > 0) {
      m.warnings.push_back(std::string(flag) + " ignored: " + why);
    }
  };
  if (!uses_soft_bound(family)) warn_ignored(sigma2_opt, "--sigma2", "criterion has no soft bound");
  if (!uses_hard_bound(family)) warn_ignored(tau_opt, "--tau-min", "criterion has no hard bound");
  if (!uses_hard_bound(family)) {
    warn_ignored(bound_opt, "--loss-bound", "only the hard bound uses L (losses are still clamped)");
  }
  if (!uses_hard_bound(family) && !uses_hard_estimate(family)) {
    warn_ignored(cont_opt, "--contamination", "criterion does no hard truncation");
    warn_ignored(knn_opt, "--knn-k", "criterion does no hard truncation");
  }

  if (window_opt->count() == 0) crit.window = default_window(family);
  if (bound_opt->count() == 0) crit.loss_bound = 2.0 * std::log(static_cast<double>(m.num_classes()));
  m.train.schedule_rate = schedule_rate >= 0.0 ? schedule_rate : m.rate;
  m.train.net_seeds = {derive_seed(m.seed, kNet1), derive_seed(m.seed, kNet2)};
  m.train.shuffle_seed = derive_seed(m.seed, kShuffle);
  if (m.imbalance) m.train.minority_classes = m.imbalance->classes;
  try {
    m.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return m;
}

PreparedData prepare_data(RunManifest& m) {
  PreparedData out;
  NoisyDataset pool;
  if (m.dataset == "blobs") {
    BlobSpec spec;
    spec.k = m.blob_classes;
    spec.d = m.blob_dim;
    spec.centers = random_centers(spec.k, spec.d, derive_seed(m.seed, kBlobCenters));
    spec.spread = m.blob_spread;
    spec.per_class.assign(static_cast<std::size_t>(spec.k), m.blob_per_class);
    spec.seed = derive_seed(m.seed, kBlobTrain);
    pool = make_blobs(spec);
    spec.per_class.assign(static_cast<std::size_t>(spec.k), m.blob_test_per_class);
    spec.seed = derive_seed(m.seed, kBlobTest);
    out.test = make_blobs(spec);
  } else {
    pool = read_idx(m.images, m.labels);
    if (!m.test_images.empty()) {
      out.test = read_idx(m.test_images, m.test_labels);
    } else {
      const auto held = static_cast<std::size_t>(std::llround(m.test_fraction * static_cast<double>(pool.n)));
      auto [rest, test] = holdout_split(pool, held, derive_seed(m.seed, kHoldout));
      pool = std::move(rest);
      out.test = std::move(test);
    }
  }

  if (m.imbalance) {
    pool = make_imbalanced(pool, m.imbalance->classes, m.imbalance->keep_fraction,
                           derive_seed(m.seed, kImbalance));
  }
  NoiseSpec noise{m.noise, m.rate, {}, derive_seed(m.seed, kNoise)};
  if (m.noise == NoiseKind::Asymmetric) {
    noise.pair_map = m.dataset == "fmnist" ? fmnist_asymmetric_pairs() : mnist_asymmetric_pairs();
  }
  apply_noise(pool, noise);
  out.train = split_validation(std::move(pool), m.val_fraction, derive_seed(m.seed, kValidation));
  m.train_fingerprint = fingerprint(out.train);
  m.test_fingerprint = fingerprint(out.test);
  return out;
}

RunOutcome execute(RunManifest& m, const PreparedData& data) {
  RunOutcome outcome;
  TrainConfig cfg = m.train;
  if (m.sweep) {
    outcome.sweep = sweep_hyperparameters(m.sweep_grid, m.sweep_grid, cfg, data.train, data.test);
    cfg.criterion = outcome.sweep->best;
    m.train.criterion = cfg.criterion;
  }
  outcome.result = run_training(cfg, data.train, data.test);
  return outcome;
}

void write_csv(std::ostream& out, const RunManifest& m, const RunOutcome& outcome) {
  for (const auto& line : m.describe()) out << "# " << line << '\n';
  for (const auto& w : m.warnings) out << "# warning: " << w << '\n';
  if (outcome.sweep) {
    for (const auto& cell : outcome.sweep->cells) {
      out << "# sweep sigma2=" << shortest(cell.sigma2) << " tau_min=" << shortest(cell.tau_min)
          << " best_val_acc=" << format_real(cell.best_val_acc) << '\n';
    }
  }
  out << "epoch,R_T,net,val_acc,test_acc,selected_ratio,selection_precision,selected_count\n";
  const auto& r = outcome.result;
  for (const auto& rep : r.reports) {
    for (int net = 1; net <= 2; ++net) {
      const auto& s = rep.nets[static_cast<std::size_t>(net - 1)];
      out << rep.epoch << ',' << format_real(rep.r_t) << ',' << net << ',' << format_real(s.val_acc)
          << ',' << format_real(s.test_acc) << ',' << optional_real(s.selected_ratio) << ','
          << optional_real(s.selection_precision) << ',' << s.selected_count << '\n';
    }
  }
  out << "# best_epoch=" << r.best_epoch << '\n';
  out << "# best_test_acc=" << format_real(r.best_test_acc()) << '\n';
  out << "# last_epoch=" << r.last_epoch << '\n';
  out << "# last_test_acc=" << format_real(r.last_test_acc()) << '\n';
  out << "# last10_mean_test_acc=" << format_real(r.last_ten_mean_test_acc()) << '\n';
}

void emit_csv(const std::filesystem::path& path, const RunManifest& m, const RunOutcome& outcome) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(file, m, outcome);
  file.flush();
  if (!file) throw std::runtime_error("write to " + path.string() + " failed");
}

} // namespace cnlcu

// Command-line entry point: one training run (or one sweep) per invocation,
// results written as CSV. Exit status 0 on success, 2 on usage errors,
// 1 on runtime failures.

#include "cnlcu/runner.hpp"

#include <chrono>
#include <ctime>
#include <iostream>

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

int main(int argc, char** argv) {
  cnlcu::RunManifest manifest;
  try {
    manifest = cnlcu::parse_args(argc, argv);
  } catch (const cnlcu::HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const cnlcu::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the flag list\n";
    return 2;
  }

  try {
    manifest.started_at = utc_now();
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
    auto data = cnlcu::prepare_data(manifest);
    std::cout << "started " << manifest.started_at << ": " << data.train.train_idx.size()
              << " train / " << data.train.val_idx.size() << " validation / " << data.test.n
              << " test examples\n";
    const auto outcome = cnlcu::execute(manifest, data);
    cnlcu::emit_csv(manifest.out, manifest, outcome);
    const auto& r = outcome.result;
    std::cout << "best epoch " << r.best_epoch << " test acc " << cnlcu::format_real(r.best_test_acc())
              << ", last " << cnlcu::format_real(r.last_test_acc()) << ", last-ten mean "
              << cnlcu::format_real(r.last_ten_mean_test_acc()) << "\nwrote " << manifest.out.string()
              << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "cnlcu/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace cnlcu {

void SelectionLedger::add(std::size_t epoch, int network, std::span<const std::size_t> rows) {
  if (network != 1 && network != 2) throw std::invalid_argument("network must be 1 or 2");
  if (entries_.size() <= epoch) entries_.resize(epoch + 1);
  auto& dst = entries_[epoch][static_cast<std::size_t>(network - 1)];
  dst.insert(dst.end(), rows.begin(), rows.end());
}

const std::vector<std::size_t>& SelectionLedger::selected(std::size_t epoch, int network) const {
  if (network != 1 && network != 2) throw std::invalid_argument("network must be 1 or 2");
  return entries_.at(epoch)[static_cast<std::size_t>(network - 1)];
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("accuracy: empty label set");
  if (predicted.size() != labels.size()) throw std::invalid_argument("accuracy: size mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double test_accuracy(const MlpState& net, const Matrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw std::invalid_argument("test_accuracy: empty test set");
  return accuracy(predict(net, features), labels);
}

double selected_ratio(const SelectionLedger& ledger, std::span<const int> minority,
                      std::span<const int> noisy_labels, std::size_t first, std::size_t last,
                      int network) {
  std::size_t total = 0;
  std::size_t hits = 0;
  for (std::size_t e = first; e < last && e < ledger.epochs(); ++e) {
    for (int net : {1, 2}) {
      if (network != 0 && net != network) continue;
      for (auto row : ledger.selected(e, net)) {
        const int y = noisy_labels[row];
        ++total;
        hits += std::find(minority.begin(), minority.end(), y) != minority.end();
      }
    }
  }
  if (total == 0) throw std::invalid_argument("selected_ratio: no selections in range");
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> selection_precision(const SelectionLedger& ledger, const NoisyDataset& ds,
                                          std::size_t epoch, int network) {
  const auto& rows = ledger.selected(epoch, network);
  if (rows.empty()) return std::nullopt;
  std::size_t clean = 0;
  for (auto row : rows) clean += ds.noisy_labels.at(row) == ds.clean_labels.at(row);
  return static_cast<double>(clean) / static_cast<double>(rows.size());
}

} // namespace cnlcu

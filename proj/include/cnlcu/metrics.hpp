#pragma once

#include "cnlcu/dataset.hpp"
#include "cnlcu/mlp.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cnlcu {

/// Which examples (dataset row indices) each network selected, per epoch.
/// A row selected in several minibatches of an epoch appears once per
/// selection.
class SelectionLedger {
public:
  void add(std::size_t epoch, int network, std::span<const std::size_t> rows);

  std::size_t epochs() const { return entries_.size(); }
  const std::vector<std::size_t>& selected(std::size_t epoch, int network) const;

private:
  std::vector<std::array<std::vector<std::size_t>, 2>> entries_;
};

/// Fraction of predictions equal to the labels. Throws on empty input.
double accuracy(std::span<const int> predicted, std::span<const int> labels);

/// Accuracy of `net` on the feature rows. Throws on an empty set.
double test_accuracy(const MlpState& net, const Matrix& features, std::span<const int> labels);

/// Share of selections, over epochs [first, last) and both networks (or one
/// if `network` is 1 or 2), whose noisy label is a minority class. Throws if
/// the slice holds no selections.
double selected_ratio(const SelectionLedger& ledger, std::span<const int> minority,
                      std::span<const int> noisy_labels, std::size_t first,
                      std::size_t last, int network = 0);

/// Share of one network's selections in an epoch whose noisy label equals
/// the clean label; empty when nothing was selected.
std::optional<double> selection_precision(const SelectionLedger& ledger,
                                          const NoisyDataset& ds, std::size_t epoch,
                                          int network);

} // namespace cnlcu

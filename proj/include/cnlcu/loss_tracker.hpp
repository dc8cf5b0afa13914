#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cnlcu {

/// Raised when a non-numeric loss reaches the tracker, which almost always
/// means training has diverged.
class RecordError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring of the most recent losses of one example, together
/// with which of those rounds the example was selected in.
class LossHistory {
public:
  explicit LossHistory(std::size_t capacity = 1);

  void push(double loss, bool selected);

  std::size_t capacity() const { return losses_.size(); }
  std::size_t t() const { return size_; }
  std::size_t n_t() const { return selected_count_; }

  /// Resident losses, oldest first.
  std::vector<double> window() const;
  /// Selection flags aligned with window().
  std::vector<bool> flags() const;

  /// Window and n_t as they would read after push(loss, false).
  std::vector<double> window_with(double loss) const;
  std::size_t n_t_with_pending() const;

private:
  std::size_t index(std::size_t age_from_oldest) const;

  std::vector<double> losses_;
  std::vector<char> selected_;
  std::size_t head_ = 0; // slot that receives the next push
  std::size_t size_ = 0;
  std::size_t selected_count_ = 0;
};

struct LossSnapshot {
  std::vector<double> window;
  std::size_t n_t = 0;
};

/// Loss histories for every training example under each of the two
/// co-trained networks. Networks are numbered 1 and 2.
class TrackerBank {
public:
  TrackerBank(std::size_t num_examples, std::size_t window, double loss_bound);

  /// Clamps the loss to [0, L] and appends it. Throws RecordError on NaN.
  void record(int network, std::size_t example, double loss, bool selected);

  /// Throws std::invalid_argument if the example has no recorded loss yet.
  LossSnapshot snapshot(int network, std::size_t example) const;

  /// What snapshot() would return right after record(loss, false), without
  /// changing the bank. The example may be unseen.
  LossSnapshot preview(int network, std::size_t example, double loss) const;

  const LossHistory& history(int network, std::size_t example) const;

  std::size_t window() const { return window_; }
  double loss_bound() const { return loss_bound_; }
  std::size_t size() const { return banks_[0].size(); }

  double clamp(double loss) const;

private:
  std::vector<LossHistory>& bank(int network);
  const std::vector<LossHistory>& bank(int network) const;

  std::size_t window_;
  double loss_bound_;
  std::array<std::vector<LossHistory>, 2> banks_;
};

} // namespace cnlcu

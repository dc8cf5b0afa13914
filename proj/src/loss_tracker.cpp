#include "cnlcu/loss_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cnlcu {

LossHistory::LossHistory(std::size_t capacity)
    : losses_(capacity, 0.0), selected_(capacity, 0) {
  if (capacity == 0) throw std::invalid_argument("LossHistory: capacity must be >= 1");
}

std::size_t LossHistory::index(std::size_t age_from_oldest) const {
  const std::size_t cap = losses_.size();
  return (head_ + cap - size_ + age_from_oldest) % cap;
}

void LossHistory::push(double loss, bool selected) {
  const std::size_t cap = losses_.size();
  if (size_ == cap) {
    // head_ is also the oldest slot once the ring is full.
    if (selected_[head_]) --selected_count_;
  } else {
    ++size_;
  }
  losses_[head_] = loss;
  selected_[head_] = selected ? 1 : 0;
  if (selected) ++selected_count_;
  head_ = (head_ + 1) % cap;
}

std::vector<double> LossHistory::window() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = losses_[index(i)];
  return out;
}

std::vector<bool> LossHistory::flags() const {
  std::vector<bool> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = selected_[index(i)] != 0;
  return out;
}

std::vector<double> LossHistory::window_with(double loss) const {
  const std::size_t keep = std::min(size_, losses_.size() - 1);
  std::vector<double> out;
  out.reserve(keep + 1);
  for (std::size_t i = size_ - keep; i < size_; ++i) out.push_back(losses_[index(i)]);
  out.push_back(loss);
  return out;
}

std::size_t LossHistory::n_t_with_pending() const {
  if (size_ < losses_.size()) return selected_count_;
  return selected_count_ - (selected_[head_] ? 1 : 0);
}

TrackerBank::TrackerBank(std::size_t num_examples, std::size_t window,
                         double loss_bound)
    : window_(window), loss_bound_(loss_bound) {
  if (window == 0) throw std::invalid_argument("TrackerBank: window must be >= 1");
  if (!(loss_bound > 0.0)) {
    throw std::invalid_argument("TrackerBank: loss bound must be positive");
  }
  for (auto& b : banks_) b.assign(num_examples, LossHistory(window));
}

std::vector<LossHistory>& TrackerBank::bank(int network) {
  if (network != 1 && network != 2) {
    throw std::invalid_argument("network must be 1 or 2");
  }
  return banks_[static_cast<std::size_t>(network - 1)];
}

const std::vector<LossHistory>& TrackerBank::bank(int network) const {
  if (network != 1 && network != 2) {
    throw std::invalid_argument("network must be 1 or 2");
  }
  return banks_[static_cast<std::size_t>(network - 1)];
}

double TrackerBank::clamp(double loss) const {
  return std::clamp(loss, 0.0, loss_bound_);
}

void TrackerBank::record(int network, std::size_t example, double loss,
                         bool selected) {
  if (std::isnan(loss)) {
    throw RecordError("NaN loss recorded for example " + std::to_string(example) +
                      " (network " + std::to_string(network) + ")");
  }
  bank(network).at(example).push(clamp(loss), selected);
}

const LossHistory& TrackerBank::history(int network, std::size_t example) const {
  return bank(network).at(example);
}

LossSnapshot TrackerBank::snapshot(int network, std::size_t example) const {
  const auto& h = history(network, example);
  if (h.t() == 0) {
    throw std::invalid_argument("snapshot: example " + std::to_string(example) +
                                " has no recorded loss");
  }
  return {h.window(), h.n_t()};
}

LossSnapshot TrackerBank::preview(int network, std::size_t example,
                                  double loss) const {
  if (std::isnan(loss)) {
    throw RecordError("NaN loss for example " + std::to_string(example));
  }
  const auto& h = history(network, example);
  return {h.window_with(clamp(loss)), h.n_t_with_pending()};
}

} // namespace cnlcu

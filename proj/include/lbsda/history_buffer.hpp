#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lbsda {

/// Reward history of one arm. Rewards are appended in pull order and evicted
/// oldest-first; `total_pulls` keeps counting evicted rewards. Sums over any
/// suffix of the stored rewards are answered in O(1) from a prefix-sum array.
class HistoryBuffer {
 public:
  void push(double reward) {
    values_.push_back(reward);
    prefix_.push_back(prefix_.back() + reward);
    ++total_pulls_;
    high_water_ = std::max(high_water_, size());
  }

  void evict_oldest() {
    if (empty()) throw std::logic_error("HistoryBuffer::evict_oldest on empty buffer");
    ++head_;
    if (head_ >= kCompactThreshold && head_ * 2 >= values_.size()) compact();
  }

  std::size_t size() const { return values_.size() - head_; }
  bool empty() const { return size() == 0; }
  std::size_t total_pulls() const { return total_pulls_; }
  std::size_t high_water() const { return high_water_; }

  /// i-th stored reward, 0 = oldest.
  double operator[](std::size_t i) const { return values_[head_ + i]; }

  double sum() const { return prefix_.back() - prefix_[head_]; }

  /// Sum of the `n` most recent stored rewards.
  double tail_sum(std::size_t n) const {
    assert(n <= size());
    return prefix_.back() - prefix_[prefix_.size() - 1 - n];
  }

  double mean() const { return sum() / static_cast<double>(size()); }
  double tail_mean(std::size_t n) const { return tail_sum(n) / static_cast<double>(n); }

 private:
  static constexpr std::size_t kCompactThreshold = 1024;

  void compact() {
    values_.erase(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
    prefix_.assign(1, 0.0);
    prefix_.reserve(values_.size() + 1);
    for (double v : values_) prefix_.push_back(prefix_.back() + v);
  }

  std::vector<double> values_;
  std::vector<double> prefix_{0.0};
  std::size_t head_ = 0;
  std::size_t total_pulls_ = 0;
  std::size_t high_water_ = 0;
};

}  // namespace lbsda

#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "proxycast/rng.hpp"

namespace proxycast {

// Fixed-size FIFO buffer of training tuples; sampling is uniform with
// replacement over the current contents.
template <typename T>
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int min_fill, int batch_size)
      : capacity_(capacity), min_fill_(min_fill), batch_size_(batch_size) {
    if (capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
    if (min_fill < 1) throw std::invalid_argument("min_fill must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    items_.reserve(static_cast<std::size_t>(capacity));
  }

  void push(T item) {
    if (items_.size() < static_cast<std::size_t>(capacity_)) {
      items_.push_back(std::move(item));
    } else {
      items_[head_] = std::move(item);
      head_ = (head_ + 1) % static_cast<std::size_t>(capacity_);
    }
  }

  std::size_t size() const { return items_.size(); }
  int capacity() const { return capacity_; }
  int min_fill() const { return min_fill_; }
  int batch_size() const { return batch_size_; }
  bool ready() const { return size() >= static_cast<std::size_t>(min_fill_); }

  // i = 0 is the oldest element currently held.
  const T& at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("buffer index out of range");
    return items_[(head_ + i) % items_.size()];
  }

  std::vector<T> sample(Rng& rng) const {
    if (items_.empty()) throw std::logic_error("cannot sample from an empty buffer");
    std::vector<T> batch;
    batch.reserve(static_cast<std::size_t>(batch_size_));
    for (int i = 0; i < batch_size_; ++i)
      batch.push_back(items_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(items_.size())))]);
    return batch;
  }

  void clear() {
    items_.clear();
    head_ = 0;
  }

 private:
  int capacity_;
  int min_fill_;
  int batch_size_;
  std::vector<T> items_;
  std::size_t head_ = 0;
};

}  // namespace proxycast

#pragma once

// Instrumented allocation layer. Every Array<T> registers its buffer with the
// global MemTracker under the class active at allocation time (transient,
// cache, output or untracked), so tests and the bench harness can measure
// live/peak bytes per class. Arrays are shared, immutable once published;
// mutable access asserts unique ownership.

#include <cassert>
#include <cstddef>
#include <cstring>
#include <memory>
#include <mutex>

#include "sgnn/common.hpp"

namespace sgnn {

enum class MemClass : int { untracked = 0, transient = 1, cache = 2, output = 3 };
inline constexpr int kMemClassCount = 4;

class MemTracker {
 public:
  static MemTracker& instance() {
    static MemTracker t;
    return t;
  }

  void on_alloc(MemClass c, std::size_t bytes) {
    std::lock_guard<std::mutex> lock(mu_);
    Cat& cat = cats_[static_cast<int>(c)];
    cat.live += bytes;
    cat.total += bytes;
    if (cat.live > cat.peak) cat.peak = cat.live;
    all_.live += bytes;
    all_.total += bytes;
    if (all_.live > all_.peak) all_.peak = all_.live;
  }

  void on_free(MemClass c, std::size_t bytes) {
    std::lock_guard<std::mutex> lock(mu_);
    cats_[static_cast<int>(c)].live -= bytes;
    all_.live -= bytes;
  }

  void on_reclass(MemClass from, MemClass to, std::size_t bytes) {
    std::lock_guard<std::mutex> lock(mu_);
    cats_[static_cast<int>(from)].live -= bytes;
    Cat& cat = cats_[static_cast<int>(to)];
    cat.live += bytes;
    cat.total += bytes;
    if (cat.live > cat.peak) cat.peak = cat.live;
  }

  std::size_t live(MemClass c) const {
    std::lock_guard<std::mutex> lock(mu_);
    return cats_[static_cast<int>(c)].live;
  }
  std::size_t peak(MemClass c) const {
    std::lock_guard<std::mutex> lock(mu_);
    return cats_[static_cast<int>(c)].peak;
  }
  std::size_t total(MemClass c) const {
    std::lock_guard<std::mutex> lock(mu_);
    return cats_[static_cast<int>(c)].total;
  }
  std::size_t live_all() const {
    std::lock_guard<std::mutex> lock(mu_);
    return all_.live;
  }
  std::size_t peak_all() const {
    std::lock_guard<std::mutex> lock(mu_);
    return all_.peak;
  }

  // Peaks restart from the current live level; live counts are never reset.
  void reset_peaks() {
    std::lock_guard<std::mutex> lock(mu_);
    for (Cat& c : cats_) {
      c.peak = c.live;
      c.total = 0;
    }
    all_.peak = all_.live;
    all_.total = 0;
  }

 private:
  struct Cat {
    std::size_t live = 0, peak = 0, total = 0;
  };
  mutable std::mutex mu_;
  Cat cats_[kMemClassCount];
  Cat all_;
};

inline MemClass& current_mem_class() {
  thread_local MemClass c = MemClass::untracked;
  return c;
}

// RAII switch of the allocation class for the current thread.
class ScopedMemClass {
 public:
  explicit ScopedMemClass(MemClass c) : prev_(current_mem_class()) {
    current_mem_class() = c;
  }
  ~ScopedMemClass() { current_mem_class() = prev_; }
  ScopedMemClass(const ScopedMemClass&) = delete;
  ScopedMemClass& operator=(const ScopedMemClass&) = delete;

 private:
  MemClass prev_;
};

// Shared immutable array. Copies alias the same buffer; mutable_data() is
// only legal while the buffer has a single owner (enforced with an assert),
// which covers the fill-then-publish pattern used by all kernels.
template <class T>
class Array {
 public:
  Array() = default;

  static Array allocate(std::size_t n) {
    Array a;
    a.p_ = std::shared_ptr<Payload>(new Payload(n, current_mem_class()));
    return a;
  }

  static Array zeros(std::size_t n) {
    Array a = allocate(n);
    if (n) std::memset(a.p_->data, 0, n * sizeof(T));
    return a;
  }

  template <class It>
  static Array from_range(It first, It last) {
    Array a = allocate(static_cast<std::size_t>(std::distance(first, last)));
    T* d = a.p_ ? a.p_->data : nullptr;
    for (It it = first; it != last; ++it) *d++ = static_cast<T>(*it);
    return a;
  }

  const T* data() const { return p_ ? p_->data : nullptr; }
  T* mutable_data() {
    assert(!p_ || p_.use_count() == 1);
    return p_ ? p_->data : nullptr;
  }
  std::size_t size() const { return p_ ? p_->n : 0; }
  std::size_t bytes() const { return size() * sizeof(T); }
  bool empty() const { return size() == 0; }
  const T& operator[](std::size_t i) const { return p_->data[i]; }

  void reclassify(MemClass to) {
    if (p_ && p_->cls != to) {
      MemTracker::instance().on_reclass(p_->cls, to, p_->n * sizeof(T));
      p_->cls = to;
    }
  }

  bool aliases(const Array& other) const { return p_ && p_ == other.p_; }

 private:
  struct Payload {
    T* data = nullptr;
    std::size_t n = 0;
    MemClass cls = MemClass::untracked;
    Payload(std::size_t count, MemClass c) : n(count), cls(c) {
      data = count ? new T[count] : nullptr;
      MemTracker::instance().on_alloc(cls, n * sizeof(T));
    }
    ~Payload() {
      MemTracker::instance().on_free(cls, n * sizeof(T));
      delete[] data;
    }
  };
  std::shared_ptr<Payload> p_;
};

}  // namespace sgnn

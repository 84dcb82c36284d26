#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <new>

namespace codessm::memory {

/// Bytes currently held by tracked tensor storage.
std::int64_t current_bytes();
/// High-water mark of current_bytes() since the last reset_peak().
std::int64_t peak_bytes();
/// Resets the high-water mark to the current level.
void reset_peak();

void record_alloc(std::size_t bytes);
void record_free(std::size_t bytes);

/// Allocator that reports every allocation to the process-wide counters.
/// All tensor storage and FFT scratch buffers go through it, which makes
/// peak activation memory measurable independently of the system allocator.
template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_array_new_length();
    T* p = static_cast<T*>(::operator new(n * sizeof(T)));
    record_alloc(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    record_free(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept { return true; }
};

}  // namespace codessm::memory

#pragma once

// Visited-state table for exact recurrence detection on integer state
// vectors of fixed width. States live in one flat arena; a hash index points
// into it and every hit is confirmed by full comparison.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace bqc {

inline std::uint64_t hash_state(std::span<const std::int64_t> v) noexcept {
  std::uint64_t h = 0x84222325cbf29ce4ULL ^ v.size();
  for (std::int64_t x : v) {
    std::uint64_t z = static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h ^= z ^ (z >> 31);
  }
  return h;
}

class StateTable {
 public:
  static constexpr std::size_t kDefaultMaxStates = 1'000'000;
  static constexpr std::size_t kDefaultByteCap = std::size_t{256} << 20;

  StateTable(std::size_t width, std::size_t max_states = kDefaultMaxStates, std::size_t byte_cap = kDefaultByteCap)
      : width_(width) {
    const std::size_t per_state = width * sizeof(std::int64_t) + 64;
    capacity_ = std::min(max_states, byte_cap / per_state);
  }

  std::size_t size() const noexcept { return count_; }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return count_ >= capacity_; }

  /// Returns the tag stored with an identical earlier state, or inserts
  /// `state` under `tag` and returns nullopt. Must not be called when full().
  std::optional<std::int64_t> find_or_insert(std::span<const std::int64_t> state, std::int64_t tag) {
    const std::uint64_t h = hash_state(state);
    auto [lo, hi] = index_.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      const auto slot = it->second;
      const auto* stored = arena_.data() + slot * width_;
      if (std::equal(state.begin(), state.end(), stored)) return tags_[slot];
    }
    arena_.insert(arena_.end(), state.begin(), state.end());
    tags_.push_back(tag);
    index_.emplace(h, count_);
    ++count_;
    return std::nullopt;
  }

 private:
  std::size_t width_;
  std::size_t capacity_;
  std::size_t count_ = 0;
  std::vector<std::int64_t> arena_;
  std::vector<std::int64_t> tags_;
  std::unordered_multimap<std::uint64_t, std::size_t> index_;
};

}  // namespace bqc

#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "joinmatch/core.hpp"

namespace joinmatch {

/// Engine-side store of stamped, unconsumed messages. Arrival indices are
/// appended in increasing order, so the vector stays sorted and lookups are
/// a binary search over contiguous storage.
template <class M>
class StampedBuffer {
 public:
  void push(MessageInstance<M> msg) { items_.push_back(std::move(msg)); }

  const MessageInstance<M>* find(Index idx) const {
    auto it = std::lower_bound(items_.begin(), items_.end(), idx,
                               [](const MessageInstance<M>& m, Index i) { return m.arrival_index < i; });
    if (it == items_.end() || it->arrival_index != idx) return nullptr;
    return &*it;
  }

  const M* payload(Index idx) const {
    const MessageInstance<M>* m = find(idx);
    return m ? &m->payload : nullptr;
  }

  /// Removes every message whose index is in `sorted_indices`.
  void erase(std::span<const Index> sorted_indices) {
    if (sorted_indices.empty()) return;
    std::erase_if(items_, [&](const MessageInstance<M>& m) {
      return std::binary_search(sorted_indices.begin(), sorted_indices.end(), m.arrival_index);
    });
  }

  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const MessageInstance<M>& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<MessageInstance<M>> items_;
};

}  // namespace joinmatch

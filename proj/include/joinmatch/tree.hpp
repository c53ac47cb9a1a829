#pragma once

// Per-pattern matching trees and the stateful engines built on them.
//
// A tree maps sorted arrival-index keys to the partial slot assignments that
// span exactly those messages. Partial nodes (root included) and complete
// nodes ("leaves") are kept in two contiguous vectors, each sorted by key, so
// walking either vector front to back visits keys in ascending lexicographic
// order. Complete nodes all have the same key length, which makes that order
// the fairness order for the pattern.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "joinmatch/engine.hpp"

namespace joinmatch {

enum class Verdict : std::uint8_t { Unchecked, Passed };

struct TreeNode {
  std::vector<Index> key;
  /// Assignments, `arity` entries each; kUnfilled marks an empty slot.
  std::vector<Index> slots;
  /// One per assignment; only meaningful on complete nodes.
  std::vector<Verdict> verdicts;

  std::size_t assignments(std::size_t arity) const { return arity == 0 ? 0 : slots.size() / arity; }
  std::span<const Index> assignment(std::size_t i, std::size_t arity) const {
    return std::span<const Index>(slots).subspan(i * arity, arity);
  }
  bool contains(Index idx) const { return std::binary_search(key.begin(), key.end(), idx); }
};

struct IndexVectorHash {
  std::size_t operator()(const std::vector<Index>& v) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (Index x : v) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Inclusive range of parent keys still to be extended with a message.
struct KeyRange {
  std::vector<Index> first;
  std::vector<Index> last;
};

/// A lazy ramification that stopped early; the listed parents were never
/// extended with `message`.
struct Interruption {
  Index message = 0;
  std::vector<std::size_t> fitting;
  std::vector<KeyRange> ranges;
};

class MatchingTree {
 public:
  explicit MatchingTree(std::size_t arity) : arity_(arity) {
    TreeNode root;
    root.slots.assign(arity_, kUnfilled);
    partials_.push_back(std::move(root));
  }

  std::size_t arity() const noexcept { return arity_; }
  const std::vector<TreeNode>& partials() const noexcept { return partials_; }
  const std::vector<TreeNode>& leaves() const noexcept { return leaves_; }
  const std::unordered_set<std::vector<Index>, IndexVectorHash>& failed() const noexcept { return failed_; }

  /// Nodes other than the root.
  std::size_t node_count() const noexcept { return partials_.size() - 1 + leaves_.size(); }

  std::vector<std::vector<Index>> node_keys() const {
    std::vector<std::vector<Index>> out;
    for (std::size_t i = 1; i < partials_.size(); ++i) out.push_back(partials_[i].key);
    for (const auto& l : leaves_) out.push_back(l.key);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Deterministic rendering: one line per non-root node in ascending key
  /// order, assignments in slot order. Complete assignments carry `?`
  /// (unchecked) or `+` (guard true, not yet fired).
  std::string dump() const {
    std::vector<const TreeNode*> nodes;
    for (std::size_t i = 1; i < partials_.size(); ++i) nodes.push_back(&partials_[i]);
    for (const auto& l : leaves_) nodes.push_back(&l);
    std::sort(nodes.begin(), nodes.end(), [](const TreeNode* a, const TreeNode* b) { return a->key < b->key; });
    std::ostringstream os;
    for (const TreeNode* n : nodes) {
      os << '{';
      for (std::size_t i = 0; i < n->key.size(); ++i) os << (i ? "," : "") << n->key[i];
      os << "} :";
      bool complete = n->key.size() == arity_;
      std::vector<std::vector<Index>> tuples;
      for (std::size_t a = 0; a < n->assignments(arity_); ++a) {
        auto s = n->assignment(a, arity_);
        tuples.emplace_back(s.begin(), s.end());
      }
      std::vector<std::size_t> order(tuples.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return tuples[x] < tuples[y]; });
      for (std::size_t a : order) {
        os << " [";
        for (std::size_t i = 0; i < arity_; ++i) {
          if (i) os << ',';
          if (tuples[a][i] == kUnfilled) {
            os << '_';
          } else {
            os << tuples[a][i];
          }
        }
        os << ']';
        if (complete) os << (n->verdicts[a] == Verdict::Passed ? '+' : '?');
      }
      os << '\n';
    }
    return os.str();
  }

  // -- mutation, used by the ramification routines and engines --

  /// Merges new nodes (any order) into the sorted node vectors.
  void merge(std::vector<TreeNode> new_partials, std::vector<TreeNode> new_leaves) {
    merge_into(partials_, std::move(new_partials));
    merge_into(leaves_, std::move(new_leaves));
  }

  void record_failed(std::vector<Index> slot_tuple) { failed_.insert(std::move(slot_tuple)); }

  bool is_failed(std::span<const Index> slot_tuple) const {
    return failed_.count(std::vector<Index>(slot_tuple.begin(), slot_tuple.end())) != 0;
  }

  std::vector<TreeNode>& mutable_leaves() noexcept { return leaves_; }

  /// Drops every node, assignment and failed entry touching a consumed index.
  void prune(std::span<const Index> consumed_sorted) {
    auto touches = [&](const std::vector<Index>& key) {
      for (Index c : consumed_sorted) {
        if (std::binary_search(key.begin(), key.end(), c)) return true;
      }
      return false;
    };
    // Root has an empty key and is never removed.
    std::erase_if(partials_, [&](const TreeNode& n) { return touches(n.key); });
    std::erase_if(leaves_, [&](const TreeNode& n) { return touches(n.key); });
    if (!failed_.empty()) {
      std::erase_if(failed_, [&](const std::vector<Index>& tuple) {
        for (Index x : tuple) {
          if (std::binary_search(consumed_sorted.begin(), consumed_sorted.end(), x)) return true;
        }
        return false;
      });
    }
  }

  std::vector<Interruption>& interruptions() noexcept { return interruptions_; }

 private:
  static void merge_into(std::vector<TreeNode>& dst, std::vector<TreeNode> add) {
    if (add.empty()) return;
    auto by_key = [](const TreeNode& a, const TreeNode& b) { return a.key < b.key; };
    std::sort(add.begin(), add.end(), by_key);
    std::size_t mid = dst.size();
    dst.insert(dst.end(), std::make_move_iterator(add.begin()), std::make_move_iterator(add.end()));
    std::inplace_merge(dst.begin(), dst.begin() + static_cast<std::ptrdiff_t>(mid), dst.end(), by_key);
  }

  std::size_t arity_;
  std::vector<TreeNode> partials_;
  std::vector<TreeNode> leaves_;
  std::unordered_set<std::vector<Index>, IndexVectorHash> failed_;
  std::vector<Interruption> interruptions_;
};

// ---------------------------------------------------------------------------
// Ramification

/// Children of `parent` extended with message `msg` at each unfilled fitting
/// slot. Complete children get their assignments sorted by slot tuple.
inline std::optional<TreeNode> extend_node(const TreeNode& parent, std::size_t arity, Index msg,
                                           std::span<const std::size_t> fitting) {
  TreeNode child;
  const std::size_t n = parent.assignments(arity);
  for (std::size_t a = 0; a < n; ++a) {
    auto base = parent.assignment(a, arity);
    for (std::size_t p : fitting) {
      if (base[p] != kUnfilled) continue;
      std::size_t at = child.slots.size();
      child.slots.insert(child.slots.end(), base.begin(), base.end());
      child.slots[at + p] = msg;
    }
  }
  if (child.slots.empty()) return std::nullopt;
  child.key.reserve(parent.key.size() + 1);
  auto pos = std::upper_bound(parent.key.begin(), parent.key.end(), msg);
  child.key.assign(parent.key.begin(), pos);
  child.key.push_back(msg);
  child.key.insert(child.key.end(), pos, parent.key.end());
  if (child.key.size() == arity) {
    const std::size_t m = child.slots.size() / arity;
    if (m > 1) {
      std::vector<std::vector<Index>> tuples(m);
      for (std::size_t a = 0; a < m; ++a) {
        tuples[a].assign(child.slots.begin() + static_cast<std::ptrdiff_t>(a * arity),
                         child.slots.begin() + static_cast<std::ptrdiff_t>((a + 1) * arity));
      }
      std::sort(tuples.begin(), tuples.end());
      child.slots.clear();
      for (auto& t : tuples) child.slots.insert(child.slots.end(), t.begin(), t.end());
    }
    child.verdicts.assign(m, Verdict::Unchecked);
  }
  return child;
}

/// Work produced by ramifying one contiguous run of parents. Workers write
/// only to their own log; logs are applied to the tree afterwards.
struct SliceLog {
  std::vector<TreeNode> partials;
  std::vector<TreeNode> leaves;
  std::vector<std::vector<Index>> failed;
  std::optional<std::vector<Index>> found;
  std::optional<KeyRange> unprocessed;
  bool cancelled = false;
};

using GuardEval = std::function<bool(std::span<const Index>)>;

/// Ramifies parents [begin, end) of `tree` with `msg`.
///
/// Without `eval` every parent is extended and completions stay unchecked.
/// With `eval` the walk is lazy: completions are guard-checked as they
/// appear (slot-tuple order within a child) and the walk stops after the
/// first parent that produced a guard-true completion. `keep_going` is
/// polled before each parent and each guard call; returning false cancels.
inline SliceLog ramify_slice(const MatchingTree& tree, std::size_t begin, std::size_t end, Index msg,
                             std::span<const std::size_t> fitting, const GuardEval* eval,
                             const std::function<bool()>* keep_going = nullptr) {
  SliceLog log;
  const auto& parents = tree.partials();
  const std::size_t arity = tree.arity();
  auto stop_at = [&](std::size_t next) {
    if (next < end) log.unprocessed = KeyRange{parents[next].key, parents[end - 1].key};
  };
  for (std::size_t i = begin; i < end; ++i) {
    if (keep_going && !(*keep_going)()) {
      log.cancelled = true;
      stop_at(i);
      return log;
    }
    const TreeNode& parent = parents[i];
    if (parent.contains(msg)) continue;
    std::optional<TreeNode> child = extend_node(parent, arity, msg, fitting);
    if (!child) continue;
    if (child->key.size() < arity) {
      log.partials.push_back(std::move(*child));
      continue;
    }
    if (eval == nullptr) {
      log.leaves.push_back(std::move(*child));
      continue;
    }
    // Lazy: check completions in slot-tuple order.
    TreeNode& leaf = *child;
    std::size_t a = 0;
    bool hit = false;
    bool cancelled = false;
    while (a < leaf.assignments(arity)) {
      if (keep_going && !(*keep_going)()) {
        cancelled = true;
        break;
      }
      auto tuple = leaf.assignment(a, arity);
      if ((*eval)(tuple)) {
        leaf.verdicts[a] = Verdict::Passed;
        log.found = std::vector<Index>(tuple.begin(), tuple.end());
        hit = true;
        break;
      }
      log.failed.emplace_back(tuple.begin(), tuple.end());
      leaf.slots.erase(leaf.slots.begin() + static_cast<std::ptrdiff_t>(a * arity),
                       leaf.slots.begin() + static_cast<std::ptrdiff_t>((a + 1) * arity));
      leaf.verdicts.erase(leaf.verdicts.begin() + static_cast<std::ptrdiff_t>(a));
    }
    if (!leaf.slots.empty()) log.leaves.push_back(std::move(leaf));
    if (hit || cancelled) {
      log.cancelled = cancelled;
      stop_at(i + 1);
      return log;
    }
  }
  return log;
}

inline void apply_log(MatchingTree& tree, SliceLog&& log) {
  for (auto& f : log.failed) tree.record_failed(std::move(f));
  tree.merge(std::move(log.partials), std::move(log.leaves));
}

/// Full ramification of `tree` with message `msg`. Returns the slot tuples
/// that became complete.
inline std::vector<std::vector<Index>> ramify(MatchingTree& tree, Index msg, std::span<const std::size_t> fitting) {
  SliceLog log = ramify_slice(tree, 0, tree.partials().size(), msg, fitting, nullptr);
  std::vector<std::vector<Index>> completed;
  for (const auto& leaf : log.leaves) {
    for (std::size_t a = 0; a < leaf.assignments(tree.arity()); ++a) {
      auto t = leaf.assignment(a, tree.arity());
      completed.emplace_back(t.begin(), t.end());
    }
  }
  apply_log(tree, std::move(log));
  return completed;
}

/// Lazy ramification: walks parents fairest-first and stops at the first
/// guard-true completion, which is returned. An early stop leaves the
/// remaining parents recorded as an interruption on the tree.
inline std::optional<std::vector<Index>> lazy_ramify(MatchingTree& tree, Index msg,
                                                     std::span<const std::size_t> fitting, const GuardEval& eval) {
  SliceLog log = ramify_slice(tree, 0, tree.partials().size(), msg, fitting, &eval);
  std::optional<std::vector<Index>> found = log.found;
  if (log.unprocessed) {
    Interruption irq{msg, std::vector<std::size_t>(fitting.begin(), fitting.end()), {std::move(*log.unprocessed)}};
    tree.interruptions().push_back(std::move(irq));
  }
  apply_log(tree, std::move(log));
  return found;
}

/// Finishes interrupted ramifications (without guard evaluation). Interrupts
/// whose message is gone are dropped.
template <class Alive>
void resume_interruptions(MatchingTree& tree, Alive&& alive) {
  auto pending = std::move(tree.interruptions());
  tree.interruptions().clear();
  for (auto& irq : pending) {
    if (!alive(irq.message)) continue;
    for (const KeyRange& r : irq.ranges) {
      const auto& parents = tree.partials();
      auto by_key = [](const TreeNode& n, const std::vector<Index>& k) { return n.key < k; };
      auto lo = std::lower_bound(parents.begin(), parents.end(), r.first, by_key);
      auto hi = std::upper_bound(parents.begin(), parents.end(), r.last,
                                 [](const std::vector<Index>& k, const TreeNode& n) { return k < n.key; });
      if (lo >= hi) continue;
      SliceLog log = ramify_slice(tree, static_cast<std::size_t>(lo - parents.begin()),
                                  static_cast<std::size_t>(hi - parents.begin()), irq.message, irq.fitting, nullptr);
      apply_log(tree, std::move(log));
    }
  }
}

/// Visits complete assignments fairest-first, evaluating unchecked ones once.
/// Guard-false assignments move to `failed` and leave the tree; the first
/// guard-true assignment is returned (and stays cached as passed).
inline std::optional<std::vector<Index>> traverse_fairest(MatchingTree& tree, const GuardEval& eval) {
  auto& leaves = tree.mutable_leaves();
  const std::size_t arity = tree.arity();
  std::optional<std::vector<Index>> result;
  std::size_t i = 0;
  for (; i < leaves.size() && !result; ++i) {
    TreeNode& leaf = leaves[i];
    std::size_t a = 0;
    while (a < leaf.assignments(arity)) {
      auto tuple = leaf.assignment(a, arity);
      if (leaf.verdicts[a] == Verdict::Passed || eval(tuple)) {
        leaf.verdicts[a] = Verdict::Passed;
        result = std::vector<Index>(tuple.begin(), tuple.end());
        break;
      }
      tree.record_failed(std::vector<Index>(tuple.begin(), tuple.end()));
      leaf.slots.erase(leaf.slots.begin() + static_cast<std::ptrdiff_t>(a * arity),
                       leaf.slots.begin() + static_cast<std::ptrdiff_t>((a + 1) * arity));
      leaf.verdicts.erase(leaf.verdicts.begin() + static_cast<std::ptrdiff_t>(a));
    }
  }
  std::erase_if(leaves, [](const TreeNode& n) { return n.slots.empty(); });
  return result;
}

/// Removes every node intersecting `consumed` from every tree.
inline void prune_on_fire(std::span<MatchingTree> trees, std::span<const Index> consumed_sorted) {
  for (auto& t : trees) t.prune(consumed_sorted);
}

/// Structural audit used by tests: every assignment spans exactly its node's
/// key, is injective and tag-consistent over live messages, and no failed
/// tuple is still present as a node assignment. Returns an error message or
/// an empty string.
template <class M, class T>
std::string audit_tree(const MatchingTree& tree, const JoinPattern<M, T>& pattern, const StampedBuffer<M>& buffer) {
  const std::size_t arity = tree.arity();
  std::ostringstream err;
  auto check = [&](const TreeNode& n, bool complete) {
    if (!std::is_sorted(n.key.begin(), n.key.end()) ||
        std::adjacent_find(n.key.begin(), n.key.end()) != n.key.end()) {
      err << "unsorted key; ";
    }
    if (complete != (n.key.size() == arity)) err << "node in wrong store; ";
    if (complete && n.verdicts.size() != n.assignments(arity)) err << "verdict count mismatch; ";
    for (Index k : n.key) {
      if (!buffer.find(k)) err << "dead index " << k << "; ";
    }
    for (std::size_t a = 0; a < n.assignments(arity); ++a) {
      auto t = n.assignment(a, arity);
      std::vector<Index> filled;
      for (std::size_t s = 0; s < arity; ++s) {
        if (t[s] == kUnfilled) continue;
        filled.push_back(t[s]);
        const auto* m = buffer.find(t[s]);
        if (m && m->tag != pattern.slots[s].expected_tag) err << "tag mismatch at slot " << s << "; ";
      }
      std::sort(filled.begin(), filled.end());
      if (filled != n.key) err << "assignment does not span key; ";
      if (complete && tree.is_failed(t)) err << "failed tuple still live; ";
    }
  };
  const auto& partials = tree.partials();
  if (partials.empty() || !partials.front().key.empty()) err << "missing root; ";
  for (std::size_t i = 1; i < partials.size(); ++i) check(partials[i], false);
  for (const auto& l : tree.leaves()) check(l, true);
  auto by_key = [](const TreeNode& a, const TreeNode& b) { return a.key < b.key; };
  if (!std::is_sorted(partials.begin(), partials.end(), by_key)) err << "partials unsorted; ";
  if (!std::is_sorted(tree.leaves().begin(), tree.leaves().end(), by_key)) err << "leaves unsorted; ";
  return err.str();
}

// ---------------------------------------------------------------------------
// Engines

/// Shared state of the tree-based engines: one matching tree per pattern.
template <class M, class T>
class TreeEngineBase : public Engine<M, T> {
  using Base = Engine<M, T>;

 public:
  explicit TreeEngineBase(std::vector<typename Base::Pattern> patterns) : Base(std::move(patterns)) {
    trees_.reserve(this->patterns_.size());
    for (const auto& p : this->patterns_) trees_.emplace_back(p.size);
  }

  const MatchingTree& tree(std::size_t pattern) const { return trees_.at(pattern); }
  std::span<const MatchingTree> trees() const { return trees_; }

  std::optional<CandidateMatch> select() override {
    // Right after an ingest the only open interruption belongs to the newest
    // message, and its unprocessed parents can only yield less fair
    // completions. A fire can remove the completion that stopped the walk.
    if (fired_since_resume_) resume_all();
    std::optional<CandidateMatch> best;
    for (std::size_t p = 0; p < trees_.size(); ++p) {
      if (trees_[p].leaves().empty()) continue;
      const auto& pattern = this->patterns_[p];
      GuardEval eval = [this, &pattern](std::span<const Index> t) { return this->evaluate_guard(pattern, t); };
      if (auto tuple = traverse_fairest(trees_[p], eval)) {
        CandidateMatch c = CandidateMatch::from_slots(p, std::move(*tuple));
        if (!best || c < *best) best = std::move(c);
      }
    }
    return best;
  }

 protected:
  void on_consumed(std::span<const Index> key) override {
    prune_on_fire(trees_, key);
    fired_since_resume_ = true;
  }

  /// Buffers the message if some slot of some pattern can take it.
  bool admit_by_tag(MessageInstance<M>& msg) {
    ++this->ingested_;
    if (!this->fits_any(msg.tag)) {
      ++this->discarded_;
      return false;
    }
    return true;
  }

  void resume_all() {
    fired_since_resume_ = false;
    for (auto& t : trees_) {
      if (t.interruptions().empty()) continue;
      resume_interruptions(t, [this](Index i) { return this->buffer_.find(i) != nullptr; });
    }
  }

  std::vector<MatchingTree> trees_;
  bool fired_since_resume_ = false;
};

/// Ramifies every applicable tree fully on each arrival, then traverses.
template <class M, class T>
class StatefulTreeEngine final : public TreeEngineBase<M, T> {
  using Base = TreeEngineBase<M, T>;

 public:
  using Base::Base;

  MatcherKind kind() const override { return MatcherKind::StatefulTree; }

  void ingest(MessageInstance<M> msg) override {
    if (!this->admit_by_tag(msg)) return;
    Index idx = msg.arrival_index;
    Tag tag = msg.tag;
    this->buffer_.push(std::move(msg));
    for (std::size_t p = 0; p < this->trees_.size(); ++p) {
      auto fitting = this->fitting_slots(p, tag);
      if (!fitting.empty()) ramify(this->trees_[p], idx, fitting);
    }
  }
};

/// Lazy ramification per pattern in declaration order; stops growing a tree
/// as soon as the new message completes a guard-true match.
template <class M, class T>
class WhileLazyEngine final : public TreeEngineBase<M, T> {
  using Base = TreeEngineBase<M, T>;

 public:
  using Base::Base;

  MatcherKind kind() const override { return MatcherKind::WhileLazy; }

  void ingest(MessageInstance<M> msg) override {
    this->resume_all();
    if (!this->admit_by_tag(msg)) return;
    Index idx = msg.arrival_index;
    Tag tag = msg.tag;
    this->buffer_.push(std::move(msg));
    for (std::size_t p = 0; p < this->trees_.size(); ++p) {
      auto fitting = this->fitting_slots(p, tag);
      if (fitting.empty()) continue;
      const auto& pattern = this->patterns_[p];
      GuardEval eval = [this, &pattern](std::span<const Index> t) { return this->evaluate_guard(pattern, t); };
      lazy_ramify(this->trees_[p], idx, fitting, eval);
    }
  }
};

}  // namespace joinmatch

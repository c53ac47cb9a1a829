#pragma once

// The engine-neutral matcher contract: engines own the buffered messages and
// the per-pattern state; a Matcher wraps an engine with arrival stamping and
// the mailbox loop.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "joinmatch/buffer.hpp"
#include "joinmatch/core.hpp"
#include "joinmatch/mailbox.hpp"

namespace joinmatch {

enum class MatcherKind {
  BruteForce,
  StatefulTree,
  WhileLazy,
  LazyParallel,
  FilteringParallel,
};

inline constexpr MatcherKind kAllMatchers[] = {
    MatcherKind::BruteForce, MatcherKind::StatefulTree, MatcherKind::WhileLazy,
    MatcherKind::LazyParallel, MatcherKind::FilteringParallel,
};

inline std::string_view to_string(MatcherKind k) {
  switch (k) {
    case MatcherKind::BruteForce: return "brute-force";
    case MatcherKind::StatefulTree: return "stateful-tree";
    case MatcherKind::WhileLazy: return "while-lazy";
    case MatcherKind::LazyParallel: return "lazy-parallel";
    case MatcherKind::FilteringParallel: return "filtering-parallel";
  }
  return "?";
}

inline MatcherKind parse_matcher_kind(std::string_view s) {
  for (MatcherKind k : kAllMatchers) {
    if (to_string(k) == s) return k;
  }
  throw JoinError(ErrorCode::UnknownMatcher, std::string(s));
}

struct EngineStats {
  std::uint64_t ingested = 0;
  std::uint64_t discarded = 0;
  std::uint64_t guard_evaluations = 0;
  std::uint64_t fires = 0;
  std::uint64_t cancelled_workers = 0;
};

template <class M, class T>
class Engine {
 public:
  using Pattern = JoinPattern<M, T>;

  explicit Engine(std::vector<Pattern> patterns) : patterns_(std::move(patterns)) {
    if (patterns_.empty()) throw JoinError(ErrorCode::EmptyPatternList, "matcher needs at least one pattern");
    fits_.resize(patterns_.size());
    for (std::size_t p = 0; p < patterns_.size(); ++p) {
      patterns_[p].pattern_index = p;
      for (std::size_t s = 0; s < patterns_[p].slots.size(); ++s) {
        Tag tag = patterns_[p].slots[s].expected_tag;
        auto& table = fits_[p];
        auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == tag; });
        if (it == table.end()) {
          table.push_back({tag, {s}});
        } else {
          it->second.push_back(s);
        }
      }
    }
  }

  virtual ~Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  virtual MatcherKind kind() const = 0;

  /// Routes a freshly stamped message into the engine's state.
  virtual void ingest(MessageInstance<M> msg) = 0;

  /// Fairest guard-true match over buffered messages, without consuming it.
  virtual std::optional<CandidateMatch> select() = 0;

  /// Removes the matched messages and prunes engine state. Returns the
  /// environment the RHS runs with.
  LookupEnv consume(const CandidateMatch& c) {
    const Pattern& p = patterns_.at(c.pattern_index);
    LookupEnv env = assemble_env(p, c.slot_tuple, [this](Index i) { return buffer_.payload(i); });
    buffer_.erase(c.key);
    on_consumed(c.key);
    ++fires_;
    return env;
  }

  const std::vector<Pattern>& patterns() const noexcept { return patterns_; }
  const StampedBuffer<M>& buffer() const noexcept { return buffer_; }

  EngineStats stats() const {
    EngineStats s;
    s.ingested = ingested_;
    s.discarded = discarded_;
    s.guard_evaluations = guard_evaluations_.load(std::memory_order_relaxed);
    s.fires = fires_;
    s.cancelled_workers = cancelled_workers_.load(std::memory_order_relaxed);
    return s;
  }

  /// Slot positions of pattern `p` whose expected tag is `tag`.
  std::span<const std::size_t> fitting_slots(std::size_t p, Tag tag) const {
    for (const auto& [t, slots] : fits_[p]) {
      if (t == tag) return slots;
    }
    return {};
  }

  bool fits_any(Tag tag) const {
    for (std::size_t p = 0; p < patterns_.size(); ++p) {
      if (!fitting_slots(p, tag).empty()) return true;
    }
    return false;
  }

  /// Assembles the env for a complete assignment and evaluates the guard.
  /// Safe to call concurrently.
  bool evaluate_guard(const Pattern& p, std::span<const Index> slot_tuple) const {
    guard_evaluations_.fetch_add(1, std::memory_order_relaxed);
    LookupEnv env = assemble_env(p, slot_tuple, [this](Index i) { return buffer_.payload(i); });
    return p.guard(env);
  }

 protected:
  virtual void on_consumed(std::span<const Index> key) = 0;

  std::vector<Pattern> patterns_;
  StampedBuffer<M> buffer_;
  std::uint64_t ingested_ = 0;
  std::uint64_t discarded_ = 0;
  std::uint64_t fires_ = 0;
  mutable std::atomic<std::uint64_t> guard_evaluations_{0};
  std::atomic<std::uint64_t> cancelled_workers_{0};

 private:
  std::vector<std::vector<std::pair<Tag, std::vector<std::size_t>>>> fits_;
};

// ---------------------------------------------------------------------------

/// Stateless matcher: buffers every message and, on each attempt, enumerates
/// every injective tag-consistent assignment of every pattern from scratch,
/// evaluating all guards and keeping the fairest guard-true one.
template <class M, class T>
class BruteForceEngine final : public Engine<M, T> {
  using Base = Engine<M, T>;

 public:
  using Base::Base;

  MatcherKind kind() const override { return MatcherKind::BruteForce; }

  void ingest(MessageInstance<M> msg) override {
    ++this->ingested_;
    this->buffer_.push(std::move(msg));
  }

  std::optional<CandidateMatch> select() override {
    std::optional<CandidateMatch> best;
    const auto& buf = this->buffer_;
    for (std::size_t p = 0; p < this->patterns_.size(); ++p) {
      const auto& pattern = this->patterns_[p];
      const std::size_t k = pattern.size;
      if (buf.size() < k) continue;

      // Per-slot candidate positions, filtered by tag.
      candidates_.resize(k);
      bool feasible = true;
      for (std::size_t s = 0; s < k; ++s) {
        auto& c = candidates_[s];
        c.clear();
        Tag want = pattern.slots[s].expected_tag;
        for (std::size_t i = 0; i < buf.size(); ++i) {
          if (buf[i].tag == want) c.push_back(i);
        }
        if (c.empty()) {
          feasible = false;
          break;
        }
      }
      if (!feasible) continue;

      // Odometer over the candidate lists, skipping non-injective choices.
      cursor_.assign(k, 0);
      tuple_.assign(k, 0);
      std::size_t s = 0;
      while (true) {
        if (cursor_[s] == candidates_[s].size()) {
          if (s == 0) break;
          cursor_[s] = 0;
          --s;
          ++cursor_[s];
          continue;
        }
        std::size_t pos = candidates_[s][cursor_[s]];
        bool used = false;
        for (std::size_t q = 0; q < s; ++q) {
          if (candidates_[q][cursor_[q]] == pos) {
            used = true;
            break;
          }
        }
        if (used) {
          ++cursor_[s];
          continue;
        }
        tuple_[s] = buf[pos].arrival_index;
        if (s + 1 < k) {
          ++s;
          continue;
        }
        if (this->evaluate_guard(pattern, tuple_)) {
          CandidateMatch c = CandidateMatch::from_slots(p, tuple_);
          if (!best || c < *best) best = std::move(c);
        }
        ++cursor_[s];
      }
    }
    return best;
  }

 protected:
  void on_consumed(std::span<const Index>) override {}

 private:
  std::vector<std::vector<std::size_t>> candidates_;
  std::vector<std::size_t> cursor_;
  std::vector<Index> tuple_;
};

// ---------------------------------------------------------------------------

/// A fire ready to run: the chosen match plus the environment its RHS sees.
struct Fired {
  CandidateMatch match;
  LookupEnv env;
};

template <class M, class T>
class Matcher {
 public:
  explicit Matcher(std::unique_ptr<Engine<M, T>> engine, Index first_index = 0)
      : engine_(std::move(engine)), counter_(first_index) {}

  /// Stamps and routes one message without attempting a fire.
  void deliver(M payload) {
    engine_->ingest(counter_.stamp(std::move(payload)));
    ++unsettled_deliveries_;
  }

  /// Fires the fairest buffered match, if any (the drain step).
  std::optional<Fired> poll() {
    if (unsettled_deliveries_ == 0) return std::nullopt;
    std::optional<CandidateMatch> c = engine_->select();
    if (!c) {
      unsettled_deliveries_ = 0;
      return std::nullopt;
    }
    LookupEnv env = engine_->consume(*c);
    // With one delivery since the last settled state every candidate held the
    // new message, and the fire consumed it.
    if (unsettled_deliveries_ == 1) unsettled_deliveries_ = 0;
    return Fired{std::move(*c), std::move(env)};
  }

  /// Drains buffered state, then takes messages one at a time until a
  /// pattern fires; runs its RHS on the calling thread.
  RunOutcome<T> run_until_fire(Mailbox<M>& mailbox, ActorRef<M>& self) {
    for (;;) {
      if (std::optional<Fired> f = poll()) {
        const auto& pattern = engine_->patterns()[f->match.pattern_index];
        Result<T> r = pattern.rhs(f->env, self);
        if (auto* s = std::get_if<Stop<T>>(&r)) return Stop<T>{std::move(s->value)};
        return Continue{};
      }
      std::optional<M> msg = mailbox.take();
      if (!msg) return Disconnected{};
      deliver(std::move(*msg));
    }
  }

  RunOutcome<T> operator()(Mailbox<M>& mailbox, ActorRef<M>& self) { return run_until_fire(mailbox, self); }

  Engine<M, T>& engine() noexcept { return *engine_; }
  const Engine<M, T>& engine() const noexcept { return *engine_; }
  Index next_index() const noexcept { return counter_.peek(); }

 private:
  std::unique_ptr<Engine<M, T>> engine_;
  ArrivalCounter counter_;
  std::size_t unsettled_deliveries_ = 0;
};

}  // namespace joinmatch

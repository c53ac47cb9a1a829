#pragma once

// Reference semantics: stateless exhaustive enumeration over a message
// buffer, used as the differential-testing oracle. Deliberately simple and
// exponential; it shares nothing with the engines except the pattern record
// and the fairness comparator.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "joinmatch/core.hpp"
#include "joinmatch/factory.hpp"
#include "joinmatch/mailbox.hpp"

namespace joinmatch {

template <class M>
using MessageBuffer = std::map<Index, MessageInstance<M>>;

namespace detail {

template <class M, class T>
void enumerate_pattern(const MessageBuffer<M>& buffer, const JoinPattern<M, T>& pattern, std::size_t pattern_index,
                       std::vector<Index>& tuple, std::vector<CandidateMatch>& out) {
  const std::size_t slot = tuple.size();
  if (slot == pattern.slots.size()) {
    LookupEnv env = assemble_env(pattern, tuple, [&](Index i) -> const M* {
      auto it = buffer.find(i);
      return it == buffer.end() ? nullptr : &it->second.payload;
    });
    if (pattern.guard(env)) out.push_back(CandidateMatch::from_slots(pattern_index, tuple));
    return;
  }
  for (const auto& [idx, msg] : buffer) {
    if (msg.tag != pattern.slots[slot].expected_tag) continue;
    if (std::find(tuple.begin(), tuple.end(), idx) != tuple.end()) continue;
    tuple.push_back(idx);
    enumerate_pattern(buffer, pattern, pattern_index, tuple, out);
    tuple.pop_back();
  }
}

}  // namespace detail

/// Every guard-true, injective, tag-consistent complete assignment of every
/// pattern, sorted fairest first. Pattern indices are list positions.
template <class M, class T>
std::vector<CandidateMatch> enumerate_matches(const MessageBuffer<M>& buffer,
                                              std::span<const JoinPattern<M, T>> patterns) {
  std::vector<CandidateMatch> out;
  std::vector<Index> tuple;
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    tuple.clear();
    detail::enumerate_pattern(buffer, patterns[p], p, tuple, out);
  }
  std::sort(out.begin(), out.end(), [](const CandidateMatch& a, const CandidateMatch& b) {
    return compare_matches(a, b) < 0;
  });
  return out;
}

template <class M, class T>
std::optional<CandidateMatch> fairest_match(const MessageBuffer<M>& buffer,
                                            std::span<const JoinPattern<M, T>> patterns) {
  std::vector<CandidateMatch> all = enumerate_matches(buffer, patterns);
  if (all.empty()) return std::nullopt;
  return std::move(all.front());
}

namespace detail {

/// Arrival queue of a replay: the trace itself, then RHS self-sends appended
/// in stamping order after everything already stamped.
template <class M>
class ReplayQueue {
 public:
  explicit ReplayQueue(std::span<const MessageInstance<M>> trace)
      : pending_(trace.begin(), trace.end()), mailbox_(std::make_shared<Mailbox<M>>()), self_(mailbox_) {
    Index expect = pending_.empty() ? 0 : pending_.front().arrival_index;
    for (const auto& m : pending_) {
      if (m.arrival_index != expect++) {
        throw JoinError(ErrorCode::BadTrace, "trace indices must be consecutive from the first message");
      }
    }
    next_ = expect;
  }

  Index first_index() const { return pending_.empty() ? 0 : pending_.front().arrival_index; }
  ActorRef<M>& self() { return self_; }

  std::optional<MessageInstance<M>> next() {
    while (auto m = mailbox_->try_take()) {
      Tag t = tag_of(*m);
      pending_.push_back(MessageInstance<M>{t, std::move(*m), next_++});
    }
    if (pending_.empty()) return std::nullopt;
    MessageInstance<M> out = std::move(pending_.front());
    pending_.pop_front();
    return out;
  }

 private:
  std::deque<MessageInstance<M>> pending_;
  std::shared_ptr<Mailbox<M>> mailbox_;
  ActorRef<M> self_;
  Index next_ = 0;
};

}  // namespace detail

/// Oracle fire sequence: after each arrival, fire the fairest match, run its
/// RHS and consume its messages, until none remains. A Stop ends the replay.
template <class M, class T>
std::vector<FireEvent> oracle_fires(std::span<const MessageInstance<M>> trace,
                                    std::span<const JoinPattern<M, T>> patterns) {
  detail::ReplayQueue<M> queue(trace);
  MessageBuffer<M> buffer;
  std::vector<FireEvent> fires;
  while (auto msg = queue.next()) {
    Index idx = msg->arrival_index;
    buffer.emplace(idx, std::move(*msg));
    while (auto c = fairest_match(buffer, patterns)) {
      LookupEnv env = assemble_env(patterns[c->pattern_index], c->slot_tuple, [&](Index i) -> const M* {
        auto it = buffer.find(i);
        return it == buffer.end() ? nullptr : &it->second.payload;
      });
      Result<T> r = patterns[c->pattern_index].rhs(env, queue.self());
      for (Index i : c->key) buffer.erase(i);
      fires.push_back({c->pattern_index, c->key});
      if (std::holds_alternative<Stop<T>>(r)) return fires;
    }
  }
  return fires;
}

/// Replays a stamped trace through one fresh matcher, running RHS bodies
/// with a replay-local self reference. When `fairness_check` is set, every
/// fire is also compared against the oracle's fairest match over the same
/// live messages; the first mismatch is described there. `stats` receives
/// the engine counters at the end of the replay.
template <class M, class T>
std::vector<FireEvent> replay_fires(std::span<const MessageInstance<M>> trace,
                                    const std::vector<JoinPattern<M, T>>& patterns, const MatcherFactory& factory,
                                    std::string* fairness_check = nullptr, EngineStats* stats = nullptr) {
  detail::ReplayQueue<M> queue(trace);
  MatcherFactory f = factory;
  f.first_index = queue.first_index();
  Matcher<M, T> matcher = f.instantiate(patterns);
  MessageBuffer<M> live;
  std::vector<FireEvent> fires;
  while (auto msg = queue.next()) {
    if (fairness_check) live.emplace(msg->arrival_index, *msg);
    matcher.deliver(std::move(msg->payload));
    while (auto fired = matcher.poll()) {
      if (fairness_check) {
        auto want = fairest_match(live, std::span<const JoinPattern<M, T>>(patterns));
        if (fairness_check->empty() && (!want || *want != fired->match)) {
          *fairness_check = "fire #" + std::to_string(fires.size()) + " " +
                            format_fire({fired->match.pattern_index, fired->match.key}) + " is not the fairest (" +
                            (want ? format_fire({want->pattern_index, want->key}) : std::string("none")) + ")";
        }
        for (Index i : fired->match.key) live.erase(i);
      }
      fires.push_back({fired->match.pattern_index, fired->match.key});
      Result<T> r = matcher.engine().patterns()[fired->match.pattern_index].rhs(fired->env, queue.self());
      if (std::holds_alternative<Stop<T>>(r)) {
        if (stats) *stats = matcher.engine().stats();
        return fires;
      }
    }
  }
  if (stats) *stats = matcher.engine().stats();
  return fires;
}

struct ReplayReport {
  std::vector<FireEvent> oracle;
  std::vector<std::pair<MatcherKind, std::vector<FireEvent>>> engines;

  /// Names of engines whose sequence differs from the oracle's.
  std::vector<std::string> divergent() const {
    std::vector<std::string> out;
    for (const auto& [k, fires] : engines) {
      if (fires != oracle) out.emplace_back(to_string(k));
    }
    return out;
  }
};

/// Replays the trace through a fresh matcher from each factory and through
/// the oracle. Reports only; callers assert equality.
template <class M, class T>
ReplayReport differential_replay(std::span<const MessageInstance<M>> trace,
                                 const std::vector<JoinPattern<M, T>>& patterns,
                                 std::span<const MatcherFactory> factories) {
  ReplayReport r;
  r.oracle = oracle_fires(trace, std::span<const JoinPattern<M, T>>(patterns));
  for (const auto& f : factories) {
    r.engines.emplace_back(f.kind, replay_fires(trace, patterns, f));
  }
  return r;
}

}  // namespace joinmatch

#pragma once

#include <memory>
#include <vector>

#include "joinmatch/engine.hpp"
#include "joinmatch/parallel.hpp"
#include "joinmatch/tree.hpp"

namespace joinmatch {

template <class M, class T>
std::unique_ptr<Engine<M, T>> make_engine(MatcherKind kind, std::vector<JoinPattern<M, T>> patterns,
                                          ParallelOptions opts = {}) {
  switch (kind) {
    case MatcherKind::BruteForce:
      return std::make_unique<BruteForceEngine<M, T>>(std::move(patterns));
    case MatcherKind::StatefulTree:
      return std::make_unique<StatefulTreeEngine<M, T>>(std::move(patterns));
    case MatcherKind::WhileLazy:
      return std::make_unique<WhileLazyEngine<M, T>>(std::move(patterns));
    case MatcherKind::LazyParallel:
      return std::make_unique<LazyParallelEngine<M, T>>(std::move(patterns), opts);
    case MatcherKind::FilteringParallel:
      return std::make_unique<FilteringParallelEngine<M, T>>(std::move(patterns), opts);
  }
  throw JoinError(ErrorCode::UnknownMatcher, "unhandled matcher kind");
}

/// Uniform constructor for matchers: one identifier plus engine options.
/// Every instantiation yields an independent matcher with fresh state.
struct MatcherFactory {
  MatcherKind kind = MatcherKind::WhileLazy;
  ParallelOptions options{};
  Index first_index = 0;

  template <class M, class T>
  Matcher<M, T> instantiate(std::vector<JoinPattern<M, T>> patterns) const {
    return Matcher<M, T>(make_engine<M, T>(kind, std::move(patterns), options), first_index);
  }

  std::string_view name() const { return to_string(kind); }
};

inline MatcherFactory factory_for(std::string_view id, ParallelOptions opts = {}) {
  return MatcherFactory{parse_matcher_kind(id), opts, 0};
}

}  // namespace joinmatch

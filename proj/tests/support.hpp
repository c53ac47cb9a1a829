#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "joinmatch/joinmatch.hpp"

namespace testing_support {

namespace jm = joinmatch;

using Pat = jm::JoinPattern<jm::Record, jm::Unit>;
using Msg = jm::MessageInstance<jm::Record>;

inline std::vector<jm::MatcherFactory> all_factories(std::size_t workers = 2) {
  std::vector<jm::MatcherFactory> out;
  for (auto k : jm::kAllMatchers) out.push_back({k, {workers}, 0});
  return out;
}

inline jm::TreeEngineBase<jm::Record, jm::Unit>& tree_engine(jm::Matcher<jm::Record, jm::Unit>& m) {
  return dynamic_cast<jm::TreeEngineBase<jm::Record, jm::Unit>&>(m.engine());
}

/// Replaces every guard with a wrapper that counts evaluations per complete
/// assignment. Assignments are identified by the bound values, so traces
/// must give every message a distinct `v`.
class GuardCounter {
 public:
  void wrap(std::vector<Pat>& patterns) {
    for (std::size_t p = 0; p < patterns.size(); ++p) {
      auto inner = patterns[p].guard;
      std::size_t arity = patterns[p].size;
      patterns[p].guard = [this, inner, p, arity](const jm::LookupEnv& env) {
        std::vector<std::int64_t> key{static_cast<std::int64_t>(p)};
        for (std::size_t i = 0; i < arity; ++i) key.push_back(env.get<std::int64_t>("s" + std::to_string(i)));
        {
          std::lock_guard<std::mutex> lock(mutex_);
          ++calls_[key];
        }
        return inner(env);
      };
    }
  }

  /// Largest evaluation count of any single assignment.
  int max_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    int m = 0;
    for (const auto& [k, n] : calls_) m = std::max(m, n);
    return m;
  }

  std::size_t total() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t t = 0;
    for (const auto& [k, n] : calls_) t += static_cast<std::size_t>(n);
    return t;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::vector<std::int64_t>, int> calls_;
};

/// Gives message i the payload v = i so assignments are identifiable.
inline void number_payloads(jm::TraceFile& f) {
  for (std::size_t i = 0; i < f.messages.size(); ++i) f.messages[i].fields = {{"v", static_cast<std::int64_t>(i)}};
}

}  // namespace testing_support

#pragma once

// Single-pattern throughput: A && B && ... of size 1..5, optionally guarded
// by an equality chain, fed clean or noisy traffic.

#include <algorithm>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "joinmatch/bench/runner.hpp"

namespace joinmatch::bench {

template <int N>
struct Letter {
  std::int64_t v = 0;
};

/// Letters 0..4 fill pattern slots; Letter<5> fits no slot.
using SynMsg = std::variant<Letter<0>, Letter<1>, Letter<2>, Letter<3>, Letter<4>, Letter<5>>;
inline constexpr std::size_t kMaxSyntheticSize = 5;

enum class Workload { Clean, NoiseTag, NoisePayload };

inline const char* to_string(Workload w) {
  switch (w) {
    case Workload::Clean: return "clean";
    case Workload::NoiseTag: return "noise-tag";
    case Workload::NoisePayload: return "noise-payload";
  }
  return "?";
}

inline Workload parse_workload(const std::string& s) {
  for (Workload w : {Workload::Clean, Workload::NoiseTag, Workload::NoisePayload}) {
    if (s == to_string(w)) return w;
  }
  throw std::invalid_argument("unknown workload " + s);
}

struct SyntheticOptions {
  std::size_t size = 3;
  Workload workload = Workload::Clean;
  bool guarded = false;
  std::size_t matches = 10;
  std::size_t noise = 0;  // noise messages per matchable group
  std::uint64_t seed = 1;
};

namespace detail {

template <std::size_t... Is>
SynMsg make_letter(std::size_t i, std::int64_t v, std::index_sequence<Is...>) {
  SynMsg out;
  ((i == Is ? (out = Letter<static_cast<int>(Is)>{v}, 0) : 0), ...);
  return out;
}

template <std::size_t... Is>
SlotDescriptor<SynMsg> letter_slot(std::size_t i, std::index_sequence<Is...>) {
  SlotDescriptor<SynMsg> out;
  ((i == Is ? (out = slot<Letter<static_cast<int>(Is)>, SynMsg>({"x" + std::to_string(Is)},
                                                                 &Letter<static_cast<int>(Is)>::v),
               0)
            : 0),
   ...);
  return out;
}

}  // namespace detail

inline SynMsg letter(std::size_t i, std::int64_t v) {
  return detail::make_letter(i, v, std::make_index_sequence<kMaxSyntheticSize + 1>{});
}

/// Groups of `size` clean messages with payload = group number, each group
/// shuffled together with its noise under the seed. Noise-tag messages use
/// the unmatched letter; noise-payload messages use pattern letters with
/// distinct negative payloads, so no equality chain can hold over them.
inline std::vector<SynMsg> gen_synthetic_traffic(const SyntheticOptions& o) {
  if (o.size < 1 || o.size > kMaxSyntheticSize) throw std::invalid_argument("pattern size must be 1..5");
  std::mt19937_64 rng(o.seed);
  std::vector<SynMsg> out;
  std::int64_t next_bad = -1;
  for (std::size_t g = 0; g < o.matches; ++g) {
    std::vector<SynMsg> window;
    for (std::size_t i = 0; i < o.size; ++i) window.push_back(letter(i, static_cast<std::int64_t>(g)));
    if (o.workload != Workload::Clean) {
      for (std::size_t n = 0; n < o.noise; ++n) {
        if (o.workload == Workload::NoiseTag) {
          window.push_back(letter(kMaxSyntheticSize, static_cast<std::int64_t>(g)));
        } else {
          window.push_back(letter(std::uniform_int_distribution<std::size_t>(0, o.size - 1)(rng), next_bad--));
        }
      }
    }
    std::shuffle(window.begin(), window.end(), rng);
    out.insert(out.end(), window.begin(), window.end());
  }
  return out;
}

/// The single benchmark pattern. Its RHS counts fires and stops with the
/// count after `stop_after` fires (never when 0).
inline std::vector<JoinPattern<SynMsg, std::uint64_t>> synthetic_patterns(std::size_t size, bool guarded,
                                                                          std::uint64_t stop_after) {
  std::vector<SlotDescriptor<SynMsg>> slots;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < size; ++i) {
    slots.push_back(detail::letter_slot(i, std::make_index_sequence<kMaxSyntheticSize>{}));
    names.push_back("x" + std::to_string(i));
  }
  JoinPattern<SynMsg, std::uint64_t>::Guard guard;
  if (guarded) {
    guard = [names](const LookupEnv& env) {
      std::int64_t first = env.get<std::int64_t>(names[0]);
      for (std::size_t i = 1; i < names.size(); ++i) {
        if (env.get<std::int64_t>(names[i]) != first) return false;
      }
      return true;
    };
  }
  auto count = std::make_shared<std::uint64_t>(0);
  auto rhs = [count, stop_after](const LookupEnv&, ActorRef<SynMsg>&) -> Result<std::uint64_t> {
    if (++*count == stop_after) return stop(*count);
    return Continue{};
  };
  std::vector<JoinPattern<SynMsg, std::uint64_t>> out;
  out.push_back(build_pattern<SynMsg, std::uint64_t>(std::move(slots), guard, rhs));
  return out;
}

inline std::string synthetic_name(const SyntheticOptions& o) {
  return std::string("synthetic-") + (o.guarded ? "guarded-" : "") + to_string(o.workload);
}

inline BenchReport run_synthetic(BenchConfig cfg, const SyntheticOptions& o) {
  cfg.benchmark = synthetic_name(o);
  cfg.parameter = static_cast<std::int64_t>(o.size);
  auto msgs = gen_synthetic_traffic(o);
  auto factory = cfg.factory();
  BenchReport r = repeat(cfg, [&] {
    return time_join_actor(synthetic_patterns(o.size, o.guarded, o.matches), factory, msgs, cfg.timeout_s);
  });
  r.metadata["noise_interleaving"] = "uniform shuffle within each matchable group window";
  r.metadata["synthetic_noise_per_group"] = std::to_string(o.noise);
  return r;
}

}  // namespace joinmatch::bench

#pragma once

// Configuration and the warmup/timed repetition loop shared by every
// benchmark.

#include <chrono>
#include <functional>
#include <future>
#include <string>

#include "joinmatch/actor.hpp"
#include "joinmatch/bench/report.hpp"

namespace joinmatch::bench {

struct BenchConfig {
  std::string benchmark;
  std::string matcher = "while-lazy";  // engine id, or "simple-actor" for micro
  std::int64_t parameter = 0;
  std::size_t matches = 10;
  int reps = 5;
  int warmup = 5;
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0: default_workers()
  double timeout_s = 300;

  MatcherFactory factory() const { return factory_for(matcher, ParallelOptions{workers}); }
};

struct RunResult {
  double elapsed_ms = 0;
  std::uint64_t matches = 0;
  bool timed_out = false;
};

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Waits for `fut` until `t0 + timeout_s`. Empty on timeout.
template <class T>
std::optional<T> await_until(std::future<T>& fut, Clock::time_point t0, double timeout_s) {
  auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  if (fut.wait_until(deadline) != std::future_status::ready) return std::nullopt;
  return fut.get();
}

/// Runs `cfg.warmup` untimed repetitions and then `cfg.reps` recorded ones.
/// Stops early after the first timeout.
inline BenchReport repeat(const BenchConfig& cfg, const std::function<RunResult()>& run_once) {
  BenchReport report;
  for (int w = 0; w < cfg.warmup; ++w) {
    if (run_once().timed_out) break;
  }
  for (int rep = 0; rep < cfg.reps; ++rep) {
    RunResult r = run_once();
    report.rows.push_back({cfg.benchmark, cfg.matcher, cfg.parameter, rep, r.elapsed_ms, r.matches,
                           r.timed_out ? 0.0 : throughput(r.matches, r.elapsed_ms), r.timed_out});
    if (r.timed_out) break;
  }
  return report;
}

/// Stamps `msgs` 0, 1, ... for replay outside an actor.
template <class M>
std::vector<MessageInstance<M>> stamp_all(const std::vector<M>& msgs) {
  ArrivalCounter counter;
  std::vector<MessageInstance<M>> out;
  for (const auto& m : msgs) out.push_back(counter.stamp(m));
  return out;
}

/// Spawns a join actor, sends `msgs` from the calling thread with the clock
/// started at the first send, and waits for its Stop value (the fire count).
template <class M>
RunResult time_join_actor(std::vector<JoinPattern<M, std::uint64_t>> patterns, const MatcherFactory& factory,
                          const std::vector<M>& msgs, double timeout_s) {
  auto s = spawn_actor(std::move(patterns), factory);
  auto t0 = Clock::now();
  for (const auto& m : msgs) s.ref.send(m);
  std::optional<std::uint64_t> fires = await_until(s.result, t0, timeout_s);
  RunResult r;
  r.elapsed_ms = ms_since(t0);
  if (!fires) {
    r.timed_out = true;
    s.actor->shutdown();
    return r;
  }
  r.matches = *fires;
  return r;
}

}  // namespace joinmatch::bench

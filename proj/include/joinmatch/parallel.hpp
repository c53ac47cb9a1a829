#pragma once

// Parallel lazy ramification over fairness-ordered partitions, and the
// filtering variant that drops messages failing a slot's filtering clause
// before they reach any tree.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "joinmatch/tree.hpp"

namespace joinmatch {

/// Worker count from `JOINMATCH_WORKERS`, else the hardware thread count.
inline std::size_t default_workers() {
  if (const char* env = std::getenv("JOINMATCH_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Fixed set of threads that run one batch of ranked tasks at a time.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers) {
    if (workers == 0) workers = 1;
    threads_.reserve(workers);
    for (std::size_t r = 0; r < workers; ++r) {
      threads_.emplace_back([this, r] { loop(r); });
    }
  }

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      shutdown_ = true;
    }
    start_.notify_all();
    for (auto& t : threads_) t.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return threads_.size(); }

  /// Runs task(r) on worker r for r < tasks and waits for all of them. The
  /// first exception thrown by a task is rethrown here.
  void run(std::size_t tasks, const std::function<void(std::size_t)>& task) {
    tasks = std::min(tasks, threads_.size());
    if (tasks == 0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    task_ = &task;
    tasks_ = tasks;
    remaining_ = tasks;
    error_ = nullptr;
    ++generation_;
    start_.notify_all();
    done_.wait(lock, [this] { return remaining_ == 0; });
    task_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void loop(std::size_t rank) {
    std::uint64_t seen = 0;
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
      start_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
      if (shutdown_) return;
      seen = generation_;
      if (rank >= tasks_) continue;
      const auto* task = task_;
      lock.unlock();
      std::exception_ptr err;
      try {
        (*task)(rank);
      } catch (...) {
        err = std::current_exception();
      }
      lock.lock();
      if (err && !error_) error_ = err;
      if (--remaining_ == 0) done_.notify_one();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::size_t tasks_ = 0;
  std::size_t remaining_ = 0;
  std::uint64_t generation_ = 0;
  bool shutdown_ = false;
  std::exception_ptr error_;
};

struct Partition {
  std::size_t rank = 0;
  std::size_t begin = 0;  // into tree.partials()
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

/// Splits the tree's parents into at most `n` contiguous, near-equal slices
/// in ascending key order; rank 0 is the fairest.
inline std::vector<Partition> partition_nodes(const MatchingTree& tree, std::size_t n) {
  const std::size_t parents = tree.partials().size();
  std::vector<Partition> out;
  if (n == 0 || parents == 0) return out;
  const std::size_t count = std::min(n, parents);
  const std::size_t base = parents / count;
  const std::size_t extra = parents % count;
  std::size_t at = 0;
  for (std::size_t r = 0; r < count; ++r) {
    std::size_t len = base + (r < extra ? 1 : 0);
    out.push_back({r, at, at + len});
    at += len;
  }
  return out;
}

/// Shared per-round flag: the lowest rank that has reported a match.
class CancellationToken {
 public:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  void report(std::size_t rank) {
    std::size_t cur = winner_.load(std::memory_order_relaxed);
    while (rank < cur && !winner_.compare_exchange_weak(cur, rank, std::memory_order_acq_rel)) {
    }
  }

  /// True when a fairer rank than `rank` has already reported.
  bool cancelled_for(std::size_t rank) const { return winner_.load(std::memory_order_acquire) < rank; }

  std::size_t winner() const { return winner_.load(std::memory_order_acquire); }

 private:
  std::atomic<std::size_t> winner_{kNone};
};

/// Per-pattern admit decisions: a pattern admits `msg` when at least one slot
/// the message could fill has no filter or a filter that holds.
template <class M, class T>
std::vector<bool> admit_message(const MessageInstance<M>& msg, std::span<const JoinPattern<M, T>> patterns) {
  std::vector<bool> out(patterns.size(), false);
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    for (const auto& s : patterns[p].slots) {
      if (s.expected_tag != msg.tag) continue;
      if (!s.has_filter() || s.filter(msg.payload)) {
        out[p] = true;
        break;
      }
    }
  }
  return out;
}

struct ParallelOptions {
  std::size_t workers = 0;  // 0: default_workers()
};

/// Lazy ramification with each tree's parents split across worker threads.
/// A worker that finds a guard-true completion cancels the less fair ranks;
/// the fairest report wins. Worker logs are merged on the calling thread.
template <class M, class T>
class LazyParallelEngine : public TreeEngineBase<M, T> {
  using Base = TreeEngineBase<M, T>;

 public:
  explicit LazyParallelEngine(std::vector<typename Base::Pattern> patterns, ParallelOptions opts = {})
      : Base(std::move(patterns)), pool_(opts.workers == 0 ? default_workers() : opts.workers) {}

  MatcherKind kind() const override { return MatcherKind::LazyParallel; }

  std::size_t workers() const noexcept { return pool_.size(); }

  void ingest(MessageInstance<M> msg) override {
    this->resume_all();
    ++this->ingested_;
    std::vector<bool> admit = admit_for(msg);
    if (std::none_of(admit.begin(), admit.end(), [](bool b) { return b; })) {
      ++this->discarded_;
      return;
    }
    Index idx = msg.arrival_index;
    Tag tag = msg.tag;
    this->buffer_.push(std::move(msg));
    parallel_round(idx, tag, admit);
  }

  /// Filter evaluations performed so far (filtering engine only).
  std::uint64_t filter_evaluations() const noexcept { return filter_evaluations_; }

 protected:
  virtual std::vector<bool> admit_for(const MessageInstance<M>& msg) {
    std::vector<bool> out(this->patterns_.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = !this->fitting_slots(p, msg.tag).empty();
    return out;
  }

  std::uint64_t filter_evaluations_ = 0;

 private:
  struct PatternRound {
    std::size_t pattern;
    std::span<const std::size_t> fitting;
    std::vector<Partition> parts;
    std::vector<SliceLog> logs;
    CancellationToken token;
    GuardEval eval;
  };

  void parallel_round(Index idx, Tag tag, const std::vector<bool>& admit) {
    std::vector<std::unique_ptr<PatternRound>> rounds;
    std::size_t width = 0;
    for (std::size_t p = 0; p < this->trees_.size(); ++p) {
      if (!admit[p]) continue;
      auto fitting = this->fitting_slots(p, tag);
      if (fitting.empty()) continue;
      auto r = std::make_unique<PatternRound>();
      r->pattern = p;
      r->fitting = fitting;
      r->parts = partition_nodes(this->trees_[p], pool_.size());
      r->logs.resize(r->parts.size());
      const auto& pattern = this->patterns_[p];
      r->eval = [this, &pattern](std::span<const Index> t) { return this->evaluate_guard(pattern, t); };
      width = std::max(width, r->parts.size());
      rounds.push_back(std::move(r));
    }
    if (rounds.empty()) return;

    std::function<void(std::size_t)> task = [&](std::size_t rank) {
      for (auto& r : rounds) {
        if (rank >= r->parts.size()) continue;
        const Partition& part = r->parts[rank];
        CancellationToken& token = r->token;
        std::function<bool()> keep_going = [&token, rank] { return !token.cancelled_for(rank); };
        SliceLog log = ramify_slice(this->trees_[r->pattern], part.begin, part.end, idx, r->fitting, &r->eval,
                                    &keep_going);
        if (log.found) token.report(rank);
        if (log.cancelled) this->cancelled_workers_.fetch_add(1, std::memory_order_relaxed);
        r->logs[rank] = std::move(log);
      }
    };
    pool_.run(width, task);

    for (auto& r : rounds) {
      MatchingTree& tree = this->trees_[r->pattern];
      Interruption irq{idx, std::vector<std::size_t>(r->fitting.begin(), r->fitting.end()), {}};
      for (auto& log : r->logs) {
        if (log.unprocessed) irq.ranges.push_back(std::move(*log.unprocessed));
        apply_log(tree, std::move(log));
      }
      if (!irq.ranges.empty()) tree.interruptions().push_back(std::move(irq));
    }
  }

  WorkerPool pool_;
};

/// LazyParallelEngine plus per-slot filtering clauses: a message rejected by
/// every slot it could fill is never ramified into that pattern's tree, and
/// is dropped entirely when no pattern admits it.
template <class M, class T>
class FilteringParallelEngine final : public LazyParallelEngine<M, T> {
  using Base = LazyParallelEngine<M, T>;

 public:
  using Base::Base;

  MatcherKind kind() const override { return MatcherKind::FilteringParallel; }

 protected:
  std::vector<bool> admit_for(const MessageInstance<M>& msg) override {
    std::vector<bool> out(this->patterns_.size(), false);
    for (std::size_t p = 0; p < out.size(); ++p) {
      for (std::size_t s : this->fitting_slots(p, msg.tag)) {
        const auto& slot = this->patterns_[p].slots[s];
        if (!slot.has_filter()) {
          out[p] = true;
          break;
        }
        ++this->filter_evaluations_;
        if (slot.filter(msg.payload)) {
          out[p] = true;
          break;
        }
      }
    }
    return out;
  }
};

}  // namespace joinmatch

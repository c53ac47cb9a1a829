#pragma once

// Bounded buffer as a join actor over Free/Item tokens, driven by
// single-message producer and consumer actors.
//
//   Produce(item, producer) && Free   -> self ! Item(item), producer ! SpaceAck
//   Consume(consumer)       && Item   -> consumer ! Delivered(item), self ! Free
//   Terminate                         -> stop

#include <algorithm>
#include <atomic>
#include <memory>
#include <variant>
#include <vector>

#include "joinmatch/bench/runner.hpp"

namespace joinmatch::bench {

struct SpaceAck {};
struct Delivered {
  std::int64_t item = 0;
};

struct Produce {
  std::int64_t item = 0;
  ActorRef<SpaceAck> producer;
};
struct Free {};
struct Item {
  std::int64_t item = 0;
};
struct Consume {
  ActorRef<Delivered> consumer;
};
struct Terminate {};

using BufferMsg = std::variant<Produce, Free, Item, Consume, Terminate>;

/// What the buffer actor observed over one run.
struct BufferStats {
  std::uint64_t fires = 0;
  std::int64_t items_now = 0;
  std::int64_t max_items = 0;
  std::uint64_t produced = 0;
  std::uint64_t delivered = 0;
};

inline std::vector<JoinPattern<BufferMsg, BufferStats>> bounded_buffer_patterns() {
  using M = BufferMsg;
  using P = JoinPattern<M, BufferStats>;
  auto st = std::make_shared<BufferStats>();
  std::vector<P> out;
  out.push_back(build_pattern<M, BufferStats>(
      {slot<Produce, M>({"item", "producer"}, &Produce::item, &Produce::producer), slot<Free, M>()}, nullptr,
      [st](const LookupEnv& env, ActorRef<M>& self) -> Result<BufferStats> {
        ++st->fires;
        ++st->produced;
        st->max_items = std::max(st->max_items, ++st->items_now);
        self.send(Item{env.get<std::int64_t>("item")});
        env.get<ActorRef<SpaceAck>>("producer").send(SpaceAck{});
        return Continue{};
      }));
  out.push_back(build_pattern<M, BufferStats>(
      {slot<Consume, M>({"consumer"}, &Consume::consumer), slot<Item, M>({"item"}, &Item::item)}, nullptr,
      [st](const LookupEnv& env, ActorRef<M>& self) -> Result<BufferStats> {
        ++st->fires;
        ++st->delivered;
        --st->items_now;
        env.get<ActorRef<Delivered>>("consumer").send(Delivered{env.get<std::int64_t>("item")});
        self.send(Free{});
        return Continue{};
      }));
  out.push_back(build_pattern<M, BufferStats>(
      {slot<Terminate, M>()}, nullptr,
      [st](const LookupEnv&, ActorRef<M>&) -> Result<BufferStats> { return stop(*st); }));
  return out;
}

struct BoundedBufferOptions {
  std::size_t buffer_size = 1000;
  std::size_t producers = 10;
  std::size_t consumers = 10;
  std::size_t items = 100;  // per producer
};

struct BoundedBufferRun {
  RunResult timing;
  BufferStats buffer;
  std::uint64_t sent_by_producers = 0;
  std::uint64_t received_by_consumers = 0;
  std::vector<std::int64_t> received_order;  // concatenated per consumer

  /// Items never exceeded capacity and every produced item was delivered.
  bool safe(std::size_t buffer_size) const {
    return buffer.max_items <= static_cast<std::int64_t>(buffer_size) && buffer.produced == buffer.delivered &&
           sent_by_producers == received_by_consumers && buffer.delivered == received_by_consumers;
  }
};

/// One repetition: the buffer is seeded with `buffer_size` Free tokens,
/// producers send one Produce per SpaceAck, consumers one Consume per
/// Delivered; Terminate follows the last delivery. The clock starts at the
/// first producer/consumer kick-off.
inline BoundedBufferRun run_bounded_buffer_once(const BoundedBufferOptions& o, const MatcherFactory& factory,
                                                double timeout_s) {
  BoundedBufferRun run;
  auto buffer = spawn_actor(bounded_buffer_patterns(), factory);
  for (std::size_t i = 0; i < o.buffer_size; ++i) buffer.ref.send(Free{});

  const std::uint64_t total = o.producers * o.items;
  std::vector<std::unique_ptr<SimpleActor<SpaceAck, std::uint64_t>>> producers;
  std::vector<std::future<std::uint64_t>> produced;
  std::vector<ActorRef<SpaceAck>> producer_refs;
  for (std::size_t p = 0; p < o.producers; ++p) {
    auto sent = std::make_shared<std::uint64_t>(0);
    auto buf = buffer.ref;
    auto next_item = static_cast<std::int64_t>(p * o.items);
    producers.push_back(std::make_unique<SimpleActor<SpaceAck, std::uint64_t>>(
        [sent, buf, next_item, items = o.items](const SpaceAck&,
                                                ActorRef<SpaceAck>& self) -> std::optional<Result<std::uint64_t>> {
          if (*sent == items) return stop(*sent);
          buf.send(Produce{next_item + static_cast<std::int64_t>((*sent)++), self});
          return Result<std::uint64_t>{Continue{}};
        }));
    auto [fut, ref] = producers.back()->start();
    produced.push_back(std::move(fut));
    producer_refs.push_back(ref);
  }

  // Consumer quotas split the total as evenly as possible.
  std::vector<std::unique_ptr<SimpleActor<Delivered, std::vector<std::int64_t>>>> consumers;
  std::vector<std::future<std::vector<std::int64_t>>> received;
  std::vector<ActorRef<Delivered>> consumer_refs;
  std::vector<std::uint64_t> quotas(o.consumers, total / o.consumers);
  for (std::size_t c = 0; c < total % o.consumers; ++c) ++quotas[c];
  for (std::size_t c = 0; c < o.consumers; ++c) {
    auto got = std::make_shared<std::vector<std::int64_t>>();
    auto buf = buffer.ref;
    consumers.push_back(std::make_unique<SimpleActor<Delivered, std::vector<std::int64_t>>>(
        [got, buf, quota = quotas[c]](const Delivered& d, ActorRef<Delivered>& self)
            -> std::optional<Result<std::vector<std::int64_t>>> {
          if (d.item >= 0) got->push_back(d.item);
          if (got->size() == quota) return stop(*got);
          buf.send(Consume{self});
          return Result<std::vector<std::int64_t>>{Continue{}};
        }));
    auto [fut, ref] = consumers.back()->start();
    received.push_back(std::move(fut));
    consumer_refs.push_back(ref);
  }

  auto t0 = Clock::now();
  // A SpaceAck kicks off each producer; a Delivered(-1) kicks off each consumer.
  for (auto& r : producer_refs) r.send(SpaceAck{});
  for (std::size_t c = 0; c < o.consumers; ++c) {
    if (quotas[c] > 0) consumer_refs[c].send(Delivered{-1});
  }
  bool ok = true;
  for (std::size_t c = 0; c < o.consumers && ok; ++c) {
    if (quotas[c] == 0) continue;
    auto items = await_until(received[c], t0, timeout_s);
    if (!items) {
      ok = false;
      break;
    }
    run.received_by_consumers += items->size();
    run.received_order.insert(run.received_order.end(), items->begin(), items->end());
  }
  if (ok) {
    for (auto& f : produced) {
      auto n = await_until(f, t0, timeout_s);
      if (!n) {
        ok = false;
        break;
      }
      run.sent_by_producers += *n;
    }
  }
  if (ok) {
    buffer.ref.send(Terminate{});
    auto st = await_until(buffer.result, t0, timeout_s);
    if (st) {
      run.buffer = *st;
    } else {
      ok = false;
    }
  }
  run.timing.elapsed_ms = ms_since(t0);
  run.timing.matches = run.buffer.fires;
  run.timing.timed_out = !ok;
  if (!ok) {
    buffer.actor->shutdown();
    for (auto& p : producers) p->shutdown();
    for (auto& c : consumers) c->shutdown();
  }
  return run;
}

struct BoundedBufferResult {
  BenchReport report;
  bool safe = true;
};

/// Parameter column: producer (= consumer) count.
inline BoundedBufferResult run_bounded_buffer(BenchConfig cfg, const BoundedBufferOptions& o) {
  cfg.benchmark = "bounded-buffer";
  cfg.parameter = static_cast<std::int64_t>(o.producers);
  auto factory = cfg.factory();
  BoundedBufferResult out;
  out.report = repeat(cfg, [&] {
    BoundedBufferRun r = run_bounded_buffer_once(o, factory, cfg.timeout_s);
    if (!r.timing.timed_out && !r.safe(o.buffer_size)) out.safe = false;
    return r.timing;
  });
  out.report.metadata["bounded_buffer"] = std::to_string(o.buffer_size) + "/" + std::to_string(o.producers) + "/" +
                                          std::to_string(o.consumers) + " items/producer " +
                                          std::to_string(o.items);
  return out;
}

}  // namespace joinmatch::bench

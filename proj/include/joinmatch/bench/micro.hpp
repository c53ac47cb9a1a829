#pragma once

// Ping-pong and chameneos, each run either on single-message actors or on
// join actors whose patterns are all unary.

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "joinmatch/bench/runner.hpp"

namespace joinmatch::bench {

inline constexpr const char* kSimpleActorMode = "simple-actor";

template <class M, class T>
using Handler = std::function<std::optional<Result<T>>(const M&, ActorRef<M>&)>;

/// One unary pattern per alternative of the variant `M`, in alternative
/// order, each handing the whole message to `handler`.
template <class M, class T>
std::vector<JoinPattern<M, T>> unary_patterns(Handler<M, T> handler) {
  std::vector<JoinPattern<M, T>> out;
  auto add = [&]<class A>(std::type_identity<A>) {
    out.push_back(build_pattern<M, T>(
        {slot<A, M>({"msg"}, [](const A& a) { return a; })}, nullptr,
        [handler](const LookupEnv& env, ActorRef<M>& self) -> Result<T> {
          std::optional<Result<T>> r = handler(M{env.get<A>("msg")}, self);
          return r ? std::move(*r) : Result<T>{Continue{}};
        }));
  };
  [&]<class... As>(std::type_identity<std::variant<As...>>) {
    (add(std::type_identity<As>{}), ...);
  }(std::type_identity<M>{});
  return out;
}

/// An actor of either kind behind one interface.
template <class M, class T>
struct AnyActor {
  std::unique_ptr<SimpleActor<M, T>> simple;
  std::unique_ptr<Actor<M, T>> join;
  std::future<T> result;
  ActorRef<M> ref;

  void shutdown() {
    if (simple) simple->shutdown();
    if (join) join->shutdown();
  }
};

/// `mode` is "simple-actor" or a matcher id.
template <class M, class T>
AnyActor<M, T> start_actor(const std::string& mode, Handler<M, T> handler, ParallelOptions opts) {
  AnyActor<M, T> a;
  if (mode == kSimpleActorMode) {
    a.simple = std::make_unique<SimpleActor<M, T>>(std::move(handler));
    std::tie(a.result, a.ref) = a.simple->start();
  } else {
    a.join = std::make_unique<Actor<M, T>>(unary_patterns<M, T>(std::move(handler)), factory_for(mode, opts));
    std::tie(a.result, a.ref) = a.join->start();
  }
  return a;
}

// -- ping-pong ---------------------------------------------------------------

struct Ball;
using PingMsg = std::variant<Ball>;

struct Ball {
  std::int64_t remaining = 0;  // -1 tells the receiver to stop
  ActorRef<PingMsg> reply_to;
};

/// Counts balls handled; the one that receives `remaining == 0` stops its
/// peer and itself.
inline Handler<PingMsg, std::uint64_t> ping_pong_handler() {
  auto handled = std::make_shared<std::uint64_t>(0);
  return [handled](const PingMsg& m, ActorRef<PingMsg>& self) -> std::optional<Result<std::uint64_t>> {
    const Ball& b = std::get<Ball>(m);
    if (b.remaining < 0) return stop(*handled);
    ++*handled;
    if (b.remaining == 0) {
      b.reply_to.send(Ball{-1, self});
      return stop(*handled);
    }
    b.reply_to.send(Ball{b.remaining - 1, self});
    return Result<std::uint64_t>{Continue{}};
  };
}

struct MicroRun {
  RunResult timing;
  std::uint64_t exchanges = 0;  // ping-pong: balls handled; chameneos: meetings
  bool consistent = true;
};

/// `n` round trips: 2n + 1 balls change hands, counted as the matches.
inline MicroRun run_ping_pong_once(const std::string& mode, std::uint64_t n, ParallelOptions opts,
                                   double timeout_s) {
  auto ping = start_actor<PingMsg, std::uint64_t>(mode, ping_pong_handler(), opts);
  auto pong = start_actor<PingMsg, std::uint64_t>(mode, ping_pong_handler(), opts);
  MicroRun run;
  auto t0 = Clock::now();
  ping.ref.send(Ball{static_cast<std::int64_t>(2 * n), pong.ref});
  auto a = await_until(ping.result, t0, timeout_s);
  auto b = a ? await_until(pong.result, t0, timeout_s) : std::nullopt;
  run.timing.elapsed_ms = ms_since(t0);
  if (!a || !b) {
    run.timing.timed_out = true;
    ping.shutdown();
    pong.shutdown();
    return run;
  }
  run.exchanges = *a + *b;
  run.timing.matches = run.exchanges;
  run.consistent = run.exchanges == 2 * n + 1;
  return run;
}

// -- chameneos ---------------------------------------------------------------

enum class Colour : int { Blue = 0, Red = 1, Yellow = 2 };

inline Colour complement(Colour a, Colour b) {
  if (a == b) return a;
  return static_cast<Colour>(3 - static_cast<int>(a) - static_cast<int>(b));
}

struct Paired {
  Colour colour;
};
struct Faded {};
using CreatureMsg = std::variant<Paired, Faded>;

struct MeetRequest {
  Colour colour;
  ActorRef<CreatureMsg> who;
};
using BrokerMsg = std::variant<MeetRequest>;

/// Pairs requests two at a time until `n` meetings, then answers Faded to
/// every creature and stops with the meeting count.
inline Handler<BrokerMsg, std::uint64_t> broker_handler(std::uint64_t n, std::size_t creatures) {
  struct State {
    std::optional<MeetRequest> waiting;
    std::uint64_t meetings = 0;
    std::size_t faded = 0;
  };
  auto st = std::make_shared<State>();
  return [st, n, creatures](const BrokerMsg& m, ActorRef<BrokerMsg>&) -> std::optional<Result<std::uint64_t>> {
    const MeetRequest& req = std::get<MeetRequest>(m);
    if (st->meetings >= n) {
      req.who.send(Faded{});
      if (++st->faded == creatures) return stop(st->meetings);
      return Result<std::uint64_t>{Continue{}};
    }
    if (!st->waiting) {
      st->waiting = req;
      return Result<std::uint64_t>{Continue{}};
    }
    Colour c = complement(st->waiting->colour, req.colour);
    st->waiting->who.send(Paired{c});
    req.who.send(Paired{c});
    st->waiting.reset();
    ++st->meetings;
    return Result<std::uint64_t>{Continue{}};
  };
}

inline Handler<CreatureMsg, std::uint64_t> creature_handler(Colour start, ActorRef<BrokerMsg> broker) {
  auto colour = std::make_shared<Colour>(start);
  auto met = std::make_shared<std::uint64_t>(0);
  return [colour, met, broker](const CreatureMsg& m,
                               ActorRef<CreatureMsg>& self) -> std::optional<Result<std::uint64_t>> {
    if (std::holds_alternative<Faded>(m)) return stop(*met);
    ++*met;
    *colour = std::get<Paired>(m).colour;
    broker.send(MeetRequest{*colour, self});
    return Result<std::uint64_t>{Continue{}};
  };
}

/// Meetings are the matches. Consistent when the broker counted `n` and the
/// creatures together took part in 2n.
inline MicroRun run_chameneos_once(const std::string& mode, std::uint64_t n, std::size_t creatures,
                                   ParallelOptions opts, double timeout_s) {
  auto broker = start_actor<BrokerMsg, std::uint64_t>(mode, broker_handler(n, creatures), opts);
  std::vector<AnyActor<CreatureMsg, std::uint64_t>> cs;
  for (std::size_t i = 0; i < creatures; ++i) {
    cs.push_back(start_actor<CreatureMsg, std::uint64_t>(
        mode, creature_handler(static_cast<Colour>(i % 3), broker.ref), opts));
  }
  MicroRun run;
  auto t0 = Clock::now();
  for (std::size_t i = 0; i < creatures; ++i) broker.ref.send(MeetRequest{static_cast<Colour>(i % 3), cs[i].ref});
  auto meetings = await_until(broker.result, t0, timeout_s);
  std::uint64_t took_part = 0;
  bool ok = meetings.has_value();
  for (auto& c : cs) {
    if (!ok) break;
    auto k = await_until(c.result, t0, timeout_s);
    if (!k) ok = false;
    else took_part += *k;
  }
  run.timing.elapsed_ms = ms_since(t0);
  if (!ok) {
    run.timing.timed_out = true;
    broker.shutdown();
    for (auto& c : cs) c.shutdown();
    return run;
  }
  run.exchanges = *meetings;
  run.timing.matches = *meetings;
  run.consistent = *meetings == n && took_part == 2 * n;
  return run;
}

struct MicroOptions {
  std::string benchmark = "ping-pong";  // or "chameneos"
  std::uint64_t n = 10000;
  std::size_t creatures = 4;
};

struct MicroResult {
  BenchReport report;
  bool consistent = true;
};

/// `cfg.matcher` is the mode: "simple-actor" or an engine id. Parameter
/// column: n.
inline MicroResult run_micro(BenchConfig cfg, const MicroOptions& o) {
  if (o.benchmark != "ping-pong" && o.benchmark != "chameneos") {
    throw std::invalid_argument("unknown micro benchmark " + o.benchmark);
  }
  if (cfg.matcher != kSimpleActorMode) parse_matcher_kind(cfg.matcher);
  cfg.benchmark = o.benchmark;
  cfg.parameter = static_cast<std::int64_t>(o.n);
  MicroResult out;
  ParallelOptions opts{cfg.workers};
  out.report = repeat(cfg, [&] {
    MicroRun r = o.benchmark == "ping-pong" ? run_ping_pong_once(cfg.matcher, o.n, opts, cfg.timeout_s)
                                            : run_chameneos_once(cfg.matcher, o.n, o.creatures, opts, cfg.timeout_s);
    if (!r.timing.timed_out && !r.consistent) out.consistent = false;
    return r.timing;
  });
  return out;
}

}  // namespace joinmatch::bench

#pragma once

// Actors: one thread per actor, one mailbox, and either a join-pattern
// matcher or a single-message handler deciding what each message does.

#include <exception>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "joinmatch/factory.hpp"
#include "joinmatch/mailbox.hpp"

namespace joinmatch {

/// Raised through the result future when the mailbox closes before a Stop.
class ActorDisconnected : public std::runtime_error {
 public:
  ActorDisconnected() : std::runtime_error("actor mailbox closed before the actor stopped") {}
};

namespace detail {

/// Shared thread/mailbox lifecycle of both actor kinds.
template <class M, class T>
class ActorCore {
 public:
  ActorCore() : mailbox_(std::make_shared<Mailbox<M>>()), self_(mailbox_) {}

  ~ActorCore() { shutdown(); }

  ActorCore(const ActorCore&) = delete;
  ActorCore& operator=(const ActorCore&) = delete;

  ActorRef<M> ref() const { return self_; }

  /// Closes the mailbox and waits for the actor thread.
  void shutdown() {
    mailbox_->close();
    if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  }

 protected:
  std::pair<std::future<T>, ActorRef<M>> launch(std::function<std::optional<T>()> body) {
    std::promise<T> promise;
    std::future<T> fut = promise.get_future();
    thread_ = std::thread([body = std::move(body), promise = std::move(promise)]() mutable {
      try {
        std::optional<T> v = body();
        if (v) {
          promise.set_value(std::move(*v));
        } else {
          promise.set_exception(std::make_exception_ptr(ActorDisconnected{}));
        }
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    });
    return {std::move(fut), self_};
  }

  std::shared_ptr<Mailbox<M>> mailbox_;
  ActorRef<M> self_;
  std::thread thread_;
};

}  // namespace detail

/// Join-pattern actor: the matcher decides which messages fire which RHS.
/// The result future resolves with the value of the first `Stop`.
template <class M, class T>
class Actor : public detail::ActorCore<M, T> {
 public:
  Actor(std::vector<JoinPattern<M, T>> patterns, MatcherFactory factory)
      : matcher_(factory.instantiate(std::move(patterns))) {}

  ~Actor() { this->shutdown(); }

  std::pair<std::future<T>, ActorRef<M>> start() {
    return this->launch([this]() -> std::optional<T> {
      for (;;) {
        RunOutcome<T> out = matcher_.run_until_fire(*this->mailbox_, this->self_);
        if (auto* s = std::get_if<Stop<T>>(&out)) return std::move(s->value);
        if (std::holds_alternative<Disconnected>(out)) return std::nullopt;
      }
    });
  }

  /// Valid once the result future is ready.
  const Matcher<M, T>& matcher() const noexcept { return matcher_; }

 private:
  Matcher<M, T> matcher_;
};

/// One step of a single-message actor: take one message and hand it to the
/// handler. An unmatched message (handler returns nothing) is dropped.
template <class M, class T>
RunOutcome<T> simple_actor_step(const std::function<std::optional<Result<T>>(const M&, ActorRef<M>&)>& handler,
                                Mailbox<M>& mailbox, ActorRef<M>& self) {
  std::optional<M> msg = mailbox.take();
  if (!msg) return Disconnected{};
  std::optional<Result<T>> r = handler(*msg, self);
  if (!r) return Continue{};
  if (auto* s = std::get_if<Stop<T>>(&*r)) return Stop<T>{std::move(s->value)};
  return Continue{};
}

/// Single-message actor: each message is handed to the handler in arrival
/// order; a handler returning nothing leaves the message unmatched, and it
/// is dropped.
template <class M, class T>
class SimpleActor : public detail::ActorCore<M, T> {
 public:
  using Handler = std::function<std::optional<Result<T>>(const M&, ActorRef<M>&)>;

  explicit SimpleActor(Handler handler) : handler_(std::move(handler)) {}

  ~SimpleActor() { this->shutdown(); }

  std::pair<std::future<T>, ActorRef<M>> start() {
    return this->launch([this]() -> std::optional<T> {
      for (;;) {
        RunOutcome<T> out = simple_actor_step<M, T>(handler_, *this->mailbox_, this->self_);
        if (auto* s = std::get_if<Stop<T>>(&out)) return std::move(s->value);
        if (std::holds_alternative<Disconnected>(out)) return std::nullopt;
      }
    });
  }

 private:
  Handler handler_;
};

template <class M, class T>
struct Spawned {
  std::unique_ptr<Actor<M, T>> actor;  // owns the thread; destroying it stops the actor
  std::future<T> result;
  ActorRef<M> ref;
};

/// Builds and starts a join-pattern actor.
template <class M, class T>
Spawned<M, T> spawn_actor(std::vector<JoinPattern<M, T>> patterns, MatcherFactory factory) {
  Spawned<M, T> s;
  s.actor = std::make_unique<Actor<M, T>>(std::move(patterns), factory);
  auto [fut, ref] = s.actor->start();
  s.result = std::move(fut);
  s.ref = std::move(ref);
  return s;
}

}  // namespace joinmatch

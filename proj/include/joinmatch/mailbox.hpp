#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

namespace joinmatch {

/// Unbounded many-producer / single-consumer FIFO. `take` blocks until a
/// message is available or the mailbox is closed and drained.
template <class M>
class Mailbox {
 public:
  /// Returns false (and drops the message) once the mailbox is closed.
  bool put(M msg) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (closed_) return false;
      queue_.push_back(std::move(msg));
    }
    ready_.notify_one();
    return true;
  }

  std::optional<M> take() {
    std::unique_lock<std::mutex> lock(mutex_);
    ready_.wait(lock, [this] { return !queue_.empty() || closed_; });
    if (queue_.empty()) return std::nullopt;
    M msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

  std::optional<M> try_take() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (queue_.empty()) return std::nullopt;
    M msg = std::move(queue_.front());
    queue_.pop_front();
    return msg;
  }

  /// Pending messages are discarded; blocked takers wake with nothing.
  void close() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      closed_ = true;
      queue_.clear();
    }
    ready_.notify_all();
  }

  bool closed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return closed_;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return queue_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<M> queue_;
  bool closed_ = false;
};

/// Send endpoint of one mailbox. Cheap to copy and safe to share.
template <class M>
class ActorRef {
 public:
  ActorRef() = default;
  explicit ActorRef(std::shared_ptr<Mailbox<M>> mailbox) : mailbox_(std::move(mailbox)) {}

  /// Never blocks; messages sent to a stopped actor are dropped.
  void send(M msg) const {
    if (mailbox_) mailbox_->put(std::move(msg));
  }

  Mailbox<M>* mailbox() const { return mailbox_.get(); }
  explicit operator bool() const { return static_cast<bool>(mailbox_); }
  bool operator==(const ActorRef& o) const { return mailbox_ == o.mailbox_; }

 private:
  std::shared_ptr<Mailbox<M>> mailbox_;
};

}  // namespace joinmatch

#pragma once

// Messages, arrival stamping, join-pattern records and the fairness order
// shared by every matcher.

#include <algorithm>
#include <any>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace joinmatch {

using Index = std::uint64_t;
using Tag = std::uint32_t;

inline constexpr Index kUnfilled = ~Index{0};

enum class ErrorCode {
  DuplicateBinding,
  InvalidFilter,
  EmptyPattern,
  EmptyPatternList,
  MissingMessage,
  MissingBinding,
  BadBindingType,
  UnknownMatcher,
  BadTrace,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateBinding: return "DuplicateBinding";
    case ErrorCode::InvalidFilter: return "InvalidFilter";
    case ErrorCode::EmptyPattern: return "EmptyPattern";
    case ErrorCode::EmptyPatternList: return "EmptyPatternList";
    case ErrorCode::MissingMessage: return "MissingMessage";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::BadBindingType: return "BadBindingType";
    case ErrorCode::UnknownMatcher: return "UnknownMatcher";
    case ErrorCode::BadTrace: return "BadTrace";
  }
  return "Unknown";
}

class JoinError : public std::runtime_error {
 public:
  JoinError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Message tags

/// Customization point: maps a message value to its type tag.
template <class M, class = void>
struct message_traits {
  static Tag tag(const M& m) { return static_cast<Tag>(m.tag); }
};

template <class... Ts>
struct message_traits<std::variant<Ts...>> {
  static Tag tag(const std::variant<Ts...>& m) { return static_cast<Tag>(m.index()); }
};

template <class M>
Tag tag_of(const M& m) {
  return message_traits<M>::tag(m);
}

namespace detail {

template <class T, class V>
struct variant_index;

template <class T, class... Ts>
struct variant_index<T, std::variant<Ts...>> {
  static constexpr std::size_t value = [] {
    constexpr bool hits[] = {std::is_same_v<T, Ts>...};
    std::size_t found = sizeof...(Ts);
    for (std::size_t i = 0; i < sizeof...(Ts); ++i) {
      if (hits[i]) {
        if (found != sizeof...(Ts)) return sizeof...(Ts) + 1;  // ambiguous
        found = i;
      }
    }
    return found;
  }();
  static_assert(value < sizeof...(Ts), "type is not an alternative of the message variant");
};

}  // namespace detail

/// Tag of alternative `T` inside the variant message type `M`.
template <class T, class M>
constexpr Tag tag_for() {
  return static_cast<Tag>(detail::variant_index<T, M>::value);
}

// ---------------------------------------------------------------------------
// Arrival stamping

template <class M>
struct MessageInstance {
  Tag tag;
  M payload;
  Index arrival_index;
};

/// Monotone arrival counter owned by one matcher.
class ArrivalCounter {
 public:
  explicit ArrivalCounter(Index start = 0) : next_(start) {}

  template <class M>
  MessageInstance<M> stamp(M payload) {
    Tag t = tag_of(payload);
    return MessageInstance<M>{t, std::move(payload), next_++};
  }

  Index peek() const noexcept { return next_; }

 private:
  Index next_;
};

// ---------------------------------------------------------------------------
// Binding environments

/// Binding-name to value map assembled from the slots of one match. Names are
/// views into the owning pattern's slot descriptors.
class LookupEnv {
 public:
  void bind(std::string_view name, std::any value) {
    entries_.emplace_back(name, std::move(value));
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const std::any& at(std::string_view name) const {
    if (const std::any* v = find(name)) return *v;
    throw JoinError(ErrorCode::MissingBinding, std::string(name));
  }

  template <class V>
  const V& get(std::string_view name) const {
    const V* v = std::any_cast<V>(&at(name));
    if (v == nullptr) throw JoinError(ErrorCode::BadBindingType, std::string(name));
    return *v;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  void reserve(std::size_t n) { entries_.reserve(n); }

 private:
  const std::any* find(std::string_view name) const {
    for (const auto& [k, v] : entries_) {
      if (k == name) return &v;
    }
    return nullptr;
  }

  std::vector<std::pair<std::string_view, std::any>> entries_;
};

using Binding = std::pair<std::string, std::any>;

// ---------------------------------------------------------------------------
// Results

struct Continue {
  bool operator==(const Continue&) const = default;
};

template <class T>
struct Stop {
  T value;
};

/// Outcome of one RHS execution.
template <class T>
using Result = std::variant<Continue, Stop<T>>;

/// Returned by run_until_fire when the mailbox was closed before a fire.
struct Disconnected {};

template <class T>
using RunOutcome = std::variant<Continue, Stop<T>, Disconnected>;

using Unit = std::monostate;

template <class T>
Result<T> stop(T value) {
  return Stop<T>{std::move(value)};
}

// ---------------------------------------------------------------------------
// Patterns

template <class M>
struct SlotDescriptor {
  Tag expected_tag = 0;
  std::vector<std::string> names;
  /// Appends one value per entry of `names`, in order.
  std::function<void(const M&, std::vector<std::any>&)> extract;
  /// Optional single-message filtering clause.
  std::function<bool(const M&)> filter;

  bool has_filter() const { return static_cast<bool>(filter); }
};

template <class M>
class ActorRef;

template <class M, class T>
struct JoinPattern {
  using Guard = std::function<bool(const LookupEnv&)>;
  using Rhs = std::function<Result<T>(const LookupEnv&, ActorRef<M>&)>;

  std::size_t pattern_index = 0;
  std::vector<SlotDescriptor<M>> slots;
  std::size_t size = 0;
  Guard guard;
  Rhs rhs;

  bool has_filters() const {
    return std::any_of(slots.begin(), slots.end(),
                       [](const SlotDescriptor<M>& s) { return s.has_filter(); });
  }
};

/// Rejects filters on slots whose tag is not unique within the pattern.
template <class M, class T>
void validate_filter(const JoinPattern<M, T>& pattern) {
  for (std::size_t i = 0; i < pattern.slots.size(); ++i) {
    const auto& s = pattern.slots[i];
    if (!s.has_filter()) continue;
    auto same = std::count_if(pattern.slots.begin(), pattern.slots.end(),
                              [&](const SlotDescriptor<M>& o) { return o.expected_tag == s.expected_tag; });
    if (same != 1) {
      throw JoinError(ErrorCode::InvalidFilter,
                      "slot " + std::to_string(i) + " filters a message tag that occurs " +
                          std::to_string(same) + " times in the pattern");
    }
  }
}

/// Assembles a JoinPattern record. The pattern index is assigned when a
/// matcher is instantiated over a pattern list.
template <class M, class T>
JoinPattern<M, T> build_pattern(std::vector<SlotDescriptor<M>> slots,
                                typename JoinPattern<M, T>::Guard guard,
                                typename JoinPattern<M, T>::Rhs rhs) {
  if (slots.empty()) throw JoinError(ErrorCode::EmptyPattern, "a join pattern needs at least one slot");
  std::vector<std::string_view> seen;
  for (const auto& s : slots) {
    for (const auto& n : s.names) {
      if (std::find(seen.begin(), seen.end(), n) != seen.end()) {
        throw JoinError(ErrorCode::DuplicateBinding, n);
      }
      seen.push_back(n);
    }
  }
  JoinPattern<M, T> p;
  p.size = slots.size();
  p.slots = std::move(slots);
  p.guard = guard ? std::move(guard) : [](const LookupEnv&) { return true; };
  p.rhs = rhs ? std::move(rhs) : [](const LookupEnv&, ActorRef<M>&) -> Result<T> { return Continue{}; };
  validate_filter(p);
  return p;
}

// Slot construction helpers. `slot<T, M>()` binds nothing; with member
// pointers each member is bound under the corresponding name; with a callable
// the callable returns a value or a std::tuple of values.

namespace detail {

template <class X>
struct is_tuple : std::false_type {};
template <class... Xs>
struct is_tuple<std::tuple<Xs...>> : std::true_type {};

template <class Tuple>
void append_tuple(Tuple&& t, std::vector<std::any>& out) {
  std::apply([&](auto&&... xs) { (out.emplace_back(std::forward<decltype(xs)>(xs)), ...); },
             std::forward<Tuple>(t));
}

template <class T, class M>
const T& alternative(const M& m) {
  if constexpr (std::is_same_v<T, M>) {
    return m;
  } else {
    return *std::get_if<T>(&m);
  }
}

}  // namespace detail

template <class T, class M>
SlotDescriptor<M> slot_with_tag(Tag tag, std::vector<std::string> names,
                                std::function<void(const M&, std::vector<std::any>&)> extract) {
  SlotDescriptor<M> s;
  s.expected_tag = tag;
  s.names = std::move(names);
  s.extract = std::move(extract);
  return s;
}

template <class T, class M>
SlotDescriptor<M> slot() {
  return slot_with_tag<T, M>(tag_for<T, M>(), {}, [](const M&, std::vector<std::any>&) {});
}

template <class T, class M, class F>
SlotDescriptor<M> slot(std::vector<std::string> names, F fn) {
  auto extract = [fn = std::move(fn)](const M& m, std::vector<std::any>& out) {
    const T& v = detail::alternative<T>(m);
    if constexpr (std::is_member_object_pointer_v<F>) {
      out.emplace_back(v.*fn);
    } else {
      auto r = fn(v);
      if constexpr (detail::is_tuple<decltype(r)>::value) {
        detail::append_tuple(std::move(r), out);
      } else {
        out.emplace_back(std::move(r));
      }
    }
  };
  return slot_with_tag<T, M>(tag_for<T, M>(), std::move(names), std::move(extract));
}

template <class T, class M, class F1, class F2, class... Fs>
SlotDescriptor<M> slot(std::vector<std::string> names, F1 m1, F2 m2, Fs... rest) {
  static_assert(std::is_member_object_pointer_v<F1> && std::is_member_object_pointer_v<F2>,
                "multi-argument slot() takes data member pointers");
  auto extract = [=](const M& m, std::vector<std::any>& out) {
    const T& v = detail::alternative<T>(m);
    out.emplace_back(v.*m1);
    out.emplace_back(v.*m2);
    (out.emplace_back(v.*rest), ...);
  };
  return slot_with_tag<T, M>(tag_for<T, M>(), std::move(names), std::move(extract));
}

/// Attaches a filtering clause over the slot's typed message.
template <class T, class M, class P>
SlotDescriptor<M> filtered(SlotDescriptor<M> s, P pred) {
  s.filter = [pred = std::move(pred)](const M& m) { return pred(detail::alternative<T>(m)); };
  return s;
}

/// The slot's bindings for `msg`, or nothing when the tag differs.
template <class M, class I>
std::optional<std::vector<Binding>> slot_fits(const SlotDescriptor<M>& slot, const I& msg) {
  if (msg.tag != slot.expected_tag) return std::nullopt;
  std::vector<std::any> values;
  values.reserve(slot.names.size());
  slot.extract(msg.payload, values);
  std::vector<Binding> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size() && i < slot.names.size(); ++i) {
    out.emplace_back(slot.names[i], std::move(values[i]));
  }
  return out;
}

/// Builds the environment for a complete assignment. `lookup(index)` returns
/// a pointer to the buffered payload or nullptr.
template <class M, class T, class Lookup>
LookupEnv assemble_env(const JoinPattern<M, T>& pattern, std::span<const Index> slot_tuple, Lookup&& lookup) {
  LookupEnv env;
  std::vector<std::any> values;
  for (std::size_t i = 0; i < pattern.slots.size(); ++i) {
    const auto& s = pattern.slots[i];
    Index idx = i < slot_tuple.size() ? slot_tuple[i] : kUnfilled;
    const M* payload = idx == kUnfilled ? nullptr : lookup(idx);
    if (payload == nullptr) {
      throw JoinError(ErrorCode::MissingMessage, "slot " + std::to_string(i) + " index " +
                                                     (idx == kUnfilled ? std::string("unfilled") : std::to_string(idx)));
    }
    values.clear();
    s.extract(*payload, values);
    for (std::size_t j = 0; j < values.size() && j < s.names.size(); ++j) {
      env.bind(s.names[j], std::move(values[j]));
    }
  }
  return env;
}

// ---------------------------------------------------------------------------
// Candidate matches and the fairness order

struct CandidateMatch {
  // Declaration order is the comparison order: key, then pattern, then slots.
  std::vector<Index> key;
  std::size_t pattern_index = 0;
  std::vector<Index> slot_tuple;

  static CandidateMatch from_slots(std::size_t pattern, std::vector<Index> slots) {
    CandidateMatch c;
    c.pattern_index = pattern;
    c.key = slots;
    std::sort(c.key.begin(), c.key.end());
    c.slot_tuple = std::move(slots);
    return c;
  }

  auto operator<=>(const CandidateMatch&) const = default;
  bool operator==(const CandidateMatch&) const = default;
};

/// less = fairer.
inline std::strong_ordering compare_matches(const CandidateMatch& a, const CandidateMatch& b) {
  return a <=> b;
}

/// One fire as recorded by replays: pattern plus consumed key.
struct FireEvent {
  std::size_t pattern_index = 0;
  std::vector<Index> key;

  bool operator==(const FireEvent&) const = default;
};

inline std::string format_fire(const FireEvent& f) {
  std::string s = "fire " + std::to_string(f.pattern_index) + " [";
  for (std::size_t i = 0; i < f.key.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(f.key[i]);
  }
  s += ']';
  return s;
}

}  // namespace joinmatch

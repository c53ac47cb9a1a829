#pragma once

// Text traces for differential testing: a small record message type, a
// pattern syntax with pure guard clauses, a reader/writer, and a seeded
// generator of random cases.
//
//   pattern A B C if s0 == s1 && s2 % 2 == 1
//   arrive A v=3
//
// Slot i of a pattern binds "s<i>" to the message's `v` field (0 if absent).

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "joinmatch/core.hpp"

namespace joinmatch {

struct Record {
  Tag tag = 0;
  std::vector<std::pair<std::string, std::int64_t>> fields;

  std::int64_t field(std::string_view name, std::int64_t fallback = 0) const {
    for (const auto& [k, v] : fields) {
      if (k == name) return v;
    }
    return fallback;
  }

  bool operator==(const Record&) const = default;
};

class TagTable {
 public:
  Tag intern(std::string_view name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<Tag>(i);
    }
    names_.emplace_back(name);
    return static_cast<Tag>(names_.size() - 1);
  }

  const std::string& name(Tag t) const { return names_.at(t); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

inline const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

inline bool eval_op(CmpOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

/// One conjunct of a trace guard.
struct Clause {
  enum class Kind { True, False, SlotSlot, SlotConst, ModConst };
  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  std::size_t lhs = 0;
  std::size_t rhs_slot = 0;
  std::int64_t constant = 0;
  std::int64_t modulus = 1;

  bool unary() const { return kind == Kind::SlotConst || kind == Kind::ModConst; }

  bool holds(std::span<const std::int64_t> v) const {
    switch (kind) {
      case Kind::True: return true;
      case Kind::False: return false;
      case Kind::SlotSlot: return eval_op(op, v[lhs], v[rhs_slot]);
      case Kind::SlotConst: return eval_op(op, v[lhs], constant);
      case Kind::ModConst: return eval_op(op, ((v[lhs] % modulus) + modulus) % modulus, constant);
    }
    return false;
  }

  std::string text() const {
    auto s = [](std::size_t i) { return "s" + std::to_string(i); };
    switch (kind) {
      case Kind::True: return "true";
      case Kind::False: return "false";
      case Kind::SlotSlot: return s(lhs) + " " + to_string(op) + " " + s(rhs_slot);
      case Kind::SlotConst: return s(lhs) + " " + to_string(op) + " " + std::to_string(constant);
      case Kind::ModConst:
        return s(lhs) + " % " + std::to_string(modulus) + " " + to_string(op) + " " + std::to_string(constant);
    }
    return "";
  }
};

struct PatternSpec {
  std::vector<Tag> tags;
  std::vector<Clause> clauses;
};

struct TraceFile {
  TagTable tags;
  std::vector<PatternSpec> patterns;
  std::vector<Record> messages;

  /// Messages stamped start, start+1, ... in file order.
  std::vector<MessageInstance<Record>> stamped(Index start = 0) const {
    std::vector<MessageInstance<Record>> out;
    ArrivalCounter counter(start);
    for (const auto& m : messages) out.push_back(counter.stamp(m));
    return out;
  }
};

namespace detail {

inline CmpOp parse_op(const std::string& tok, std::size_t line) {
  static const std::pair<const char*, CmpOp> ops[] = {
      {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<", CmpOp::Lt}, {"<=", CmpOp::Le}, {">", CmpOp::Gt}, {">=", CmpOp::Ge},
  };
  for (const auto& [s, op] : ops) {
    if (tok == s) return op;
  }
  throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": unknown operator '" + tok + "'");
}

inline bool parse_slot_ref(const std::string& tok, std::size_t& out) {
  if (tok.size() < 2 || tok[0] != 's') return false;
  for (std::size_t i = 1; i < tok.size(); ++i) {
    if (tok[i] < '0' || tok[i] > '9') return false;
  }
  out = std::stoul(tok.substr(1));
  return true;
}

inline std::int64_t parse_int(const std::string& tok, std::size_t line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": expected integer, got '" + tok + "'");
}

inline Clause parse_clause(const std::vector<std::string>& toks, std::size_t arity, std::size_t line) {
  auto bad = [&](const std::string& why) {
    return JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": " + why);
  };
  Clause c;
  if (toks.size() == 1 && toks[0] == "true") return c;
  if (toks.size() == 1 && toks[0] == "false") {
    c.kind = Clause::Kind::False;
    return c;
  }
  if (toks.empty() || !parse_slot_ref(toks[0], c.lhs)) throw bad("clause must start with a slot reference");
  if (toks.size() == 3) {
    c.op = parse_op(toks[1], line);
    if (parse_slot_ref(toks[2], c.rhs_slot)) {
      c.kind = Clause::Kind::SlotSlot;
    } else {
      c.kind = Clause::Kind::SlotConst;
      c.constant = parse_int(toks[2], line);
    }
  } else if (toks.size() == 5 && toks[1] == "%") {
    c.kind = Clause::Kind::ModConst;
    c.modulus = parse_int(toks[2], line);
    if (c.modulus <= 0) throw bad("modulus must be positive");
    c.op = parse_op(toks[3], line);
    c.constant = parse_int(toks[4], line);
  } else {
    throw bad("malformed clause");
  }
  if (c.lhs >= arity || (c.kind == Clause::Kind::SlotSlot && c.rhs_slot >= arity)) {
    throw bad("slot reference out of range");
  }
  return c;
}

}  // namespace detail

inline TraceFile parse_trace(std::istream& in) {
  TraceFile t;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream ss(raw);
    std::vector<std::string> toks;
    for (std::string w; ss >> w;) toks.push_back(w);
    if (toks.empty()) continue;
    if (toks[0] == "arrive") {
      if (toks.size() < 2) throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": missing tag");
      Record r;
      r.tag = t.tags.intern(toks[1]);
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos || eq == 0) {
          throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": expected field=value");
        }
        r.fields.emplace_back(toks[i].substr(0, eq), detail::parse_int(toks[i].substr(eq + 1), line));
      }
      t.messages.push_back(std::move(r));
    } else if (toks[0] == "pattern") {
      PatternSpec p;
      std::size_t i = 1;
      for (; i < toks.size() && toks[i] != "if"; ++i) p.tags.push_back(t.tags.intern(toks[i]));
      if (p.tags.empty()) throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": empty pattern");
      if (i < toks.size()) {
        std::vector<std::string> cur;
        for (++i; i <= toks.size(); ++i) {
          if (i == toks.size() || toks[i] == "&&") {
            p.clauses.push_back(detail::parse_clause(cur, p.tags.size(), line));
            cur.clear();
          } else {
            cur.push_back(toks[i]);
          }
        }
      }
      t.patterns.push_back(std::move(p));
    } else {
      throw JoinError(ErrorCode::BadTrace, "line " + std::to_string(line) + ": unknown directive '" + toks[0] + "'");
    }
  }
  return t;
}

inline TraceFile parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

inline void write_trace(std::ostream& out, const TraceFile& t) {
  for (const auto& p : t.patterns) {
    out << "pattern";
    for (Tag tag : p.tags) out << ' ' << t.tags.name(tag);
    for (std::size_t i = 0; i < p.clauses.size(); ++i) out << (i ? " && " : " if ") << p.clauses[i].text();
    out << '\n';
  }
  for (const auto& m : t.messages) {
    out << "arrive " << t.tags.name(m.tag);
    for (const auto& [k, v] : m.fields) out << ' ' << k << '=' << v;
    out << '\n';
  }
}

/// Builds executable patterns. Unary clauses on a slot whose tag is unique in
/// the pattern are also attached to that slot as filters when `with_filters`.
template <class T = Unit>
std::vector<JoinPattern<Record, T>> to_join_patterns(const std::vector<PatternSpec>& specs, bool with_filters = true) {
  std::vector<JoinPattern<Record, T>> out;
  for (const auto& spec : specs) {
    std::vector<SlotDescriptor<Record>> slots;
    for (std::size_t i = 0; i < spec.tags.size(); ++i) {
      slots.push_back(slot_with_tag<Record, Record>(spec.tags[i], {"s" + std::to_string(i)},
                                                    [](const Record& r, std::vector<std::any>& o) {
                                                      o.emplace_back(r.field("v"));
                                                    }));
    }
    if (with_filters) {
      for (std::size_t i = 0; i < spec.tags.size(); ++i) {
        if (std::count(spec.tags.begin(), spec.tags.end(), spec.tags[i]) != 1) continue;
        std::vector<Clause> mine;
        for (const auto& c : spec.clauses) {
          if (c.unary() && c.lhs == i) mine.push_back(c);
        }
        if (mine.empty()) continue;
        slots[i].filter = [mine, i, n = spec.tags.size()](const Record& r) {
          std::vector<std::int64_t> v(n, 0);
          v[i] = r.field("v");
          return std::all_of(mine.begin(), mine.end(), [&](const Clause& c) { return c.holds(v); });
        };
      }
    }
    auto guard = [clauses = spec.clauses, n = spec.tags.size()](const LookupEnv& env) {
      std::int64_t vals[8];
      std::vector<std::int64_t> big;
      std::span<std::int64_t> v(vals, n);
      if (n > 8) {
        big.resize(n);
        v = big;
      }
      for (std::size_t i = 0; i < n; ++i) v[i] = env.get<std::int64_t>("s" + std::to_string(i));
      return std::all_of(clauses.begin(), clauses.end(), [&](const Clause& c) { return c.holds(v); });
    };
    out.push_back(build_pattern<Record, T>(std::move(slots), guard, nullptr));
  }
  return out;
}

struct RandomTraceOptions {
  std::size_t max_messages = 30;
  std::size_t max_patterns = 3;
  std::size_t max_pattern_size = 4;
  std::size_t tag_count = 4;      // tags usable in patterns
  std::int64_t value_range = 4;   // v in [0, value_range)
  bool noise_tag = true;          // sometimes emit a tag no pattern uses
};

/// A reproducible random case: patterns with random pure guards and a
/// random message sequence.
inline TraceFile random_trace(std::uint64_t seed, const RandomTraceOptions& o = {}) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto value = [&] { return std::uniform_int_distribution<std::int64_t>(0, o.value_range - 1)(rng); };
  auto op = [&] { return static_cast<CmpOp>(pick(0, 5)); };

  TraceFile t;
  const std::string letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  for (std::size_t i = 0; i < o.tag_count && i < letters.size(); ++i) t.tags.intern(std::string(1, letters[i]));
  Tag noise = o.noise_tag ? t.tags.intern("Z") : 0;

  std::size_t np = pick(1, o.max_patterns);
  for (std::size_t p = 0; p < np; ++p) {
    PatternSpec spec;
    std::size_t k = pick(1, o.max_pattern_size);
    for (std::size_t i = 0; i < k; ++i) spec.tags.push_back(static_cast<Tag>(pick(0, o.tag_count - 1)));
    std::size_t nc = pick(0, 3);
    for (std::size_t c = 0; c < nc; ++c) {
      Clause cl;
      std::size_t roll = pick(0, 19);
      cl.lhs = pick(0, k - 1);
      if (roll == 0) {
        cl.kind = Clause::Kind::False;
      } else if (roll == 1) {
        cl.kind = Clause::Kind::True;
      } else if (roll < 9 && k > 1) {
        cl.kind = Clause::Kind::SlotSlot;
        cl.op = op();
        cl.rhs_slot = pick(0, k - 1);
      } else if (roll < 15) {
        cl.kind = Clause::Kind::SlotConst;
        cl.op = op();
        cl.constant = value();
      } else {
        cl.kind = Clause::Kind::ModConst;
        cl.modulus = static_cast<std::int64_t>(pick(2, 3));
        cl.op = op();
        cl.constant = static_cast<std::int64_t>(pick(0, static_cast<std::size_t>(cl.modulus) - 1));
      }
      spec.clauses.push_back(cl);
    }
    t.patterns.push_back(std::move(spec));
  }

  std::size_t nm = pick(1, o.max_messages);
  for (std::size_t m = 0; m < nm; ++m) {
    Record r;
    r.tag = (o.noise_tag && pick(0, 9) == 0) ? noise : static_cast<Tag>(pick(0, o.tag_count - 1));
    r.fields.emplace_back("v", value());
    t.messages.push_back(std::move(r));
  }
  return t;
}

}  // namespace joinmatch

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>
#include <variant>

#include "joinmatch/buffer.hpp"
#include "joinmatch/core.hpp"
#include "joinmatch/mailbox.hpp"

namespace jm = joinmatch;

namespace {

struct PaymentRequested {
  int id;
};
struct MerchantValidated {
  int id;
};
struct CustomerValidated {
  int id;
};
struct Shutdown {};

using Pay = std::variant<PaymentRequested, MerchantValidated, CustomerValidated, Shutdown>;

jm::JoinPattern<Pay, int> payment_pattern() {
  return jm::build_pattern<Pay, int>(
      {jm::slot<PaymentRequested, Pay>({"id1"}, &PaymentRequested::id),
       jm::slot<MerchantValidated, Pay>({"id2"}, &MerchantValidated::id),
       jm::slot<CustomerValidated, Pay>({"id3"}, &CustomerValidated::id)},
      [](const jm::LookupEnv& e) {
        return e.get<int>("id1") == e.get<int>("id2") && e.get<int>("id2") == e.get<int>("id3");
      },
      nullptr);
}

jm::CandidateMatch cm(std::vector<jm::Index> key, std::size_t p, std::vector<jm::Index> tuple) {
  jm::CandidateMatch c;
  c.key = std::move(key);
  c.pattern_index = p;
  c.slot_tuple = std::move(tuple);
  return c;
}

}  // namespace

TEST(Stamp, FirstIndexIsZero) {
  jm::ArrivalCounter c;
  EXPECT_EQ(c.stamp(Pay{Shutdown{}}).arrival_index, 0u);
}

TEST(Stamp, ConsecutiveStampsIncrement) {
  jm::ArrivalCounter c;
  std::vector<jm::Index> got;
  for (int i = 0; i < 3; ++i) got.push_back(c.stamp(Pay{PaymentRequested{i}}).arrival_index);
  EXPECT_EQ(got, (std::vector<jm::Index>{0, 1, 2}));
  EXPECT_EQ(c.peek(), 3u);
}

TEST(Stamp, StartingAtOneGivesOneBasedIndices) {
  jm::ArrivalCounter c(1);
  std::vector<jm::Index> got;
  for (Pay p : {Pay{PaymentRequested{}}, Pay{CustomerValidated{}}, Pay{MerchantValidated{}}, Pay{Shutdown{}}}) {
    got.push_back(c.stamp(p).arrival_index);
  }
  EXPECT_EQ(got, (std::vector<jm::Index>{1, 2, 3, 4}));
}

TEST(Stamp, InjectiveOverLifetime) {
  jm::ArrivalCounter c;
  std::set<jm::Index> seen;
  for (int i = 0; i < 5000; ++i) EXPECT_TRUE(seen.insert(c.stamp(Pay{Shutdown{}}).arrival_index).second);
}

TEST(Stamp, TagIsVariantAlternative) {
  jm::ArrivalCounter c;
  auto m = c.stamp(Pay{CustomerValidated{4}});
  EXPECT_EQ(m.tag, (jm::tag_for<CustomerValidated, Pay>()));
  EXPECT_EQ(m.tag, 2u);
}

// -- compare_matches --------------------------------------------------------

TEST(CompareMatches, LexicographicKey) {
  EXPECT_TRUE(jm::compare_matches(cm({1, 2, 3}, 0, {1, 2, 3}), cm({1, 2, 4}, 0, {1, 2, 4})) < 0);
}

TEST(CompareMatches, DeclarationOrderBreaksKeyTies) {
  EXPECT_TRUE(jm::compare_matches(cm({1, 2}, 0, {1, 2}), cm({1, 2}, 2, {1, 2})) < 0);
}

TEST(CompareMatches, OldestMessageWinsFirst) {
  EXPECT_TRUE(jm::compare_matches(cm({0, 9}, 1, {0, 9}), cm({1, 2}, 0, {1, 2})) < 0);
}

TEST(CompareMatches, SlotTupleIsLastTieBreak) {
  EXPECT_TRUE(jm::compare_matches(cm({1, 2}, 0, {1, 2}), cm({1, 2}, 0, {2, 1})) < 0);
  EXPECT_TRUE(jm::compare_matches(cm({1, 2}, 0, {2, 1}), cm({1, 2}, 0, {2, 1})) == 0);
}

namespace {

jm::CandidateMatch random_match(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(1, 3), idx(0, 5), pat(0, 2);
  std::vector<jm::Index> tuple;
  int n = len(rng);
  while (static_cast<int>(tuple.size()) < n) {
    jm::Index x = static_cast<jm::Index>(idx(rng));
    if (std::find(tuple.begin(), tuple.end(), x) == tuple.end()) tuple.push_back(x);
  }
  return jm::CandidateMatch::from_slots(static_cast<std::size_t>(pat(rng)), tuple);
}

}  // namespace

TEST(CompareMatches, TotalOrderProperties) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    auto a = random_match(rng), b = random_match(rng), c = random_match(rng);
    auto ab = jm::compare_matches(a, b), ba = jm::compare_matches(b, a);
    EXPECT_EQ(ab < 0, ba > 0);
    EXPECT_EQ(ab == 0, a == b);
    if (jm::compare_matches(a, b) <= 0 && jm::compare_matches(b, c) <= 0) {
      EXPECT_TRUE(jm::compare_matches(a, c) <= 0);
    }
  }
}

TEST(CompareMatches, DisjointKeysFairerHoldsOldest) {
  std::mt19937_64 rng(12);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    auto a = random_match(rng), b = random_match(rng);
    std::vector<jm::Index> both;
    std::set_intersection(a.key.begin(), a.key.end(), b.key.begin(), b.key.end(), std::back_inserter(both));
    if (!both.empty()) continue;
    ++checked;
    jm::Index oldest = std::min(a.key.front(), b.key.front());
    const auto& fairer = jm::compare_matches(a, b) < 0 ? a : b;
    EXPECT_EQ(fairer.key.front(), oldest);
  }
  EXPECT_GT(checked, 100);
}

TEST(CandidateMatch, KeyIsSortedSlotTuple) {
  auto c = jm::CandidateMatch::from_slots(1, {3, 1, 2});
  EXPECT_EQ(c.key, (std::vector<jm::Index>{1, 2, 3}));
  EXPECT_EQ(c.slot_tuple, (std::vector<jm::Index>{3, 1, 2}));
}

// -- build_pattern ----------------------------------------------------------

TEST(BuildPattern, PaymentPatternHasSizeThree) {
  auto p = payment_pattern();
  EXPECT_EQ(p.size, 3u);
  EXPECT_EQ(p.slots.size(), 3u);
}

TEST(BuildPattern, UnaryConstantTrue) {
  auto p = jm::build_pattern<Pay, int>({jm::slot<Shutdown, Pay>()}, nullptr, nullptr);
  EXPECT_EQ(p.size, 1u);
  EXPECT_TRUE(p.guard(jm::LookupEnv{}));
}

TEST(BuildPattern, DuplicateBindingRejected) {
  try {
    jm::build_pattern<Pay, int>({jm::slot<PaymentRequested, Pay>({"id"}, &PaymentRequested::id),
                                 jm::slot<MerchantValidated, Pay>({"id"}, &MerchantValidated::id)},
                                nullptr, nullptr);
    FAIL() << "expected DuplicateBinding";
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::DuplicateBinding);
  }
}

TEST(BuildPattern, EmptyPatternRejected) {
  try {
    jm::build_pattern<Pay, int>({}, nullptr, nullptr);
    FAIL();
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::EmptyPattern);
  }
}

namespace {
struct Foo {
  int x;
};
struct Bar {
  int y;
};
using FB = std::variant<Foo, Bar>;
}  // namespace

TEST(BuildPattern, FilterOnRepeatedTagIsInvalid) {
  try {
    jm::build_pattern<FB, int>(
        {jm::slot<Foo, FB>({"x"}, &Foo::x), jm::slot<Bar, FB>({"y1"}, &Bar::y),
         jm::filtered<Bar>(jm::slot<Bar, FB>({"y2"}, &Bar::y), [](const Bar& b) { return b.y > 0; })},
        nullptr, nullptr);
    FAIL() << "expected InvalidFilter";
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::InvalidFilter);
  }
}

TEST(BuildPattern, FilterOnUniqueTagIsValid) {
  auto p = jm::build_pattern<FB, int>(
      {jm::filtered<Foo>(jm::slot<Foo, FB>({"x"}, &Foo::x), [](const Foo& f) { return f.x == 1; }),
       jm::slot<Bar, FB>({"y1"}, &Bar::y), jm::slot<Bar, FB>({"y2"}, &Bar::y)},
      nullptr, nullptr);
  EXPECT_TRUE(p.has_filters());
  EXPECT_TRUE(p.slots[0].filter(FB{Foo{1}}));
  EXPECT_FALSE(p.slots[0].filter(FB{Foo{2}}));
}

// -- slot_fits / assemble_env -----------------------------------------------

TEST(SlotFits, BindsPayloadField) {
  auto p = payment_pattern();
  jm::ArrivalCounter c;
  auto fit = jm::slot_fits(p.slots[0], c.stamp(Pay{PaymentRequested{7}}));
  ASSERT_TRUE(fit);
  ASSERT_EQ(fit->size(), 1u);
  EXPECT_EQ((*fit)[0].first, "id1");
  EXPECT_EQ(std::any_cast<int>((*fit)[0].second), 7);
}

TEST(SlotFits, OtherTagIsNone) {
  auto p = payment_pattern();
  jm::ArrivalCounter c;
  auto d = c.stamp(Pay{Shutdown{}});
  for (const auto& s : p.slots) EXPECT_FALSE(jm::slot_fits(s, d));
}

TEST(SlotFits, EmptyPayloadGivesEmptyBindings) {
  auto s = jm::slot<Shutdown, Pay>();
  jm::ArrivalCounter c;
  auto fit = jm::slot_fits(s, c.stamp(Pay{Shutdown{}}));
  ASSERT_TRUE(fit);
  EXPECT_TRUE(fit->empty());
}

TEST(SlotFits, NoneIffTagsDiffer) {
  std::mt19937_64 rng(5);
  std::vector<jm::SlotDescriptor<Pay>> slots = {
      jm::slot<PaymentRequested, Pay>({"a"}, &PaymentRequested::id),
      jm::slot<MerchantValidated, Pay>({"b"}, &MerchantValidated::id),
      jm::slot<CustomerValidated, Pay>({"c"}, &CustomerValidated::id), jm::slot<Shutdown, Pay>()};
  jm::ArrivalCounter c;
  for (int i = 0; i < 400; ++i) {
    Pay p;
    switch (rng() % 4) {
      case 0: p = PaymentRequested{int(rng() % 9)}; break;
      case 1: p = MerchantValidated{int(rng() % 9)}; break;
      case 2: p = CustomerValidated{int(rng() % 9)}; break;
      default: p = Shutdown{}; break;
    }
    auto m = c.stamp(p);
    for (const auto& s : slots) EXPECT_EQ(jm::slot_fits(s, m).has_value(), s.expected_tag == m.tag);
  }
}

TEST(AssembleEnv, EqualIdsSatisfyGuard) {
  auto p = payment_pattern();
  std::vector<Pay> buf = {PaymentRequested{5}, MerchantValidated{5}, CustomerValidated{5}};
  std::vector<jm::Index> tuple = {0, 1, 2};
  auto env = jm::assemble_env(p, tuple, [&](jm::Index i) { return &buf[i]; });
  EXPECT_EQ(env.get<int>("id1"), 5);
  EXPECT_EQ(env.get<int>("id2"), 5);
  EXPECT_EQ(env.get<int>("id3"), 5);
  EXPECT_TRUE(p.guard(env));
}

TEST(AssembleEnv, UnequalIdsFailGuard) {
  auto p = payment_pattern();
  std::vector<Pay> buf = {PaymentRequested{5}, MerchantValidated{5}, CustomerValidated{6}};
  std::vector<jm::Index> tuple = {0, 1, 2};
  EXPECT_FALSE(p.guard(jm::assemble_env(p, tuple, [&](jm::Index i) { return &buf[i]; })));
}

TEST(AssembleEnv, UnaryWithoutBindingsIsEmpty) {
  auto p = jm::build_pattern<Pay, int>({jm::slot<Shutdown, Pay>()}, nullptr, nullptr);
  Pay s = Shutdown{};
  std::vector<jm::Index> tuple = {0};
  EXPECT_TRUE(jm::assemble_env(p, tuple, [&](jm::Index) { return &s; }).empty());
}

TEST(AssembleEnv, MissingMessageRaises) {
  auto p = payment_pattern();
  std::vector<jm::Index> tuple = {0, 1, 2};
  try {
    jm::assemble_env(p, tuple, [](jm::Index) -> const Pay* { return nullptr; });
    FAIL();
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::MissingMessage);
  }
}

TEST(LookupEnv, MissingAndMistypedBindings) {
  jm::LookupEnv env;
  env.bind("x", 3);
  EXPECT_THROW(env.get<int>("y"), jm::JoinError);
  try {
    env.get<std::string>("x");
    FAIL();
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::BadBindingType);
  }
}

TEST(FireLog, Format) {
  EXPECT_EQ(jm::format_fire({0, {1, 2, 3}}), "fire 0 [1,2,3]");
  EXPECT_EQ(jm::format_fire({2, {}}), "fire 2 []");
}

// -- buffer / mailbox -------------------------------------------------------

TEST(StampedBuffer, FindAndErase) {
  jm::StampedBuffer<Pay> b;
  jm::ArrivalCounter c;
  for (int i = 0; i < 5; ++i) b.push(c.stamp(Pay{PaymentRequested{i}}));
  ASSERT_NE(b.find(3), nullptr);
  std::vector<jm::Index> gone = {1, 3};
  b.erase(gone);
  EXPECT_EQ(b.size(), 3u);
  EXPECT_EQ(b.find(3), nullptr);
  EXPECT_EQ(std::get<PaymentRequested>(*b.payload(4)).id, 4);
}

TEST(Mailbox, FifoAndClose) {
  jm::Mailbox<int> mb;
  jm::ActorRef<int> ref(std::shared_ptr<jm::Mailbox<int>>(&mb, [](auto*) {}));
  ref.send(1);
  ref.send(2);
  EXPECT_EQ(mb.take(), 1);
  EXPECT_EQ(mb.try_take(), 2);
  EXPECT_EQ(mb.try_take(), std::nullopt);
  mb.close();
  EXPECT_FALSE(mb.put(3));
  EXPECT_EQ(mb.take(), std::nullopt);
}

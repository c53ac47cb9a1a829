#include <gtest/gtest.h>

#include "support.hpp"

namespace jm = joinmatch;
using testing_support::Pat;

namespace {

jm::TraceFile fig1() {
  return jm::parse_trace(
      "pattern A B C\n"
      "arrive A\narrive C\narrive B\narrive D\n");
}

jm::Record rec(jm::Tag tag, std::int64_t v = 0) { return jm::Record{tag, {{"v", v}}}; }

}  // namespace

TEST(MatcherKind, NamesRoundTrip) {
  for (auto k : jm::kAllMatchers) EXPECT_EQ(jm::parse_matcher_kind(jm::to_string(k)), k);
  EXPECT_EQ(jm::factory_for("while-lazy").kind, jm::MatcherKind::WhileLazy);
}

TEST(MatcherKind, UnknownIdentifierRejected) {
  try {
    jm::factory_for("greedy");
    FAIL();
  } catch (const jm::JoinError& e) {
    EXPECT_EQ(e.code(), jm::ErrorCode::UnknownMatcher);
  }
}

TEST(Engines, EmptyPatternListRejected) {
  for (auto k : jm::kAllMatchers) {
    try {
      jm::MatcherFactory{k, {}, 0}.instantiate(std::vector<Pat>{});
      FAIL() << jm::to_string(k);
    } catch (const jm::JoinError& e) {
      EXPECT_EQ(e.code(), jm::ErrorCode::EmptyPatternList);
    }
  }
}

TEST(Engines, FactoryInstancesAreIndependent) {
  auto f = fig1();
  for (auto k : jm::kAllMatchers) {
    jm::MatcherFactory fac{k, {2}, 0};
    auto a = fac.instantiate(jm::to_join_patterns(f.patterns));
    auto b = fac.instantiate(jm::to_join_patterns(f.patterns));
    a.deliver(rec(0));
    a.deliver(rec(1));
    a.deliver(rec(2));
    ASSERT_TRUE(a.poll()) << jm::to_string(k);
    EXPECT_EQ(b.next_index(), 0u);
    EXPECT_EQ(b.engine().stats().ingested, 0u);
    EXPECT_FALSE(b.poll());
  }
}

TEST(Engines, FirstIndexOffsetsStamps) {
  auto f = fig1();
  auto m = jm::MatcherFactory{jm::MatcherKind::StatefulTree, {}, 1}.instantiate(jm::to_join_patterns(f.patterns));
  for (auto r : f.messages) m.deliver(r);
  auto fired = m.poll();
  ASSERT_TRUE(fired);
  EXPECT_EQ(fired->match.key, (std::vector<jm::Index>{1, 2, 3}));
  EXPECT_EQ(fired->match.slot_tuple, (std::vector<jm::Index>{1, 3, 2}));
}

TEST(Engines, PollWithoutDeliveriesIsIdle) {
  auto f = fig1();
  for (auto k : jm::kAllMatchers) {
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(jm::to_join_patterns(f.patterns));
    EXPECT_FALSE(m.poll());
    m.deliver(rec(0));
    EXPECT_FALSE(m.poll());
    EXPECT_FALSE(m.poll());
  }
}

TEST(Engines, FireRemovesMatchedMessagesFromBuffer) {
  auto f = fig1();
  for (auto k : jm::kAllMatchers) {
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(jm::to_join_patterns(f.patterns));
    m.deliver(rec(0));
    m.deliver(rec(2));
    m.deliver(rec(0));
    m.deliver(rec(1));
    auto fired = m.poll();
    ASSERT_TRUE(fired) << jm::to_string(k);
    EXPECT_EQ(fired->match.key, (std::vector<jm::Index>{0, 1, 3}));
    const auto& buf = m.engine().buffer();
    ASSERT_EQ(buf.size(), 1u) << jm::to_string(k);
    EXPECT_EQ(buf[0].arrival_index, 2u);
    EXPECT_EQ(m.engine().stats().fires, 1u);
  }
}

TEST(Engines, UnfitMessagesNeverFire) {
  auto f = fig1();
  for (auto k : jm::kAllMatchers) {
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(jm::to_join_patterns(f.patterns));
    for (int i = 0; i < 10; ++i) m.deliver(rec(3));
    EXPECT_FALSE(m.poll()) << jm::to_string(k);
    EXPECT_EQ(m.engine().stats().ingested, 10u);
  }
}

TEST(Engines, GuardSeesBoundValues) {
  auto f = jm::parse_trace("pattern A B if s0 == s1\n");
  for (auto k : jm::kAllMatchers) {
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(jm::to_join_patterns(f.patterns));
    m.deliver(rec(0, 1));
    m.deliver(rec(1, 2));
    EXPECT_FALSE(m.poll());
    m.deliver(rec(0, 2));
    auto fired = m.poll();
    ASSERT_TRUE(fired) << jm::to_string(k);
    EXPECT_EQ(fired->match.slot_tuple, (std::vector<jm::Index>{2, 1}));
    EXPECT_EQ(fired->env.get<std::int64_t>("s0"), 2);
    EXPECT_GT(m.engine().stats().guard_evaluations, 0u);
  }
}

TEST(Engines, GuardExceptionPropagates) {
  auto f = jm::parse_trace("pattern A\n");
  for (auto k : jm::kAllMatchers) {
    auto ps = jm::to_join_patterns(f.patterns);
    ps[0].guard = [](const jm::LookupEnv&) -> bool { throw std::runtime_error("guard"); };
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(std::move(ps));
    EXPECT_THROW({
      m.deliver(rec(0));
      m.poll();
    }, std::runtime_error) << jm::to_string(k);
  }
}

TEST(Engines, RepeatedTagsBindDistinctMessages) {
  auto f = jm::parse_trace("pattern A A if s0 < s1\n");
  for (auto k : jm::kAllMatchers) {
    auto m = jm::MatcherFactory{k, {2}, 0}.instantiate(jm::to_join_patterns(f.patterns));
    m.deliver(rec(0, 5));
    EXPECT_FALSE(m.poll());
    m.deliver(rec(0, 3));
    auto fired = m.poll();
    ASSERT_TRUE(fired) << jm::to_string(k);
    EXPECT_EQ(fired->match.slot_tuple, (std::vector<jm::Index>{1, 0}));
  }
}

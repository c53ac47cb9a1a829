#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "joinmatch/bench/bounded_buffer.hpp"
#include "joinmatch/bench/micro.hpp"
#include "joinmatch/bench/smart_house.hpp"
#include "joinmatch/bench/synthetic.hpp"
#include "joinmatch/oracle.hpp"

namespace jm = joinmatch;
namespace jb = joinmatch::bench;

namespace {

jb::BenchReport sample_report() {
  jb::BenchReport r;
  r.rows.push_back({"synthetic-clean", "while-lazy", 3, 0, 2.0, 10, jb::throughput(10, 2.0), false});
  r.rows.push_back({"synthetic-clean", "while-lazy", 3, 1, 4.0, 10, jb::throughput(10, 4.0), false});
  r.rows.push_back({"synthetic-clean", "brute-force", 3, 0, 5.0, 10, jb::throughput(10, 5.0), false});
  r.metadata["seed"] = "7";
  return r;
}

jb::BenchConfig quick(const std::string& matcher) {
  jb::BenchConfig cfg;
  cfg.matcher = matcher;
  cfg.reps = 1;
  cfg.warmup = 0;
  cfg.workers = 2;
  cfg.timeout_s = 60;
  return cfg;
}

std::vector<jm::FireEvent> replay(const std::vector<jb::HouseMsg>& msgs, jm::MatcherKind kind,
                                  jm::EngineStats* stats = nullptr) {
  auto trace = jb::stamp_all(msgs);
  return jm::replay_fires(std::span<const jm::MessageInstance<jb::HouseMsg>>(trace), jb::smart_house_patterns(),
                          jm::MatcherFactory{kind, {1}, 0}, nullptr, stats);
}

}  // namespace

TEST(Report, ThroughputIsMatchesPerSecond) {
  EXPECT_DOUBLE_EQ(jb::throughput(10, 2.0), 5000.0);
  EXPECT_DOUBLE_EQ(jb::throughput(10, 0.0), 0.0);
}

TEST(Report, SummaryUsesSampleStddev) {
  auto s = sample_report().summary();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].matcher, "while-lazy");
  EXPECT_DOUBLE_EQ(s[0].mean_throughput_mps, 3750.0);
  EXPECT_NEAR(s[0].stddev_throughput_mps, 1767.766952966369, 1e-9);
  EXPECT_EQ(s[1].matcher, "brute-force");
  EXPECT_DOUBLE_EQ(s[1].stddev_throughput_mps, 0.0);
}

TEST(Report, CsvHeaderAndRoundTrip) {
  auto r = sample_report();
  std::ostringstream out;
  jb::write_csv(out, r);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "benchmark,matcher,parameter,repetition,elapsed_ms,matches,throughput_mps");
  std::istringstream again(out.str());
  EXPECT_EQ(jb::parse_csv(again), r.rows);
}

TEST(Report, SummaryCsvHeader) {
  std::ostringstream out;
  jb::write_summary_csv(out, sample_report());
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "benchmark,matcher,parameter,mean_throughput_mps,stddev_throughput_mps");
}

TEST(Report, JsonRoundTrip) {
  auto r = sample_report();
  auto j = jb::to_json(r);
  EXPECT_EQ(j.at("summary").size(), 2u);
  auto back = jb::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.rows, r.rows);
  EXPECT_EQ(back.metadata, r.metadata);
}

TEST(Report, TimedOutRowsLeaveSummary) {
  auto r = sample_report();
  r.rows.push_back({"synthetic-clean", "stateful-tree", 3, 0, 9.0, 0, 0.0, true});
  EXPECT_TRUE(r.any_timed_out());
  EXPECT_EQ(r.summary().size(), 2u);
  std::ostringstream out;
  jb::write_csv(out, r);
  EXPECT_NE(out.str().find("timeout"), std::string::npos);
}

TEST(Report, SummaryPathSitsNextToReport) {
  EXPECT_EQ(jb::summary_path("out/run.csv"), "out/run.summary.csv");
  EXPECT_EQ(jb::summary_path("run.json"), "run.summary.csv");
  EXPECT_EQ(jb::summary_path("dir.v2/run"), "dir.v2/run.summary.csv");
}

TEST(Runner, WarmupsAreNotReported) {
  auto cfg = quick("while-lazy");
  cfg.reps = 3;
  cfg.warmup = 2;
  int calls = 0;
  auto r = jb::repeat(cfg, [&] {
    ++calls;
    return jb::RunResult{1.0, 4, false};
  });
  EXPECT_EQ(calls, 5);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[2].repetition, 2);
  EXPECT_DOUBLE_EQ(r.rows[0].throughput_mps, 4000.0);
}

TEST(Synthetic, TrafficIsSeeded) {
  jb::SyntheticOptions o{4, jb::Workload::NoiseTag, false, 10, 5, 3};
  EXPECT_EQ(jb::gen_synthetic_traffic(o).size(), 90u);
  auto a = jb::gen_synthetic_traffic(o);
  auto b = jb::gen_synthetic_traffic(o);
  auto payload = [](const jb::SynMsg& m) { return std::visit([](const auto& l) { return l.v; }, m); };
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].index(), b[i].index());
    EXPECT_EQ(payload(a[i]), payload(b[i]));
  }
  o.seed = 4;
  auto c = jb::gen_synthetic_traffic(o);
  EXPECT_FALSE(std::equal(a.begin(), a.end(), c.begin(),
                          [](const jb::SynMsg& x, const jb::SynMsg& y) { return x.index() == y.index(); }));
}

TEST(Synthetic, CleanSizeFiveHasFiftyMessages) {
  jb::SyntheticOptions o{5, jb::Workload::Clean, false, 10, 100, 1};
  EXPECT_EQ(jb::gen_synthetic_traffic(o).size(), 50u);
}

TEST(Synthetic, EveryEngineFiresOncePerGroup) {
  for (auto kind : jm::kAllMatchers) {
    for (auto w : {jb::Workload::Clean, jb::Workload::NoiseTag, jb::Workload::NoisePayload}) {
      jb::SyntheticOptions o{3, w, w == jb::Workload::NoisePayload, 8, 6, 2};
      auto r = jb::run_synthetic(quick(std::string(jm::to_string(kind))), o);
      ASSERT_EQ(r.rows.size(), 1u);
      EXPECT_FALSE(r.rows[0].timed_out);
      EXPECT_EQ(r.rows[0].matches, 8u) << jm::to_string(kind) << " " << jb::to_string(w);
      EXPECT_EQ(r.rows[0].benchmark, jb::synthetic_name(o));
    }
  }
}

TEST(Synthetic, NoisePayloadReplayAgreesWithOracle) {
  jb::SyntheticOptions o{3, jb::Workload::NoisePayload, true, 6, 4, 9};
  auto trace = jb::stamp_all(jb::gen_synthetic_traffic(o));
  auto patterns = jb::synthetic_patterns(3, true, 0);
  std::vector<jm::MatcherFactory> factories;
  for (auto k : jm::kAllMatchers) factories.push_back({k, {2}, 0});
  auto r = jm::differential_replay(std::span<const jm::MessageInstance<jb::SynMsg>>(trace), patterns,
                                   std::span<const jm::MatcherFactory>(factories));
  EXPECT_EQ(r.oracle.size(), 6u);
  EXPECT_TRUE(r.divergent().empty());
}

TEST(SmartHouse, NoNoiseFiresEveryTriple) {
  auto msgs = jb::gen_smart_house_traffic({0, 10, 1});
  EXPECT_EQ(msgs.size(), 31u);
  auto fires = replay(msgs, jm::MatcherKind::WhileLazy);
  ASSERT_EQ(fires.size(), 11u);
  EXPECT_EQ(fires.back().pattern_index, 3u);
  for (std::size_t g = 0; g < 10; ++g) EXPECT_EQ(fires[g].pattern_index, g % 3) << g;
}

TEST(SmartHouse, ActorStopsWithFireCount) {
  auto r = jb::run_smart_house(quick("filtering-parallel"), {0, 10, 1});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].matches, 10u);
  EXPECT_EQ(r.rows[0].parameter, 0);
}

TEST(SmartHouse, ContactFilterRejectsOtherDoors) {
  auto patterns = jb::smart_house_patterns();
  auto trace = jb::stamp_all(std::vector<jb::HouseMsg>{
      jb::Motion{0, true, "front_door", 10}, jb::Contact{1, true, "kitchen", 20},
      jb::Motion{2, true, "entrance_hall", 30}});
  jm::EngineStats stats;
  auto fires = jm::replay_fires(std::span<const jm::MessageInstance<jb::HouseMsg>>(trace), patterns,
                                jm::MatcherFactory{jm::MatcherKind::FilteringParallel, {1}, 0}, nullptr, &stats);
  EXPECT_TRUE(fires.empty());
  EXPECT_EQ(stats.discarded, 1u);
}

TEST(SmartHouse, NoisyTracesAgreeAcrossEngines) {
  auto msgs = jb::gen_smart_house_traffic({4, 6, 5});
  auto want = replay(msgs, jm::MatcherKind::BruteForce);
  for (auto kind : jm::kAllMatchers) EXPECT_EQ(replay(msgs, kind), want) << jm::to_string(kind);
}

TEST(BoundedBuffer, SingleSlotDeliversInOrder) {
  jb::BoundedBufferOptions o{1, 1, 1, 3};
  for (auto kind : jm::kAllMatchers) {
    auto run = jb::run_bounded_buffer_once(o, jm::MatcherFactory{kind, {2}, 0}, 60);
    ASSERT_FALSE(run.timing.timed_out) << jm::to_string(kind);
    EXPECT_EQ(run.received_order, (std::vector<std::int64_t>{0, 1, 2}));
    EXPECT_TRUE(run.safe(1));
    EXPECT_EQ(run.buffer.max_items, 1);
    EXPECT_EQ(run.timing.matches, 6u);
  }
}

TEST(BoundedBuffer, CapacityHoldsWithManyActors) {
  jb::BoundedBufferOptions o{4, 3, 2, 20};
  for (auto kind : jm::kAllMatchers) {
    auto run = jb::run_bounded_buffer_once(o, jm::MatcherFactory{kind, {2}, 0}, 60);
    ASSERT_FALSE(run.timing.timed_out) << jm::to_string(kind);
    EXPECT_TRUE(run.safe(4)) << jm::to_string(kind);
    EXPECT_EQ(run.buffer.produced, 60u);
    auto got = run.received_order;
    std::sort(got.begin(), got.end());
    for (std::int64_t i = 0; i < 60; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)], i);
  }
}

TEST(Micro, PingPongCountsBallsInBothModes) {
  for (std::string mode : {"simple-actor", "brute-force", "while-lazy"}) {
    auto r = jb::run_micro(quick(mode), {"ping-pong", 500, 4});
    EXPECT_TRUE(r.consistent) << mode;
    ASSERT_EQ(r.report.rows.size(), 1u);
    EXPECT_EQ(r.report.rows[0].matches, 1001u) << mode;
  }
}

TEST(Micro, ChameneosMeetingsAreConsistent) {
  for (std::string mode : {"simple-actor", "stateful-tree"}) {
    auto r = jb::run_micro(quick(mode), {"chameneos", 300, 5});
    EXPECT_TRUE(r.consistent) << mode;
    EXPECT_EQ(r.report.rows[0].matches, 300u) << mode;
  }
}

TEST(Micro, UnknownBenchmarkRejected) {
  EXPECT_THROW(jb::run_micro(quick("simple-actor"), {"fork-join", 10, 2}), std::invalid_argument);
}

TEST(Micro, ComplementColours) {
  EXPECT_EQ(jb::complement(jb::Colour::Blue, jb::Colour::Red), jb::Colour::Yellow);
  EXPECT_EQ(jb::complement(jb::Colour::Red, jb::Colour::Red), jb::Colour::Red);
}

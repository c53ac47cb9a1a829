#pragma once

// Smart-house monitor: overlapping three-message patterns over device events
// (bathroom lighting, home arrival, home departure) plus a shut-off.

#include <algorithm>
#include <array>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "joinmatch/bench/runner.hpp"

namespace joinmatch::bench {

struct Motion {
  int id = 0;
  bool status = false;
  std::string room;
  std::int64_t time_ms = 0;
};
struct AmbientLight {
  int id = 0;
  int value = 0;
  std::string room;
  std::int64_t time_ms = 0;
};
struct Light {
  int id = 0;
  bool status = false;
  std::string room;
  std::int64_t time_ms = 0;
};
struct Contact {
  int id = 0;
  bool status = false;
  std::string room;
  std::int64_t time_ms = 0;
};
struct ShutOff {};

using HouseMsg = std::variant<Motion, AmbientLight, Light, Contact, ShutOff>;

inline const std::array<std::string, 6> kRooms = {"bathroom", "front_door", "entrance_hall",
                                                  "kitchen",  "bedroom",    "living_room"};
inline constexpr std::int64_t kEpochMs = 1'700'000'000'000;
inline constexpr std::size_t kSmartHousePatterns = 4;

namespace detail {

inline bool is_sorted_times(std::int64_t a, std::int64_t b, std::int64_t c) { return a <= b && b <= c; }

}  // namespace detail

/// E1 (bathroom occupied), E5 arrival, E5 departure, ShutOff. The RHS of
/// the first three counts fires; ShutOff stops with the count. Filtering
/// clauses sit on the uniquely tagged slots: all of E1's, and E5's Contact.
inline std::vector<JoinPattern<HouseMsg, std::uint64_t>> smart_house_patterns() {
  using M = HouseMsg;
  using P = JoinPattern<M, std::uint64_t>;
  auto fires = std::make_shared<std::uint64_t>(0);
  auto count = [fires](const LookupEnv&, ActorRef<M>&) -> Result<std::uint64_t> {
    ++*fires;
    return Continue{};
  };

  auto bathroom_motion = filtered<Motion>(
      slot<Motion, M>({"mStatus", "mRoom", "t0"}, &Motion::status, &Motion::room, &Motion::time_ms),
      [](const Motion& m) { return m.room == "bathroom" && m.status; });
  auto bathroom_ambient = filtered<AmbientLight>(
      slot<AmbientLight, M>({"value", "alRoom", "t1"}, &AmbientLight::value, &AmbientLight::room,
                            &AmbientLight::time_ms),
      [](const AmbientLight& a) { return a.room == "bathroom" && a.value <= 40; });
  auto bathroom_light = filtered<Light>(
      slot<Light, M>({"lStatus", "lRoom", "t2"}, &Light::status, &Light::room, &Light::time_ms),
      [](const Light& l) { return l.room == "bathroom" && !l.status; });
  P e1 = build_pattern<M, std::uint64_t>(
      {bathroom_motion, bathroom_ambient, bathroom_light},
      [](const LookupEnv& env) {
        const auto& rooms = {env.get<std::string>("mRoom"), env.get<std::string>("lRoom"),
                             env.get<std::string>("alRoom")};
        return detail::is_sorted_times(env.get<std::int64_t>("t0"), env.get<std::int64_t>("t1"),
                                       env.get<std::int64_t>("t2")) &&
               std::all_of(rooms.begin(), rooms.end(), [](const std::string& r) { return r == "bathroom"; }) &&
               env.get<bool>("mStatus") && !env.get<bool>("lStatus") && env.get<int>("value") <= 40;
      },
      count);

  auto presence = [&](const char* first_room, const char* last_room) {
    auto front_contact = filtered<Contact>(
        slot<Contact, M>({"cStatus", "cRoom", "t1"}, &Contact::status, &Contact::room, &Contact::time_ms),
        [](const Contact& c) { return c.room == "front_door" && c.status; });
    return build_pattern<M, std::uint64_t>(
        {slot<Motion, M>({"mStatus0", "mRoom0", "t0"}, &Motion::status, &Motion::room, &Motion::time_ms),
         front_contact,
         slot<Motion, M>({"mStatus1", "mRoom1", "t2"}, &Motion::status, &Motion::room, &Motion::time_ms)},
        [first = std::string(first_room), last = std::string(last_room)](const LookupEnv& env) {
          return detail::is_sorted_times(env.get<std::int64_t>("t0"), env.get<std::int64_t>("t1"),
                                         env.get<std::int64_t>("t2")) &&
                 env.get<bool>("mStatus0") && env.get<bool>("mStatus1") && env.get<bool>("cStatus") &&
                 env.get<std::string>("mRoom0") == first && env.get<std::string>("cRoom") == "front_door" &&
                 env.get<std::string>("mRoom1") == last;
        },
        count);
  };

  P shut_off = build_pattern<M, std::uint64_t>(
      {slot<ShutOff, M>()}, nullptr,
      [fires](const LookupEnv&, ActorRef<M>&) -> Result<std::uint64_t> { return stop(*fires); });

  std::vector<P> out;
  out.push_back(std::move(e1));
  out.push_back(presence("front_door", "entrance_hall"));
  out.push_back(presence("entrance_hall", "front_door"));
  out.push_back(std::move(shut_off));
  return out;
}

struct SmartHouseOptions {
  std::size_t noise = 0;  // noise messages per matchable triple
  std::size_t matches = 10;
  std::uint64_t seed = 1;
};

/// `matches` matchable triples cycling through E1, arrival and departure,
/// each with ascending timestamps inside its own 1 s window and shuffled
/// together with `noise` random device messages; ShutOff last.
inline std::vector<HouseMsg> gen_smart_house_traffic(const SmartHouseOptions& o) {
  std::mt19937_64 rng(o.seed);
  auto uniform = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  auto room = [&] { return kRooms[static_cast<std::size_t>(uniform(0, kRooms.size() - 1))]; };
  auto coin = [&] { return uniform(0, 1) == 1; };

  std::vector<HouseMsg> out;
  int id = 0;
  for (std::size_t g = 0; g < o.matches; ++g) {
    const std::int64_t base = kEpochMs + static_cast<std::int64_t>(g) * 1000;
    std::vector<HouseMsg> window;
    switch (g % 3) {
      case 0:
        window.push_back(Motion{id++, true, "bathroom", base + 10});
        window.push_back(AmbientLight{id++, static_cast<int>(uniform(0, 40)), "bathroom", base + 20});
        window.push_back(Light{id++, false, "bathroom", base + 30});
        break;
      case 1:
        window.push_back(Motion{id++, true, "front_door", base + 10});
        window.push_back(Contact{id++, true, "front_door", base + 20});
        window.push_back(Motion{id++, true, "entrance_hall", base + 30});
        break;
      default:
        window.push_back(Motion{id++, true, "entrance_hall", base + 10});
        window.push_back(Contact{id++, true, "front_door", base + 20});
        window.push_back(Motion{id++, true, "front_door", base + 30});
        break;
    }
    for (std::size_t n = 0; n < o.noise; ++n) {
      std::int64_t t = base + uniform(0, 999);
      switch (uniform(0, 3)) {
        case 0: window.push_back(Motion{id++, coin(), room(), t}); break;
        case 1: window.push_back(AmbientLight{id++, static_cast<int>(uniform(0, 100)), room(), t}); break;
        case 2: window.push_back(Light{id++, coin(), room(), t}); break;
        default: window.push_back(Contact{id++, coin(), room(), t}); break;
      }
    }
    std::shuffle(window.begin(), window.end(), rng);
    out.insert(out.end(), window.begin(), window.end());
  }
  out.push_back(ShutOff{});
  return out;
}

inline BenchReport run_smart_house(BenchConfig cfg, const SmartHouseOptions& o) {
  cfg.benchmark = "smart-house";
  cfg.parameter = static_cast<std::int64_t>(o.noise);
  auto msgs = gen_smart_house_traffic(o);
  auto factory = cfg.factory();
  BenchReport r =
      repeat(cfg, [&] { return time_join_actor(smart_house_patterns(), factory, msgs, cfg.timeout_s); });
  r.metadata["noise_interleaving"] = "uniform shuffle within each matchable group window";
  return r;
}

}  // namespace joinmatch::bench

#include "doctest.h"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "ncp/igs.hpp"

using namespace ncp::igs;
using ncp::Rng;
using ncp::keygen::Key;
using ncp::keygen::KeygenParams;
using ncp::keygen::KeyRole;
using ncp::keygen::TwoTierCoder;

namespace {

Key key_of(std::uint8_t tag) { return Key{ncp::keygen::Scheme::kNetworkCoding, KeyRole::kKeyB, {tag, tag}}; }

MemberState member(std::uint64_t ref, Key key, Location loc, std::uint64_t timer, std::uint64_t silence) {
  return MemberState{ref, std::move(key), loc, timer, silence, "g"};
}

// KeyB factory backed by the real two-tier coder.
struct CoderFactory {
  TwoTierCoder coder{KeygenParams::production_default()};
  Rng rng{77};
  std::map<std::uint64_t, Key> key_a;

  Key operator()(const MemberState& m) {
    auto it = key_a.find(m.member_ref);
    if (it == key_a.end()) {
      const auto random_a = ncp::keygen::Seed::random(coder.params().field, coder.params().k, rng).symbols;
      it = key_a.emplace(m.member_ref, Key::from_symbols(random_a, KeyRole::kKeyA)).first;
    }
    return coder.key_b(it->second, rng);
  }
};

}  // namespace

TEST_CASE("distance") {
  CHECK(distance({5, -3}, {5, -3}) == 0.0);
  CHECK(distance({0, 0}, {3, 4}) == 5.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Location a{rng.between_signed(-10000, 10000), rng.between_signed(-10000, 10000)};
    const Location b{rng.between_signed(-10000, 10000), rng.between_signed(-10000, 10000)};
    REQUIRE(distance(a, b) == distance(b, a));
  }
}

TEST_CASE("tick") {
  auto s = member(1, key_of(1), {7, 8}, 0, 5);
  s = tick(s);
  CHECK(s.timer == 1);
  for (int i = 0; i < 9; ++i) s = tick(s);
  CHECK(s.timer == 10);
  CHECK(s.key_b == key_of(1));
  CHECK(s.location == Location{7, 8});
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(IgsConfig{1, 1, 0.0}.validate());
  CHECK_THROWS(IgsConfig{0, 1, 0.0}.validate());
  CHECK_THROWS(IgsConfig{5, 4, 0.0}.validate());
  CHECK_THROWS(IgsConfig{1, 2, -1.0}.validate());
  const IgsConfig cfg{3, 9, 1.0};
  Rng rng(2);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto s = draw_silence(cfg, rng);
    REQUIRE(s >= 3);
    REQUIRE(s <= 9);
    seen.insert(s);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("step before the silence period is a no-op") {
  const IgsConfig cfg{5, 5, 1000};
  Rng rng(3);
  const auto m = member(1, key_of(1), {0, 0}, 4, 5);
  const std::vector<MemberState> group{member(2, key_of(2), {0, 0}, 9, 5)};
  int calls = 0;
  const auto r = step(m, group, rng, cfg, [&](const MemberState&) { ++calls; return key_of(9); });
  CHECK(r.event == EventKind::kNone);
  CHECK(r.member.key_b == m.key_b);
  CHECK(r.member.timer == 4);
  CHECK_FALSE(r.updated_friend.has_value());
  CHECK(calls == 0);
}

TEST_CASE("co-located members exchange KeyBs") {
  const IgsConfig cfg{5, 8, 10};
  Rng rng(4);
  const auto m = member(1, key_of(1), {100, 100}, 5, 5);
  const std::vector<MemberState> group{member(2, key_of(2), {100, 100}, 3, 7)};
  const auto r = step(m, group, rng, cfg, [](const MemberState&) -> Key { FAIL("no regeneration expected"); return {}; });
  REQUIRE(r.event == EventKind::kExchanged);
  CHECK(r.friend_index == 0u);
  CHECK(r.member.key_b == key_of(2));
  CHECK(r.updated_friend->key_b == key_of(1));
  CHECK(r.member.timer == 0);
  CHECK(r.updated_friend->timer == 0);
  CHECK(r.member.silence_period >= 5);
  CHECK(r.updated_friend->silence_period <= 8);
}

TEST_CASE("distant friend triggers regeneration") {
  const IgsConfig cfg{5, 5, 10};
  Rng rng(5);
  const auto m = member(1, key_of(1), {0, 0}, 6, 5);
  const std::vector<MemberState> group{member(2, key_of(2), {11, 0}, 0, 5)};
  const auto r = step(m, group, rng, cfg, [](const MemberState&) { return key_of(42); });
  CHECK(r.event == EventKind::kRegenerated);
  CHECK(r.member.key_b != key_of(1));
  CHECK(r.member.key_b == key_of(42));
  CHECK(r.member.timer == 0);
  CHECK_FALSE(r.updated_friend.has_value());
}

TEST_CASE("empty group regenerates") {
  const IgsConfig cfg{1, 1, 1e9};
  Rng rng(6);
  const auto r = step(member(1, key_of(1), {}, 1, 1), {}, rng, cfg, [](const MemberState&) { return key_of(3); });
  CHECK(r.event == EventKind::kRegenerated);
  CHECK(r.member.key_b == key_of(3));
}

namespace {

struct GroupRun {
  std::vector<std::vector<GroupEvent>> events;
  std::vector<std::vector<Key>> keys;
};

GroupRun run_group(std::uint64_t seed, std::size_t ticks, const IgsConfig& cfg, double spread) {
  Rng rng(seed);
  CoderFactory factory;
  std::vector<MemberState> ms;
  for (std::uint64_t i = 0; i < 5; ++i) {
    MemberState s;
    s.member_ref = i;
    s.key_b = factory(s);
    s.location = {static_cast<std::int64_t>(spread * static_cast<double>(i)), 0};
    s.silence_period = draw_silence(cfg, rng);
    s.group_id = "g";
    ms.push_back(s);
  }
  Group g("g", ms);
  GroupRun out;
  for (std::size_t t = 0; t < ticks; ++t) {
    out.events.push_back(g.advance(rng, cfg, std::ref(factory)));
    std::vector<Key> ks;
    for (const auto& m : g.members()) ks.push_back(m.key_b);
    out.keys.push_back(ks);
    for (auto& m : g.members()) m.location.x += rng.between_signed(-3, 3);
  }
  return out;
}

}  // namespace

TEST_CASE("group invariants: conservation, uniqueness, timers") {
  const IgsConfig cfg{3, 9, 50};
  Rng rng(8);
  CoderFactory factory;
  std::vector<MemberState> ms;
  for (std::uint64_t i = 0; i < 4; ++i) {
    MemberState s;
    s.member_ref = i;
    s.key_b = factory(s);
    s.location = {static_cast<std::int64_t>(40 * i), 0};
    s.silence_period = draw_silence(cfg, rng);
    ms.push_back(s);
  }
  Group g("g", ms);
  std::size_t exchanges = 0, regenerations = 0;
  for (int t = 0; t < 3000; ++t) {
    std::multiset<std::string> before;
    std::vector<std::uint64_t> timers_before;
    for (const auto& m : g.members()) {
      before.insert(m.key_b.hex());
      timers_before.push_back(m.timer);
    }
    const auto events = g.advance(rng, cfg, std::ref(factory));
    std::multiset<std::string> after;
    for (const auto& m : g.members()) after.insert(m.key_b.hex());
    REQUIRE(std::set<std::string>(after.begin(), after.end()).size() == after.size());

    std::size_t regen_here = 0;
    std::set<std::uint64_t> touched;
    for (const auto& e : events) {
      touched.insert(e.member_ref);
      if (e.friend_ref) touched.insert(*e.friend_ref);
      if (e.kind == EventKind::kExchanged) ++exchanges;
      if (e.kind == EventKind::kRegenerated) ++regen_here;
    }
    regenerations += regen_here;
    if (regen_here == 0) REQUIRE(before == after);
    std::vector<std::string> diff;
    std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(diff));
    REQUIRE(diff.size() == regen_here);

    for (std::size_t i = 0; i < g.members().size(); ++i) {
      const auto& m = g.members()[i];
      if (touched.count(m.member_ref)) {
        REQUIRE(m.timer == 0);
      } else {
        REQUIRE(m.timer == timers_before[i] + 1);
      }
    }
    for (auto& m : g.members()) m.location.x += rng.between_signed(-5, 5);
  }
  CHECK(exchanges > 0);
  CHECK(regenerations > 0);
}

TEST_CASE("replay determinism") {
  const IgsConfig cfg{2, 6, 40};
  const auto a = run_group(99, 400, cfg, 30);
  const auto b = run_group(99, 400, cfg, 30);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t t = 0; t < a.events.size(); ++t) {
    REQUIRE(a.events[t].size() == b.events[t].size());
    for (std::size_t i = 0; i < a.events[t].size(); ++i) {
      REQUIRE(a.events[t][i].kind == b.events[t][i].kind);
      REQUIRE(a.events[t][i].member_ref == b.events[t][i].member_ref);
      REQUIRE(a.events[t][i].new_key == b.events[t][i].new_key);
    }
  }
  CHECK(a.keys == b.keys);
  const auto c = run_group(100, 400, cfg, 30);
  CHECK(c.keys != a.keys);
}

TEST_CASE("infinite tolerance never regenerates with friends present") {
  const IgsConfig cfg{1, 3, std::numeric_limits<double>::infinity()};
  const auto run = run_group(5, 200, cfg, 1e6);
  for (const auto& evs : run.events)
    for (const auto& e : evs) REQUIRE(e.kind == EventKind::kExchanged);
}

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "ncp/simulation.hpp"

using namespace ncp;
using namespace ncp::sim;

namespace {

SimulationConfig small_config() {
  SimulationConfig c;
  c.groups = 2;
  c.members_per_group = 3;
  c.ticks = 120;
  c.store_interval = 40;
  c.seed = 42;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(SimulationConfig{}.validate());
  SimulationConfig c;
  c.m = 6;
  CHECK_THROWS(c.validate());
  c = {};
  c.igs.silence_min = 40;
  CHECK_THROWS(c.validate());
  c = {};
  c.n = 13;
  CHECK_THROWS(c.validate());
  c = {};
  c.u = 10;
  c.m = 5;
  c.n = 10;
  c.k = 5;
  // 50 watchword bits cannot be filled by whole bytes of text.
  CHECK_THROWS(c.validate());
  c.n = 12;
  c.k = 6;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config json round trip") {
  SimulationConfig c = small_config();
  c.igs.tolerance_distance = std::numeric_limits<double>::infinity();
  c.level = protocol::PrivacyLevel::kCity;
  const auto j = nlohmann::json::parse(to_json(c).dump());
  const SimulationConfig back = config_from_json(j);
  CHECK(to_json(back) == to_json(c));
  CHECK(std::isinf(back.igs.tolerance_distance));
  CHECK_THROWS(config_from_json(nlohmann::json{{"bogus", 1}}));
  CHECK_THROWS(config_from_json(nlohmann::json{{"ticks", "many"}}));
  CHECK(config_from_json(nlohmann::json{{"ticks", 7}}).ticks == 7);
}

TEST_CASE("simulation invariants") {
  const auto r = run_simulation(small_config());
  CHECK(r.registry.size() == 6);
  CHECK(r.exchanges + r.regenerations > 0);
  CHECK(r.uncloak_mismatches == 0);
  CHECK(r.store_violations == 0);
  CHECK(r.live_sessions_after_teardown == 0);
  CHECK(r.engine_bytes_after_teardown == 0);
  CHECK(protocol::audit_decoupling(r.registry, r.odb).passed());
  // 3 stores per group (t = 40, 80, 120), 3 members each.
  CHECK(r.odb.size() == 2 * 3 * 3);
  for (const auto& rec : r.odb) {
    CHECK(rec.level == protocol::PrivacyLevel::kStreet);
    CHECK(rec.x % protocol::kStreetCell == 0);
  }
  for (const auto& c : r.customers) {
    CHECK_FALSE(r.tap.contains(c.watchword));
    CHECK_FALSE(r.tap.contains(c.imsi));
    CHECK_FALSE(r.tap.contains_on(protocol::Link::kClientEngine, c.id));
    CHECK_FALSE(r.tap.contains_on(protocol::Link::kEngineOdb, c.id));
  }
  for (const auto& reg : r.registry) CHECK_FALSE(r.tap.contains_on(protocol::Link::kEngineOdb, reg.keya));
  CHECK(r.event_log["eavesdrop"]["sha256"] == r.tap.digest());
}

TEST_CASE("same seed gives identical outputs, different seed differs") {
  const auto dir_a = std::filesystem::temp_directory_path() / "ncp_sim_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "ncp_sim_b";
  const auto a = run_simulation(small_config(), dir_a);
  const auto b = run_simulation(small_config(), dir_b);
  for (const char* f : {"events.json", "odb.jsonl", "registry.jsonl"}) {
    CHECK(!slurp(dir_a / f).empty());
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
  }
  CHECK(protocol::read_odb_file(dir_a / "odb.jsonl") == a.odb);
  CHECK(protocol::read_registry_file(dir_a / "registry.jsonl") == a.registry);
  CHECK(protocol::audit_files(dir_a / "registry.jsonl", dir_a / "odb.jsonl").passed());

  auto other = small_config();
  other.seed = 43;
  CHECK(run_simulation(other).event_log.dump() != a.event_log.dump());
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("infinite tolerance exchanges, zero tolerance only regenerates") {
  auto c = small_config();
  c.groups = 1;
  c.members_per_group = 3;
  c.ticks = 300;
  c.igs.tolerance_distance = std::numeric_limits<double>::infinity();
  auto r = run_simulation(c);
  CHECK(r.exchanges > 0);
  CHECK(r.regenerations == 0);
  CHECK(r.uncloak_mismatches == 0);

  c.igs.tolerance_distance = 0;
  c.area = 100000;
  r = run_simulation(c);
  CHECK(r.exchanges == 0);
  CHECK(r.regenerations > 0);
  for (const auto& e : r.event_log["events"]) CHECK(e["kind"] == "regenerated");
}

TEST_CASE("rekey on uncloak keeps the replay consistent") {
  auto c = small_config();
  c.rekey_on_uncloak = true;
  c.store_interval = 10;
  const auto r = run_simulation(c);
  CHECK(r.uncloak_mismatches == 0);
  CHECK(r.store_violations == 0);
  CHECK(r.live_sessions_after_teardown == 0);
}

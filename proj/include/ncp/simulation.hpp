#pragma once

// Seeded end-to-end run of the JOIN service: every customer registers and
// logs in, each group runs one activity while IGS ticks rotate the KeyBs,
// snapshots go to the ODB, and the activity is torn down at the end.
//
// Randomness comes from named substreams of the master seed:
//   keygen      customer secrets and the certifying server's seeds
//   igs         pseudonym exchange decisions and silence periods
//   simulation  spawn points and movement

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncp/igs.hpp"
#include "ncp/protocol.hpp"

namespace ncp::sim {

struct SimulationConfig {
  unsigned u = 8;
  std::size_t n = 14;
  std::size_t k = 7;
  std::size_t m = 7;
  std::size_t imsi_digits = 15;
  igs::IgsConfig igs;
  std::size_t groups = 3;
  std::size_t members_per_group = 4;
  std::uint64_t ticks = 500;
  protocol::PrivacyLevel level = protocol::PrivacyLevel::kStreet;
  std::uint64_t seed = 1;
  std::int64_t area = 1000;         // members spawn in [0, area)^2
  std::int64_t step = 10;           // max per-axis move per tick
  double search_radius = 200.0;
  std::uint64_t store_interval = 50;
  bool rekey_on_uncloak = false;

  // Throws std::invalid_argument (or KeygenError) on inconsistent values.
  void validate() const;
  keygen::KeygenParams params() const;
};

nlohmann::ordered_json to_json(const SimulationConfig& cfg);
// Fields missing from j keep the values of `base`. tolerance_distance may
// be a number or the string "inf".
SimulationConfig config_from_json(const nlohmann::json& j, SimulationConfig base = {});

struct CustomerSecrets {
  std::string id;
  std::string imsi;
  std::string watchword;
};

struct SimulationResult {
  nlohmann::ordered_json event_log;
  std::vector<protocol::RegistryRecord> registry;
  std::vector<protocol::OdbRecord> odb;
  protocol::EavesdropLog tap;
  std::vector<CustomerSecrets> customers;

  std::size_t exchanges = 0;
  std::size_t regenerations = 0;
  std::size_t keyb_collisions = 0;
  // Failures of the independent owner replay after exchanges.
  std::size_t uncloak_mismatches = 0;
  // Decoupling violations found by the audit run after every store.
  std::size_t store_violations = 0;
  std::size_t live_sessions_after_teardown = 0;
  std::size_t engine_bytes_after_teardown = 0;
};

// With out_dir set, writes registry.jsonl, odb.jsonl and events.json there.
SimulationResult run_simulation(const SimulationConfig& cfg,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace ncp::sim

#include "ncp/simulation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace ncp::sim {

using nlohmann::json;
using nlohmann::ordered_json;
using protocol::JoinService;
using protocol::Location;

void SimulationConfig::validate() const {
  igs.validate();
  (void)params();
  if (imsi_digits == 0 || imsi_digits > 19) throw std::invalid_argument("imsi_digits must be in [1, 19]");
  const std::size_t bits = keygen::imsi_bit_length(imsi_digits);
  if ((bits + u - 1) / u != m)
    throw std::invalid_argument("m must equal ceil(" + std::to_string(bits) + " / u) for " +
                                std::to_string(imsi_digits) + "-digit IMSIs");
  if ((n - m) * u / 8 * 8 < bits)
    throw std::invalid_argument("n - m symbols cannot hold a watchword as long as the IMSI");
  if (groups == 0 || members_per_group == 0) throw std::invalid_argument("groups and members must be positive");
  if (area <= 0 || step < 0) throw std::invalid_argument("area must be positive and step non-negative");
  if (!(search_radius >= 0)) throw std::invalid_argument("search_radius must be >= 0");
  if (store_interval == 0) throw std::invalid_argument("store_interval must be positive");
}

keygen::KeygenParams SimulationConfig::params() const {
  if (u < 1 || u > 16) throw std::invalid_argument("u must be in [1, 16]");
  return keygen::KeygenParams::make(keygen::Field(u), n, k, m, 0);
}

ordered_json to_json(const SimulationConfig& cfg) {
  ordered_json j;
  j["u"] = cfg.u;
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["m"] = cfg.m;
  j["imsi_digits"] = cfg.imsi_digits;
  j["silence_min"] = cfg.igs.silence_min;
  j["silence_max"] = cfg.igs.silence_max;
  if (std::isinf(cfg.igs.tolerance_distance))
    j["tolerance_distance"] = "inf";
  else
    j["tolerance_distance"] = cfg.igs.tolerance_distance;
  j["groups"] = cfg.groups;
  j["members_per_group"] = cfg.members_per_group;
  j["ticks"] = cfg.ticks;
  j["level"] = protocol::to_string(cfg.level);
  j["seed"] = cfg.seed;
  j["area"] = cfg.area;
  j["step"] = cfg.step;
  j["search_radius"] = cfg.search_radius;
  j["store_interval"] = cfg.store_interval;
  j["rekey_on_uncloak"] = cfg.rekey_on_uncloak;
  return j;
}

SimulationConfig config_from_json(const json& j, SimulationConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::set<std::string> known = {
      "u",      "n",         "k",     "m",     "imsi_digits",   "silence_min",   "silence_max",
      "tolerance_distance", "groups", "members_per_group", "ticks", "level", "seed",
      "area",   "step",      "search_radius", "store_interval", "rekey_on_uncloak"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown config field: " + key);
  try {
    if (j.contains("u")) c.u = j["u"].get<unsigned>();
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("k")) c.k = j["k"].get<std::size_t>();
    if (j.contains("m")) c.m = j["m"].get<std::size_t>();
    if (j.contains("imsi_digits")) c.imsi_digits = j["imsi_digits"].get<std::size_t>();
    if (j.contains("silence_min")) c.igs.silence_min = j["silence_min"].get<std::uint64_t>();
    if (j.contains("silence_max")) c.igs.silence_max = j["silence_max"].get<std::uint64_t>();
    if (j.contains("tolerance_distance")) {
      const auto& t = j["tolerance_distance"];
      if (t.is_string()) {
        if (t.get<std::string>() != "inf") throw std::invalid_argument("tolerance_distance must be a number or \"inf\"");
        c.igs.tolerance_distance = std::numeric_limits<double>::infinity();
      } else {
        c.igs.tolerance_distance = t.get<double>();
      }
    }
    if (j.contains("groups")) c.groups = j["groups"].get<std::size_t>();
    if (j.contains("members_per_group")) c.members_per_group = j["members_per_group"].get<std::size_t>();
    if (j.contains("ticks")) c.ticks = j["ticks"].get<std::uint64_t>();
    if (j.contains("level")) c.level = protocol::parse_privacy_level(j["level"].get<std::string>());
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("area")) c.area = j["area"].get<std::int64_t>();
    if (j.contains("step")) c.step = j["step"].get<std::int64_t>();
    if (j.contains("search_radius")) c.search_radius = j["search_radius"].get<double>();
    if (j.contains("store_interval")) c.store_interval = j["store_interval"].get<std::uint64_t>();
    if (j.contains("rekey_on_uncloak")) c.rekey_on_uncloak = j["rekey_on_uncloak"].get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return c;
}

namespace {

std::string random_digits(Rng& rng, std::size_t count) {
  std::string s;
  s += static_cast<char>('1' + rng.below(9));
  while (s.size() < count) s += static_cast<char>('0' + rng.below(10));
  return s;
}

std::string random_text(Rng& rng, std::size_t count) {
  static constexpr std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string s;
  while (s.size() < count) s += alphabet[rng.below(alphabet.size())];
  return s;
}

std::string random_hex(Rng& rng, std::size_t count) {
  static constexpr std::string_view digits = "0123456789abcdef";
  std::string s;
  while (s.size() < count) s += digits[rng.below(16)];
  return s;
}

struct Member {
  std::string id;
  std::string password;
  keygen::Key key_a;
};

// Scans everything the ODB actor has ever received for IDs and KeyAs.
std::size_t odb_leaks(const JoinService& svc, const std::vector<Member>& members) {
  std::size_t leaks = 0;
  for (const auto& msg : svc.tap().entries()) {
    if (msg.link != protocol::Link::kEngineOdb) continue;
    for (const auto& m : members) {
      if (msg.bytes.find("\"" + m.id + "\"") != std::string::npos) ++leaks;
      if (msg.bytes.find(m.key_a.hex()) != std::string::npos) ++leaks;
    }
  }
  return leaks;
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& cfg, const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const keygen::KeygenParams params = cfg.params();
  const keygen::Field& field = params.field;
  keygen::TwoTierCoder coder(params);

  Rng keygen_rng = Rng::substream(cfg.seed, "keygen");
  Rng igs_rng = Rng::substream(cfg.seed, "igs");
  Rng sim_rng = Rng::substream(cfg.seed, "simulation");

  protocol::OdbStore odb;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    odb = protocol::OdbStore(*out_dir / "odb.jsonl");
  }
  JoinService svc(coder, keygen_rng.split(), std::move(odb), {cfg.rekey_on_uncloak});

  SimulationResult result;
  ordered_json events = ordered_json::array();
  ordered_json stores = ordered_json::array();

  // Register and log in every customer; KeyA is computed client-side.
  std::vector<Member> members;
  std::vector<igs::Group> groups;
  std::map<std::uint64_t, std::string> owner;  // thread handle -> id, for replay checks
  const std::size_t imsi_bits = keygen::imsi_bit_length(cfg.imsi_digits);
  const std::size_t watchword_bytes = (cfg.n - cfg.m) * cfg.u / 8;
  for (std::size_t g = 0; g < cfg.groups; ++g) {
    const std::string group_id = "group-" + std::to_string(g);
    std::vector<igs::MemberState> states;
    for (std::size_t i = 0; i < cfg.members_per_group; ++i) {
      CustomerSecrets secrets{"cust-" + std::to_string(g) + "-" + std::to_string(i),
                              random_digits(keygen_rng, cfg.imsi_digits), random_text(keygen_rng, watchword_bytes)};
      const auto identity = keygen::Identity::from_digits(field, secrets.imsi);
      const auto watchword = keygen::Watchword::from_text(field, secrets.watchword, cfg.n - cfg.m, imsi_bits);
      Member mem{secrets.id, random_hex(keygen_rng, 16), coder.key_a(identity, watchword)};

      svc.register_customer(mem.id, mem.password, mem.key_a);
      const protocol::Session s = svc.login(mem.id, mem.password, mem.key_a);
      svc.subscribe(s, group_id);
      owner[s.thread_handle] = mem.id;

      igs::MemberState st;
      st.member_ref = s.thread_handle;
      st.key_b = s.key_b;
      st.location = {sim_rng.between_signed(0, cfg.area - 1), sim_rng.between_signed(0, cfg.area - 1)};
      st.silence_period = igs::draw_silence(cfg.igs, igs_rng);
      st.group_id = group_id;
      states.push_back(std::move(st));

      members.push_back(std::move(mem));
      result.customers.push_back(std::move(secrets));
    }
    groups.emplace_back(group_id, std::move(states));
  }

  // One activity per group, initiated by its first member.
  std::vector<protocol::ActivityId> activities;
  for (auto& grp : groups) {
    const auto& ms = grp.members();
    const auto a = svc.initiate_activity(svc.server().session(ms[0].member_ref), ms[0].location, grp.id(), cfg.level);
    for (std::size_t i = 1; i < ms.size(); ++i) svc.respond(a, svc.server().session(ms[i].member_ref), ms[i].location);
    activities.push_back(a);
  }

  const igs::KeyFactory regen = [&](const igs::MemberState& m) { return svc.regenerate(m.member_ref); };

  for (std::uint64_t t = 1; t <= cfg.ticks; ++t) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto& grp = groups[g];
      for (auto& m : grp.members()) {
        m.location.x += sim_rng.between_signed(-cfg.step, cfg.step);
        m.location.y += sim_rng.between_signed(-cfg.step, cfg.step);
      }

      for (const auto& e : grp.advance(igs_rng, cfg.igs, regen)) {
        ordered_json ev;
        ev["t"] = t;
        ev["group"] = grp.id();
        ev["kind"] = igs::to_string(e.kind);
        ev["member"] = owner.at(e.member_ref);
        if (e.kind == igs::EventKind::kExchanged) {
          ++result.exchanges;
          svc.notify_exchange(e.old_key, e.new_key);
          ev["friend"] = owner.at(*e.friend_ref);
          // Replay: the member now holds the friend's old KeyB and vice versa.
          if (svc.uncloak(e.new_key) != owner.at(e.member_ref)) ++result.uncloak_mismatches;
          if (svc.uncloak(e.old_key) != owner.at(*e.friend_ref)) ++result.uncloak_mismatches;
        } else {
          ++result.regenerations;
          if (svc.uncloak(e.new_key) != owner.at(e.member_ref)) ++result.uncloak_mismatches;
        }
        ev["old_keyb"] = e.old_key.hex();
        ev["new_keyb"] = e.new_key.hex();
        events.push_back(std::move(ev));
      }

      // Location round with the current KeyBs.
      const auto& ms = grp.members();
      svc.begin_round(activities[g], svc.server().session(ms[0].member_ref), ms[0].location);
      for (std::size_t i = 1; i < ms.size(); ++i)
        svc.respond(activities[g], svc.server().session(ms[i].member_ref), ms[i].location);

      if (t % cfg.store_interval == 0 || t == cfg.ticks) {
        const auto found = svc.resolve_nearby(activities[g], cfg.search_radius);
        const auto written = svc.store_record(activities[g], t);
        const auto report = protocol::audit_decoupling(svc.server().registry_records(), svc.odb().records());
        const std::size_t violations = report.violations.size() + odb_leaks(svc, members);
        result.store_violations += violations;
        if (cfg.rekey_on_uncloak) {
          // Rekeying bypasses the IGS groups; pull the new KeyBs back in.
          for (auto& m : grp.members()) m.key_b = svc.server().session(m.member_ref).key_b;
        }

        ordered_json st;
        st["t"] = t;
        st["group"] = grp.id();
        st["records"] = written.size();
        st["nearby"] = found.friend_ids.size();
        st["audit_violations"] = violations;
        stores.push_back(std::move(st));
      }
    }
  }

  for (auto a : activities) svc.end_activity(a);

  result.keyb_collisions = svc.server().collisions();
  result.live_sessions_after_teardown = svc.server().session_map().size();
  result.engine_bytes_after_teardown = svc.engine_memory_bytes() == "[]" ? 0 : svc.engine_memory_bytes().size();
  result.registry = svc.server().registry_records();
  result.odb = svc.odb().records();
  result.tap = svc.tap();

  ordered_json summary;
  summary["exchanged"] = result.exchanges;
  summary["regenerated"] = result.regenerations;
  summary["keyb_collisions"] = result.keyb_collisions;
  summary["uncloak_mismatches"] = result.uncloak_mismatches;
  summary["store_violations"] = result.store_violations;
  summary["registry_records"] = result.registry.size();
  summary["odb_records"] = result.odb.size();
  summary["live_sessions_after_teardown"] = result.live_sessions_after_teardown;

  ordered_json tap;
  tap["messages"] = result.tap.size();
  tap["sha256"] = result.tap.digest();

  ordered_json& log = result.event_log;
  log["config"] = to_json(cfg);
  log["events"] = std::move(events);
  log["stores"] = std::move(stores);
  log["summary"] = std::move(summary);
  log["eavesdrop"] = std::move(tap);

  if (out_dir) {
    protocol::write_registry_file(*out_dir / "registry.jsonl", result.registry);
    std::ofstream out(*out_dir / "events.json", std::ios::binary | std::ios::trunc);
    out << log.dump(2) << '\n';
    if (!out) throw protocol::StoreError("cannot write events.json");
  }
  return result;
}

}  // namespace ncp::sim

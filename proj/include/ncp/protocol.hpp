#pragma once

// Group LBS protocol simulation with four actors: clients, the certifying
// server (trusted; holds ID -> (password verifier, KeyA) on disk and
// KeyB -> ID in memory), the service engine (semi-honest; sees only KeyB and
// location) and the outsourced database (semi-honest; stores KeyB with a
// coarsened location). Every inter-actor message is serialized and recorded
// on an eavesdropper tap.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ncp/igs.hpp"
#include "ncp/keygen.hpp"
#include "ncp/rng.hpp"

namespace ncp::protocol {

using igs::Location;
using keygen::Key;

enum class PrivacyLevel { kExact, kStreet, kCity };

std::string_view to_string(PrivacyLevel level);
PrivacyLevel parse_privacy_level(std::string_view s);

inline constexpr std::int64_t kStreetCell = 100;    // meters
inline constexpr std::int64_t kCityCell = 10'000;   // meters

// Snaps each coordinate down to the level's grid (identity for kExact).
Location coarsen(Location loc, PrivacyLevel level);

// ---------------------------------------------------------------------------
// Wire and eavesdropper

enum class Link { kClientCert, kClientEngine, kEngineCert, kEngineOdb };

std::string_view to_string(Link link);

struct TappedMessage {
  Link link;
  std::string bytes;
};

class EavesdropLog {
 public:
  void append(Link link, std::string bytes) { entries_.push_back({link, std::move(bytes)}); }
  const std::vector<TappedMessage>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(std::string_view needle) const;
  bool contains_on(Link link, std::string_view needle) const;
  // SHA-256 over "link\tbytes\n" for every entry, hex.
  std::string digest() const;

 private:
  std::vector<TappedMessage> entries_;
};

// In-process transport. transmit() serializes the message, records the
// bytes on the tap and hands the receiver a copy decoded from those bytes.
class MessageBus {
 public:
  explicit MessageBus(EavesdropLog& log) : log_(&log) {}
  nlohmann::json transmit(Link link, const nlohmann::json& msg);

 private:
  EavesdropLog* log_;
};

// ---------------------------------------------------------------------------
// Persistent records

struct RegistryRecord {
  std::string id;
  std::string pw;    // hex: 16-byte salt followed by SHA-256(salt || password)
  std::string keya;  // canonical Key hex

  friend bool operator==(const RegistryRecord&, const RegistryRecord&) = default;
};

struct OdbRecord {
  std::string keyb;
  std::int64_t x = 0;
  std::int64_t y = 0;
  PrivacyLevel level = PrivacyLevel::kExact;
  std::uint64_t t = 0;
  std::string group;

  friend bool operator==(const OdbRecord&, const OdbRecord&) = default;
};

// One compact JSON object per line, fields in the documented order.
std::string to_json_line(const RegistryRecord& r);
std::string to_json_line(const OdbRecord& r);
RegistryRecord parse_registry_line(std::string_view line);
OdbRecord parse_odb_line(std::string_view line);

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_registry_file(const std::filesystem::path& path, const std::vector<RegistryRecord>& records);
void write_odb_file(const std::filesystem::path& path, const std::vector<OdbRecord>& records);
std::vector<RegistryRecord> read_registry_file(const std::filesystem::path& path);
std::vector<OdbRecord> read_odb_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  kDuplicateId,
  kDuplicateKey,
  kMalformedKey,
  kUnknownId,
  kBadPassword,
  kKeyMismatch,
  kUnknownKey,
  kStaleKey,
  kNoActivity,
};

std::string_view to_string(ErrorCode code);

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Certifying server

struct Session {
  std::string id;
  Key key_b;
  std::uint64_t thread_handle = 0;
};

// Generates a candidate KeyB for a KeyA; the server redraws on collision.
using KeyBSource = std::function<Key(const Key& key_a)>;

class CertifyingServer {
 public:
  CertifyingServer(keygen::TwoTierCoder coder, Rng rng);

  void set_keyb_source(KeyBSource source) { keyb_source_ = std::move(source); }

  void register_customer(const std::string& id, const std::string& password, const Key& key_a);
  // Verifies credentials, issues a fresh collision-free KeyB and binds it.
  Session login(const std::string& id, const std::string& password, const Key& key_a);

  // Owner of a live KeyB; throws ProtocolError(kUnknownKey) otherwise.
  std::string uncloak(const Key& key_b) const;
  bool is_live(const Key& key_b) const { return session_map_.count(key_b.hex()) != 0; }

  // IGS hooks. regenerate() replaces the KeyB of a session; apply_exchange()
  // rebinds two live KeyBs after their holders swapped them.
  Key regenerate(std::uint64_t thread_handle);
  void apply_exchange(const Key& first, const Key& second);

  // Drops sessions (and their KeyB bindings) from memory.
  void end_sessions(const std::vector<std::uint64_t>& thread_handles);

  const Session& session(std::uint64_t thread_handle) const;
  std::optional<std::uint64_t> handle_of(const std::string& id) const;
  const std::map<std::string, std::string>& session_map() const { return session_map_; }
  std::vector<RegistryRecord> registry_records() const;
  std::size_t registry_size() const { return registry_.size(); }
  // Number of KeyB candidates rejected by the validity check.
  std::size_t collisions() const { return collisions_; }

 private:
  struct Entry {
    std::string pw;
    Key key_a;
  };

  std::string make_verifier(const std::string& password);
  static bool check_verifier(const std::string& verifier, const std::string& password);
  Key fresh_keyb(const Key& key_a);

  keygen::TwoTierCoder coder_;
  Rng rng_;
  KeyBSource keyb_source_;
  std::map<std::string, Entry> registry_;              // persistent
  std::set<std::string> registered_keya_;
  std::map<std::string, std::string> session_map_;     // KeyB hex -> ID, memory only
  std::map<std::uint64_t, Session> sessions_;          // thread handle -> session
  std::map<std::string, std::uint64_t> handle_of_id_;
  std::uint64_t next_handle_ = 1;
  std::size_t collisions_ = 0;
};

// ---------------------------------------------------------------------------
// Outsourced database

class OdbStore {
 public:
  OdbStore() = default;
  // Records are also appended to this file, one JSON line each.
  explicit OdbStore(std::filesystem::path path);

  void append(const OdbRecord& record);
  const std::vector<OdbRecord>& records() const { return records_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<OdbRecord> records_;
};

// ---------------------------------------------------------------------------
// JOIN service: client-facing operations routed over the bus

using ActivityId = std::uint64_t;

struct NearbyEntry {
  Key key_b;
  Location location;
};

struct ServiceResult {
  std::vector<std::string> friend_ids;
  std::vector<std::string> group_info;
};

struct JoinOptions {
  // Issue a new KeyB to every uncloaked member instead of waiting for the
  // IGS timer.
  bool rekey_on_uncloak = false;
};

class JoinService {
 public:
  JoinService(keygen::TwoTierCoder coder, Rng rng, OdbStore odb, JoinOptions options = {});

  CertifyingServer& server() { return server_; }
  const CertifyingServer& server() const { return server_; }
  const OdbStore& odb() const { return odb_; }
  const EavesdropLog& tap() const { return tap_; }

  void register_customer(const std::string& id, const std::string& password, const Key& key_a);
  Session login(const std::string& id, const std::string& password, const Key& key_a);
  // Tells the certifying server which group the session belongs to, so it
  // can fan invitations out without the engine learning membership.
  void subscribe(const Session& session, const std::string& group_id);

  // Initiator's (KeyB, location) is buffered and invitations go to the
  // other subscribed members of the group.
  ActivityId initiate_activity(const Session& session, Location location, const std::string& group_id,
                               PrivacyLevel level);
  // Throws ProtocolError(kStaleKey) when the KeyB is not live.
  void respond(ActivityId activity, const Session& session, Location location);
  // Clears the buffered responses (keeps the initiator) ahead of a new
  // round of respond() calls.
  void begin_round(ActivityId activity, const Session& initiator, Location location);

  std::vector<NearbyEntry> nearby_search(ActivityId activity, double radius) const;
  // Sends the nearby KeyBs to the certifying server, which uncloaks them and
  // returns the service result to the initiator.
  ServiceResult resolve_nearby(ActivityId activity, double radius);
  std::string uncloak(const Key& key_b) const { return server_.uncloak(key_b); }

  // One record per buffered member, coarsened to the activity's level.
  std::vector<OdbRecord> store_record(ActivityId activity, std::uint64_t now);
  // Clears engine memory for the activity and the participants' sessions.
  void end_activity(ActivityId activity);

  // Serialized engine memory, for leak scans.
  std::string engine_memory_bytes() const;
  std::size_t buffered(ActivityId activity) const;

  // Rebinding after IGS events, with the change pushed to the client(s).
  void notify_exchange(const Key& first, const Key& second);
  Key regenerate(std::uint64_t thread_handle);

 private:
  // Service engine memory for one activity.
  struct EngineActivity {
    std::string group;
    PrivacyLevel level = PrivacyLevel::kExact;
    std::string initiator_keyb;
    std::vector<std::pair<std::string, Location>> entries;  // (KeyB hex, location)
  };

  EngineActivity& engine_activity(ActivityId id);
  const EngineActivity& engine_activity(ActivityId id) const;
  // Engine asks the certifying server whether a KeyB is live.
  bool engine_validates(const std::string& keyb_hex);
  void buffer(EngineActivity& act, const Session& session, Location location);

  EavesdropLog tap_;
  MessageBus bus_;
  CertifyingServer server_;
  OdbStore odb_;
  JoinOptions options_;
  std::map<std::string, std::vector<std::uint64_t>> roster_;  // certifying server side
  std::map<ActivityId, EngineActivity> engine_;
  ActivityId next_activity_ = 1;
};

// ---------------------------------------------------------------------------
// Decoupling audit

struct Violation {
  std::string store;     // "odb" or "registry"
  std::size_t line = 0;  // 1-based line in that store
  std::string field;
  std::string reason;
};

struct AuditReport {
  std::vector<Violation> violations;
  std::size_t registry_records = 0;
  std::size_t odb_records = 0;
  bool passed() const { return violations.empty(); }
  nlohmann::ordered_json to_json() const;
};

// Flags any ODB field equal to an ID or KeyA (or containing a KeyA), and
// any ODB KeyB that joins with a registered KeyA.
AuditReport audit_decoupling(const std::vector<RegistryRecord>& registry, const std::vector<OdbRecord>& odb);
// Same over files; unparsable lines are reported as violations.
AuditReport audit_files(const std::filesystem::path& registry_path, const std::filesystem::path& odb_path);

}  // namespace ncp::protocol

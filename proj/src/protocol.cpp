#include "ncp/protocol.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "ncp/digest.hpp"

namespace ncp::protocol {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::int64_t floor_to(std::int64_t v, std::int64_t cell) {
  std::int64_t q = v / cell;
  if (v % cell != 0 && v < 0) --q;
  return q * cell;
}

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

// Static stand-in for the engine's group information service.
constexpr std::array<std::string_view, 3> kGroupInfo = {
    "top restaurants nearby",
    "cinemas open now",
    "parks within walking distance",
};

}  // namespace

std::string_view to_string(PrivacyLevel level) {
  switch (level) {
    case PrivacyLevel::kExact:
      return "exact";
    case PrivacyLevel::kStreet:
      return "street";
    case PrivacyLevel::kCity:
      return "city";
  }
  return "?";
}

PrivacyLevel parse_privacy_level(std::string_view s) {
  if (s == "exact") return PrivacyLevel::kExact;
  if (s == "street") return PrivacyLevel::kStreet;
  if (s == "city") return PrivacyLevel::kCity;
  throw std::invalid_argument("unknown privacy level: " + std::string(s));
}

Location coarsen(Location loc, PrivacyLevel level) {
  switch (level) {
    case PrivacyLevel::kExact:
      return loc;
    case PrivacyLevel::kStreet:
      return {floor_to(loc.x, kStreetCell), floor_to(loc.y, kStreetCell)};
    case PrivacyLevel::kCity:
      return {floor_to(loc.x, kCityCell), floor_to(loc.y, kCityCell)};
  }
  return loc;
}

std::string_view to_string(Link link) {
  switch (link) {
    case Link::kClientCert:
      return "client-cert";
    case Link::kClientEngine:
      return "client-engine";
    case Link::kEngineCert:
      return "engine-cert";
    case Link::kEngineOdb:
      return "engine-odb";
  }
  return "?";
}

bool EavesdropLog::contains(std::string_view needle) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const TappedMessage& m) { return m.bytes.find(needle) != std::string::npos; });
}

bool EavesdropLog::contains_on(Link link, std::string_view needle) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const TappedMessage& m) {
    return m.link == link && m.bytes.find(needle) != std::string::npos;
  });
}

std::string EavesdropLog::digest() const {
  std::string all;
  for (const auto& m : entries_) {
    all += to_string(m.link);
    all += '\t';
    all += m.bytes;
    all += '\n';
  }
  return to_hex(ncp::digest(DigestAlgorithm::kSha256, bytes_of(all)));
}

json MessageBus::transmit(Link link, const json& msg) {
  std::string bytes = msg.dump();
  json received = json::parse(bytes);
  log_->append(link, std::move(bytes));
  return received;
}

// ---------------------------------------------------------------------------

std::string to_json_line(const RegistryRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["pw"] = r.pw;
  j["keya"] = r.keya;
  return j.dump();
}

std::string to_json_line(const OdbRecord& r) {
  ordered_json j;
  j["keyb"] = r.keyb;
  j["x"] = r.x;
  j["y"] = r.y;
  j["level"] = to_string(r.level);
  j["t"] = r.t;
  j["group"] = r.group;
  return j.dump();
}

namespace {

json parse_object(std::string_view line, std::initializer_list<std::string_view> fields) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw StoreError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw StoreError("record is not a JSON object");
  if (j.size() != fields.size()) throw StoreError("record has unexpected fields");
  for (auto f : fields)
    if (!j.contains(std::string(f))) throw StoreError("record lacks field " + std::string(f));
  return j;
}

template <typename T>
T field_as(const json& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw StoreError(std::string("bad type for field ") + name);
  }
}

}  // namespace

RegistryRecord parse_registry_line(std::string_view line) {
  const json j = parse_object(line, {"id", "pw", "keya"});
  return {field_as<std::string>(j, "id"), field_as<std::string>(j, "pw"), field_as<std::string>(j, "keya")};
}

OdbRecord parse_odb_line(std::string_view line) {
  const json j = parse_object(line, {"keyb", "x", "y", "level", "t", "group"});
  if (!j.at("x").is_number_integer() || !j.at("y").is_number_integer() || !j.at("t").is_number_unsigned())
    throw StoreError("coordinates and timestamp must be integers");
  OdbRecord r;
  r.keyb = field_as<std::string>(j, "keyb");
  r.x = field_as<std::int64_t>(j, "x");
  r.y = field_as<std::int64_t>(j, "y");
  try {
    r.level = parse_privacy_level(field_as<std::string>(j, "level"));
  } catch (const std::invalid_argument& e) {
    throw StoreError(e.what());
  }
  r.t = field_as<std::uint64_t>(j, "t");
  r.group = field_as<std::string>(j, "group");
  return r;
}

namespace {

template <typename R>
void write_lines(const std::filesystem::path& path, const std::vector<R>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << to_json_line(r) << '\n';
  out.flush();
  if (!out) throw StoreError("write failed: " + path.string());
}

template <typename R, typename Parse>
std::vector<R> read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  std::vector<R> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const StoreError& e) {
      throw StoreError(path.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void write_registry_file(const std::filesystem::path& path, const std::vector<RegistryRecord>& records) {
  write_lines(path, records);
}

void write_odb_file(const std::filesystem::path& path, const std::vector<OdbRecord>& records) {
  write_lines(path, records);
}

std::vector<RegistryRecord> read_registry_file(const std::filesystem::path& path) {
  return read_lines<RegistryRecord>(path, parse_registry_line);
}

std::vector<OdbRecord> read_odb_file(const std::filesystem::path& path) {
  return read_lines<OdbRecord>(path, parse_odb_line);
}

// ---------------------------------------------------------------------------

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateId:
      return "duplicate id";
    case ErrorCode::kDuplicateKey:
      return "duplicate key";
    case ErrorCode::kMalformedKey:
      return "malformed key";
    case ErrorCode::kUnknownId:
      return "unknown id";
    case ErrorCode::kBadPassword:
      return "bad password";
    case ErrorCode::kKeyMismatch:
      return "key mismatch";
    case ErrorCode::kUnknownKey:
      return "unknown key";
    case ErrorCode::kStaleKey:
      return "stale key";
    case ErrorCode::kNoActivity:
      return "no such activity";
  }
  return "?";
}

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& detail = {}) {
  std::string what(to_string(code));
  if (!detail.empty()) what += ": " + detail;
  throw ProtocolError(code, what);
}

}  // namespace

CertifyingServer::CertifyingServer(keygen::TwoTierCoder coder, Rng rng)
    : coder_(std::move(coder)), rng_(rng) {
  keyb_source_ = [this](const Key& key_a) { return coder_.key_b(key_a, rng_); };
}

std::string CertifyingServer::make_verifier(const std::string& password) {
  std::vector<std::uint8_t> salt(16);
  for (std::size_t i = 0; i < salt.size(); i += 8) {
    const std::uint64_t r = rng_.next();
    for (std::size_t j = 0; j < 8; ++j) salt[i + j] = static_cast<std::uint8_t>(r >> (8 * j));
  }
  std::vector<std::uint8_t> input = salt;
  input.insert(input.end(), password.begin(), password.end());
  return to_hex(salt) + to_hex(digest(DigestAlgorithm::kSha256, input));
}

bool CertifyingServer::check_verifier(const std::string& verifier, const std::string& password) {
  if (verifier.size() != 32 + 64) return false;
  std::vector<std::uint8_t> input = from_hex(std::string_view(verifier).substr(0, 32));
  input.insert(input.end(), password.begin(), password.end());
  return to_hex(digest(DigestAlgorithm::kSha256, input)) == verifier.substr(32);
}

void CertifyingServer::register_customer(const std::string& id, const std::string& password, const Key& key_a) {
  if (id.empty()) fail(ErrorCode::kUnknownId, "empty id");
  if (registry_.count(id)) fail(ErrorCode::kDuplicateId, id);
  const auto& params = coder_.params();
  if (key_a.scheme != keygen::Scheme::kNetworkCoding || key_a.role != keygen::KeyRole::kKeyA ||
      key_a.material.size() != params.k * params.field.symbol_bytes())
    fail(ErrorCode::kMalformedKey, "KeyA has wrong scheme, role or length");
  try {
    (void)key_a.symbols(params.field);
  } catch (const std::exception& e) {
    fail(ErrorCode::kMalformedKey, e.what());
  }
  if (registered_keya_.count(key_a.hex())) fail(ErrorCode::kDuplicateKey, "KeyA already registered");
  registry_.emplace(id, Entry{make_verifier(password), key_a});
  registered_keya_.insert(key_a.hex());
}

Key CertifyingServer::fresh_keyb(const Key& key_a) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Key cand = keyb_source_(key_a);
    const std::string h = cand.hex();
    if (!session_map_.count(h) && !registered_keya_.count(h)) return cand;
    ++collisions_;
  }
  throw std::runtime_error("KeyB source keeps producing colliding keys");
}

Session CertifyingServer::login(const std::string& id, const std::string& password, const Key& key_a) {
  const auto it = registry_.find(id);
  if (it == registry_.end()) fail(ErrorCode::kUnknownId, id);
  if (!check_verifier(it->second.pw, password)) fail(ErrorCode::kBadPassword);
  if (!(it->second.key_a == key_a)) fail(ErrorCode::kKeyMismatch);

  // One live session per ID: a repeated login replaces the old one.
  if (const auto h = handle_of_id_.find(id); h != handle_of_id_.end()) end_sessions({h->second});

  Session s;
  s.id = id;
  s.key_b = fresh_keyb(key_a);
  s.thread_handle = next_handle_++;
  session_map_.emplace(s.key_b.hex(), id);
  sessions_.emplace(s.thread_handle, s);
  handle_of_id_.emplace(id, s.thread_handle);
  return s;
}

std::string CertifyingServer::uncloak(const Key& key_b) const {
  const auto it = session_map_.find(key_b.hex());
  if (it == session_map_.end()) fail(ErrorCode::kUnknownKey, "authentication failure");
  return it->second;
}

const Session& CertifyingServer::session(std::uint64_t thread_handle) const {
  const auto it = sessions_.find(thread_handle);
  if (it == sessions_.end()) fail(ErrorCode::kUnknownId, "no session for handle");
  return it->second;
}

std::optional<std::uint64_t> CertifyingServer::handle_of(const std::string& id) const {
  const auto it = handle_of_id_.find(id);
  if (it == handle_of_id_.end()) return std::nullopt;
  return it->second;
}

Key CertifyingServer::regenerate(std::uint64_t thread_handle) {
  const auto it = sessions_.find(thread_handle);
  if (it == sessions_.end()) fail(ErrorCode::kUnknownId, "no session for handle");
  Session& s = it->second;
  Key fresh = fresh_keyb(registry_.at(s.id).key_a);
  session_map_.erase(s.key_b.hex());
  session_map_.emplace(fresh.hex(), s.id);
  s.key_b = fresh;
  return fresh;
}

void CertifyingServer::apply_exchange(const Key& first, const Key& second) {
  const auto a = session_map_.find(first.hex());
  const auto b = session_map_.find(second.hex());
  if (a == session_map_.end() || b == session_map_.end()) fail(ErrorCode::kUnknownKey, "exchange of unbound KeyB");
  const std::string id_a = a->second;
  const std::string id_b = b->second;
  a->second = id_b;
  b->second = id_a;
  sessions_.at(handle_of_id_.at(id_a)).key_b = second;
  sessions_.at(handle_of_id_.at(id_b)).key_b = first;
}

void CertifyingServer::end_sessions(const std::vector<std::uint64_t>& thread_handles) {
  for (auto h : thread_handles) {
    const auto it = sessions_.find(h);
    if (it == sessions_.end()) continue;
    session_map_.erase(it->second.key_b.hex());
    handle_of_id_.erase(it->second.id);
    sessions_.erase(it);
  }
}

std::vector<RegistryRecord> CertifyingServer::registry_records() const {
  std::vector<RegistryRecord> out;
  out.reserve(registry_.size());
  for (const auto& [id, e] : registry_) out.push_back({id, e.pw, e.key_a.hex()});
  return out;
}

// ---------------------------------------------------------------------------

OdbStore::OdbStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ofstream out(*path_, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot create " + path_->string());
}

void OdbStore::append(const OdbRecord& record) {
  if (path_) {
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    out << to_json_line(record) << '\n';
    out.flush();
    if (!out) throw StoreError("write failed: " + path_->string());
  }
  records_.push_back(record);
}

// ---------------------------------------------------------------------------

JoinService::JoinService(keygen::TwoTierCoder coder, Rng rng, OdbStore odb, JoinOptions options)
    : bus_(tap_), server_(std::move(coder), rng), odb_(std::move(odb)), options_(options) {}

void JoinService::register_customer(const std::string& id, const std::string& password, const Key& key_a) {
  const json req = bus_.transmit(Link::kClientCert,
                                 {{"type", "register"}, {"id", id}, {"pw", password}, {"keya", key_a.hex()}});
  Key received = key_a;
  received.material = from_hex(req.at("keya").get<std::string>());
  try {
    server_.register_customer(req.at("id"), req.at("pw"), received);
  } catch (const ProtocolError& e) {
    bus_.transmit(Link::kClientCert, {{"type", "reject"}, {"reason", to_string(e.code())}});
    throw;
  }
  bus_.transmit(Link::kClientCert, {{"type", "registered"}});
}

Session JoinService::login(const std::string& id, const std::string& password, const Key& key_a) {
  const json req =
      bus_.transmit(Link::kClientCert, {{"type", "login"}, {"id", id}, {"pw", password}, {"keya", key_a.hex()}});
  Key received = key_a;
  received.material = from_hex(req.at("keya").get<std::string>());
  Session s;
  try {
    s = server_.login(req.at("id"), req.at("pw"), received);
  } catch (const ProtocolError& e) {
    bus_.transmit(Link::kClientCert, {{"type", "reject"}, {"reason", to_string(e.code())}});
    throw;
  }
  bus_.transmit(Link::kClientCert, {{"type", "session"}, {"keyb", s.key_b.hex()}});
  return s;
}

void JoinService::subscribe(const Session& session, const std::string& group_id) {
  bus_.transmit(Link::kClientCert, {{"type", "subscribe"}, {"keyb", session.key_b.hex()}, {"group", group_id}});
  auto& members = roster_[group_id];
  if (std::find(members.begin(), members.end(), session.thread_handle) == members.end())
    members.push_back(session.thread_handle);
}

JoinService::EngineActivity& JoinService::engine_activity(ActivityId id) {
  const auto it = engine_.find(id);
  if (it == engine_.end()) fail(ErrorCode::kNoActivity, std::to_string(id));
  return it->second;
}

const JoinService::EngineActivity& JoinService::engine_activity(ActivityId id) const {
  const auto it = engine_.find(id);
  if (it == engine_.end()) fail(ErrorCode::kNoActivity, std::to_string(id));
  return it->second;
}

bool JoinService::engine_validates(const std::string& keyb_hex) {
  bus_.transmit(Link::kEngineCert, {{"type", "validate"}, {"keyb", keyb_hex}});
  Key probe;
  probe.role = keygen::KeyRole::kKeyB;
  probe.material = from_hex(keyb_hex);
  const json reply = bus_.transmit(Link::kEngineCert, {{"type", "valid"}, {"live", server_.is_live(probe)}});
  return reply.at("live").get<bool>();
}

void JoinService::buffer(EngineActivity& act, const Session& session, Location location) {
  const json msg = bus_.transmit(Link::kClientEngine, {{"type", "location"},
                                                       {"keyb", session.key_b.hex()},
                                                       {"x", location.x},
                                                       {"y", location.y}});
  const std::string keyb = msg.at("keyb");
  if (!engine_validates(keyb)) {
    bus_.transmit(Link::kClientEngine, {{"type", "reject"}, {"reason", "stale key"}});
    fail(ErrorCode::kStaleKey);
  }
  const Location loc{msg.at("x").get<std::int64_t>(), msg.at("y").get<std::int64_t>()};
  auto it = std::find_if(act.entries.begin(), act.entries.end(), [&](const auto& e) { return e.first == keyb; });
  if (it != act.entries.end())
    it->second = loc;
  else
    act.entries.emplace_back(keyb, loc);
}

ActivityId JoinService::initiate_activity(const Session& session, Location location, const std::string& group_id,
                                          PrivacyLevel level) {
  const json req = bus_.transmit(Link::kClientEngine, {{"type", "initiate"},
                                                       {"keyb", session.key_b.hex()},
                                                       {"group", group_id},
                                                       {"level", to_string(level)}});
  const ActivityId id = next_activity_++;
  EngineActivity act;
  act.group = req.at("group");
  act.level = parse_privacy_level(req.at("level").get<std::string>());
  act.initiator_keyb = req.at("keyb");
  buffer(act, session, location);
  engine_.emplace(id, std::move(act));

  // The certifying server knows group membership and forwards invitations.
  bus_.transmit(Link::kEngineCert, {{"type", "fanout"}, {"activity", id}, {"group", group_id}});
  for (auto h : roster_[group_id]) {
    if (h == session.thread_handle) continue;
    bus_.transmit(Link::kClientCert, {{"type", "invite"}, {"activity", id}, {"group", group_id}});
  }
  return id;
}

void JoinService::respond(ActivityId activity, const Session& session, Location location) {
  buffer(engine_activity(activity), session, location);
}

void JoinService::begin_round(ActivityId activity, const Session& initiator, Location location) {
  EngineActivity& act = engine_activity(activity);
  act.entries.clear();
  act.initiator_keyb = initiator.key_b.hex();
  buffer(act, initiator, location);
}

std::vector<NearbyEntry> JoinService::nearby_search(ActivityId activity, double radius) const {
  const EngineActivity& act = engine_activity(activity);
  const auto self = std::find_if(act.entries.begin(), act.entries.end(),
                                 [&](const auto& e) { return e.first == act.initiator_keyb; });
  if (self == act.entries.end()) fail(ErrorCode::kStaleKey, "initiator has no buffered location");
  std::vector<NearbyEntry> out;
  for (const auto& [keyb, loc] : act.entries) {
    if (igs::distance(self->second, loc) > radius) continue;
    Key k;
    k.role = keygen::KeyRole::kKeyB;
    k.material = from_hex(keyb);
    out.push_back({std::move(k), loc});
  }
  return out;
}

ServiceResult JoinService::resolve_nearby(ActivityId activity, double radius) {
  const EngineActivity& act = engine_activity(activity);
  const auto nearby = nearby_search(activity, radius);
  json keybs = json::array();
  for (const auto& e : nearby) keybs.push_back(e.key_b.hex());
  const json req = bus_.transmit(
      Link::kEngineCert, {{"type", "uncloak"}, {"initiator", act.initiator_keyb}, {"keybs", keybs}});

  Key initiator;
  initiator.role = keygen::KeyRole::kKeyB;
  initiator.material = from_hex(req.at("initiator").get<std::string>());
  const std::string self = server_.uncloak(initiator);

  ServiceResult result;
  std::vector<Key> uncloaked;
  for (const auto& h : req.at("keybs")) {
    Key k;
    k.role = keygen::KeyRole::kKeyB;
    k.material = from_hex(h.get<std::string>());
    const std::string id = server_.uncloak(k);
    if (id != self) result.friend_ids.push_back(id);
    uncloaked.push_back(std::move(k));
  }
  for (auto s : kGroupInfo) result.group_info.emplace_back(s);
  bus_.transmit(Link::kClientCert,
                {{"type", "result"}, {"friends", result.friend_ids}, {"info", result.group_info}});

  if (options_.rekey_on_uncloak)
    for (const auto& k : uncloaked) regenerate(*server_.handle_of(server_.uncloak(k)));
  return result;
}

std::vector<OdbRecord> JoinService::store_record(ActivityId activity, std::uint64_t now) {
  const EngineActivity& act = engine_activity(activity);
  std::vector<OdbRecord> out;
  for (const auto& [keyb, loc] : act.entries) {
    const Location c = coarsen(loc, act.level);
    OdbRecord r{keyb, c.x, c.y, act.level, now, act.group};
    const json msg = bus_.transmit(Link::kEngineOdb, json::parse(to_json_line(r)));
    OdbRecord received = parse_odb_line(msg.dump());
    odb_.append(received);
    out.push_back(std::move(received));
  }
  return out;
}

void JoinService::end_activity(ActivityId activity) {
  const std::string group = engine_activity(activity).group;
  engine_.erase(activity);
  bus_.transmit(Link::kEngineCert, {{"type", "end"}, {"activity", activity}, {"group", group}});
  const auto it = roster_.find(group);
  if (it == roster_.end()) return;
  server_.end_sessions(it->second);
  roster_.erase(it);
}

std::string JoinService::engine_memory_bytes() const {
  json j = json::array();
  for (const auto& [id, act] : engine_) {
    json entries = json::array();
    for (const auto& [keyb, loc] : act.entries) entries.push_back({keyb, loc.x, loc.y});
    j.push_back({{"activity", id},
                 {"group", act.group},
                 {"level", to_string(act.level)},
                 {"initiator", act.initiator_keyb},
                 {"entries", entries}});
  }
  return j.dump();
}

std::size_t JoinService::buffered(ActivityId activity) const { return engine_activity(activity).entries.size(); }

void JoinService::notify_exchange(const Key& first, const Key& second) {
  server_.apply_exchange(first, second);
  bus_.transmit(Link::kClientCert, {{"type", "keyb"}, {"keyb", second.hex()}});
  bus_.transmit(Link::kClientCert, {{"type", "keyb"}, {"keyb", first.hex()}});
}

Key JoinService::regenerate(std::uint64_t thread_handle) {
  Key fresh = server_.regenerate(thread_handle);
  bus_.transmit(Link::kClientCert, {{"type", "keyb"}, {"keyb", fresh.hex()}});
  return fresh;
}

// ---------------------------------------------------------------------------

ordered_json AuditReport::to_json() const {
  ordered_json j;
  j["passed"] = passed();
  j["registry_records"] = registry_records;
  j["odb_records"] = odb_records;
  ordered_json v = ordered_json::array();
  for (const auto& x : violations) {
    ordered_json e;
    e["store"] = x.store;
    e["line"] = x.line;
    e["field"] = x.field;
    e["reason"] = x.reason;
    v.push_back(std::move(e));
  }
  j["violations"] = std::move(v);
  return j;
}

namespace {

// odb_lines[i] is the 1-based file line of odb[i].
AuditReport audit_impl(const std::vector<RegistryRecord>& registry, const std::vector<OdbRecord>& odb,
                       const std::vector<std::size_t>& odb_lines) {
  AuditReport report;
  report.registry_records = registry.size();
  report.odb_records = odb.size();

  std::set<std::string> ids;
  std::set<std::string> keyas;
  for (const auto& r : registry) {
    ids.insert(r.id);
    keyas.insert(r.keya);
  }

  for (std::size_t i = 0; i < odb.size(); ++i) {
    const OdbRecord& r = odb[i];
    const std::size_t line = odb_lines[i];

    // Equijoin on key material.
    if (keyas.count(r.keyb)) report.violations.push_back({"odb", line, "keyb", "joins with a registered KeyA"});

    const std::array<std::pair<const char*, std::string>, 6> fields = {{
        {"keyb", r.keyb},
        {"x", std::to_string(r.x)},
        {"y", std::to_string(r.y)},
        {"level", std::string(to_string(r.level))},
        {"t", std::to_string(r.t)},
        {"group", r.group},
    }};
    for (const auto& [name, value] : fields) {
      if (ids.count(value)) report.violations.push_back({"odb", line, name, "equals a registered ID"});
      if (std::string_view(name) == "keyb" && keyas.count(value)) continue;  // reported as a join
      for (const auto& ka : keyas) {
        if (!ka.empty() && value.find(ka) != std::string::npos) {
          report.violations.push_back({"odb", line, name, "contains a registered KeyA"});
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace

AuditReport audit_decoupling(const std::vector<RegistryRecord>& registry, const std::vector<OdbRecord>& odb) {
  std::vector<std::size_t> lines(odb.size());
  for (std::size_t i = 0; i < lines.size(); ++i) lines[i] = i + 1;
  return audit_impl(registry, odb, lines);
}

AuditReport audit_files(const std::filesystem::path& registry_path, const std::filesystem::path& odb_path) {
  std::vector<Violation> malformed;
  auto load = [&](const std::filesystem::path& path, const char* store, auto parse, auto& into,
                  std::vector<std::size_t>& lines) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot open " + path.string());
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (line.empty()) continue;
      try {
        into.push_back(parse(line));
        lines.push_back(no);
      } catch (const StoreError& e) {
        malformed.push_back({store, no, "", std::string("malformed line: ") + e.what()});
      }
    }
  };

  std::vector<RegistryRecord> registry;
  std::vector<OdbRecord> odb;
  std::vector<std::size_t> registry_lines;
  std::vector<std::size_t> odb_lines;
  load(registry_path, "registry", parse_registry_line, registry, registry_lines);
  load(odb_path, "odb", parse_odb_line, odb, odb_lines);

  AuditReport report = audit_impl(registry, odb, odb_lines);
  report.violations.insert(report.violations.begin(), malformed.begin(), malformed.end());
  return report;
}

}  // namespace ncp::protocol

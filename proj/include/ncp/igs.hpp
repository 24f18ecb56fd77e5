#pragma once

// Pseudonym (KeyB) lifecycle within a group.
//
// Each member carries a timer. Once it reaches the member's silence
// period, a random friend is picked; within the tolerance distance the two
// swap KeyBs, otherwise the member gets a freshly generated KeyB. Either
// way the timers involved reset and new silence periods are drawn.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncp/keygen.hpp"
#include "ncp/rng.hpp"

namespace ncp::igs {

// Planar position in meters.
struct Location {
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend bool operator==(const Location&, const Location&) = default;
};

double distance(Location a, Location b);

struct IgsConfig {
  std::uint64_t silence_min = 10;  // ticks
  std::uint64_t silence_max = 30;  // ticks
  double tolerance_distance = 100.0;  // meters; +inf allowed

  // Throws std::invalid_argument unless 0 < min <= max and tolerance >= 0.
  void validate() const;
};

// Uniform on [silence_min, silence_max].
std::uint64_t draw_silence(const IgsConfig& cfg, Rng& rng);

struct MemberState {
  std::uint64_t member_ref = 0;  // opaque session handle
  keygen::Key key_b;
  Location location;
  std::uint64_t timer = 0;
  std::uint64_t silence_period = 0;
  std::string group_id;
};

MemberState tick(MemberState state);

enum class EventKind { kNone, kExchanged, kRegenerated };

std::string_view to_string(EventKind e);

// Produces a replacement KeyB for the given member.
using KeyFactory = std::function<keygen::Key(const MemberState&)>;

struct StepResult {
  MemberState member;
  EventKind event = EventKind::kNone;
  // Set on exchange: index into the group span and the friend's new state.
  std::optional<std::size_t> friend_index;
  std::optional<MemberState> updated_friend;
};

// One decision for `member`. `group` holds the other members only. An
// expired timer with an empty group regenerates.
StepResult step(const MemberState& member, std::span<const MemberState> group, Rng& rng,
                const IgsConfig& cfg, const KeyFactory& regen);

struct GroupEvent {
  std::uint64_t tick = 0;
  EventKind kind = EventKind::kNone;
  std::uint64_t member_ref = 0;
  std::optional<std::uint64_t> friend_ref;
  keygen::Key old_key;  // member's KeyB before the event
  keygen::Key new_key;  // member's KeyB after the event
};

// A group advanced by a single logical clock.
class Group {
 public:
  Group(std::string id, std::vector<MemberState> members) : id_(std::move(id)), members_(std::move(members)) {}

  const std::string& id() const { return id_; }
  const std::vector<MemberState>& members() const { return members_; }
  std::vector<MemberState>& members() { return members_; }
  std::uint64_t now() const { return now_; }

  // Ticks every timer, then lets each member (in index order) take a step.
  std::vector<GroupEvent> advance(Rng& rng, const IgsConfig& cfg, const KeyFactory& regen);

 private:
  std::string id_;
  std::vector<MemberState> members_;
  std::uint64_t now_ = 0;
};

}  // namespace ncp::igs

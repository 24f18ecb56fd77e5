#include "ncp/igs.hpp"

#include <cmath>
#include <stdexcept>

namespace ncp::igs {

double distance(Location a, Location b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

void IgsConfig::validate() const {
  if (silence_min == 0) throw std::invalid_argument("silence_min must be positive");
  if (silence_min > silence_max) throw std::invalid_argument("silence_min must not exceed silence_max");
  if (!(tolerance_distance >= 0)) throw std::invalid_argument("tolerance_distance must be >= 0");
}

std::uint64_t draw_silence(const IgsConfig& cfg, Rng& rng) { return rng.between(cfg.silence_min, cfg.silence_max); }

MemberState tick(MemberState state) {
  ++state.timer;
  return state;
}

std::string_view to_string(EventKind e) {
  switch (e) {
    case EventKind::kNone:
      return "none";
    case EventKind::kExchanged:
      return "exchanged";
    case EventKind::kRegenerated:
      return "regenerated";
  }
  return "?";
}

StepResult step(const MemberState& member, std::span<const MemberState> group, Rng& rng,
                const IgsConfig& cfg, const KeyFactory& regen) {
  StepResult r;
  r.member = member;
  if (member.timer < member.silence_period) return r;

  if (!group.empty()) {
    const std::size_t idx = rng.below(group.size());
    const MemberState& other = group[idx];
    if (distance(member.location, other.location) <= cfg.tolerance_distance) {
      MemberState f = other;
      std::swap(r.member.key_b, f.key_b);
      r.member.timer = 0;
      f.timer = 0;
      r.member.silence_period = draw_silence(cfg, rng);
      f.silence_period = draw_silence(cfg, rng);
      r.event = EventKind::kExchanged;
      r.friend_index = idx;
      r.updated_friend = std::move(f);
      return r;
    }
  }

  r.member.key_b = regen(member);
  r.member.timer = 0;
  r.member.silence_period = draw_silence(cfg, rng);
  r.event = EventKind::kRegenerated;
  return r;
}

std::vector<GroupEvent> Group::advance(Rng& rng, const IgsConfig& cfg, const KeyFactory& regen) {
  ++now_;
  for (auto& m : members_) m = tick(std::move(m));

  std::vector<GroupEvent> events;
  std::vector<MemberState> others;
  std::vector<std::size_t> index_of;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    others.clear();
    index_of.clear();
    for (std::size_t j = 0; j < members_.size(); ++j) {
      if (j == i) continue;
      others.push_back(members_[j]);
      index_of.push_back(j);
    }
    StepResult r = step(members_[i], others, rng, cfg, regen);
    if (r.event == EventKind::kNone) continue;

    GroupEvent e;
    e.tick = now_;
    e.kind = r.event;
    e.member_ref = members_[i].member_ref;
    e.old_key = members_[i].key_b;
    e.new_key = r.member.key_b;
    if (r.friend_index) {
      const std::size_t j = index_of[*r.friend_index];
      e.friend_ref = members_[j].member_ref;
      members_[j] = std::move(*r.updated_friend);
    }
    members_[i] = std::move(r.member);
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace ncp::igs

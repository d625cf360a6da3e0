#include "urm/consensus/validators.hpp"

#include <algorithm>

#include "urm/common/error.hpp"

namespace urm::consensus {

namespace {

void check_members(std::span<const Validator> validators) {
  if (validators.empty()) throw ConfigError("empty validator set");
  for (const auto& v : validators) {
    if (v.power == 0) throw ConfigError("validator " + std::to_string(to_index(v.id)) + " has zero power");
  }
}

// One accumulator step; returns the index of the chosen validator.
std::size_t accumulate(std::span<const Validator> validators, std::vector<std::int64_t>& priority,
                       std::int64_t total) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < validators.size(); ++i) {
    priority[i] += static_cast<std::int64_t>(validators[i].power);
    const bool higher = priority[i] > priority[best];
    const bool tie_lower_id = priority[i] == priority[best] && validators[i].id < validators[best].id;
    if (i > 0 && (higher || tie_lower_id)) best = i;
  }
  priority[best] -= total;
  return best;
}

}  // namespace

ValidatorId select_leader(std::span<const Validator> validators, std::uint64_t height, std::uint64_t round) {
  check_members(validators);
  std::uint64_t total = 0;
  for (const auto& v : validators) total += v.power;
  const std::uint64_t steps = (height + round) % total + 1;
  std::vector<std::int64_t> priority(validators.size(), 0);
  std::size_t chosen = 0;
  for (std::uint64_t s = 0; s < steps; ++s) chosen = accumulate(validators, priority, static_cast<std::int64_t>(total));
  return validators[chosen].id;
}

ValidatorSet::ValidatorSet(std::vector<Validator> validators) : members_(std::move(validators)) {
  check_members(members_);
  std::sort(members_.begin(), members_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i > 0 && members_[i].id == members_[i - 1].id) {
      throw ConfigError("duplicate validator id " + std::to_string(to_index(members_[i].id)));
    }
    total_ += members_[i].power;
    if (total_ > kMaxTotalPower) throw ConfigError("total voting power too large");
  }
  std::vector<std::int64_t> priority(members_.size(), 0);
  schedule_.reserve(total_);
  for (std::uint64_t s = 0; s < total_; ++s) {
    schedule_.push_back(members_[accumulate(members_, priority, static_cast<std::int64_t>(total_))].id);
  }
}

std::uint64_t ValidatorSet::power_of(ValidatorId id) const {
  const auto it =
      std::lower_bound(members_.begin(), members_.end(), id, [](const auto& v, ValidatorId x) { return v.id < x; });
  return it != members_.end() && it->id == id ? it->power : 0;
}

ValidatorId ValidatorSet::leader(std::uint64_t height, std::uint64_t round) const {
  return schedule_[(height + round) % total_];
}

std::chrono::milliseconds timeout_duration(std::uint64_t round, const TimeoutConfig& cfg) {
  const auto r = static_cast<std::int64_t>(round);
  return cfg.base + cfg.delta * (r * (r + 1) / 2);
}

}  // namespace urm::consensus

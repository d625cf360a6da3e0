#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

namespace urm::consensus {

enum class ValidatorId : std::uint32_t {};

constexpr std::uint32_t to_index(ValidatorId id) { return static_cast<std::uint32_t>(id); }

struct Validator {
  ValidatorId id{};
  std::uint64_t power = 1;
};

/// Smallest power strictly greater than 2/3 of `total_power`.
constexpr std::uint64_t quorum_power(std::uint64_t total_power) { return total_power * 2 / 3 + 1; }

/// Accumulator weighted round-robin. Slot `height + round` picks the validator
/// chosen at that step of the sequence that starts from all-zero priorities:
/// every step adds each validator's power to its priority, the highest
/// priority wins (lowest id on ties) and pays back the total power. The
/// sequence has period equal to the total power. Throws ConfigError for an
/// empty set or a zero power.
ValidatorId select_leader(std::span<const Validator> validators, std::uint64_t height, std::uint64_t round);

/// Validators sorted by id, with the leader schedule precomputed.
class ValidatorSet {
 public:
  static constexpr std::uint64_t kMaxTotalPower = 1'000'000;

  /// Throws ConfigError on an empty set, duplicate ids, zero power, or a
  /// total power above kMaxTotalPower.
  explicit ValidatorSet(std::vector<Validator> validators);

  const std::vector<Validator>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  std::uint64_t total_power() const { return total_; }
  std::uint64_t quorum() const { return quorum_power(total_); }
  /// Power that must include at least one honest validator when the faulty
  /// power is below a third: total − quorum + 1.
  std::uint64_t honest_witness() const { return total_ - quorum() + 1; }

  /// Zero for ids outside the set.
  std::uint64_t power_of(ValidatorId id) const;
  bool contains(ValidatorId id) const { return power_of(id) > 0; }

  ValidatorId leader(std::uint64_t height, std::uint64_t round) const;

 private:
  std::vector<Validator> members_;
  std::uint64_t total_ = 0;
  std::vector<ValidatorId> schedule_;
};

struct TimeoutConfig {
  std::chrono::milliseconds base{1000};
  std::chrono::milliseconds delta{200};
};

/// t0 + Δ·r(r+1)/2, the unrolled form of timeout(r) = timeout(r−1) + rΔ.
std::chrono::milliseconds timeout_duration(std::uint64_t round, const TimeoutConfig& cfg);

}  // namespace urm::consensus

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "urm/consensus/message.hpp"
#include "urm/consensus/validators.hpp"

namespace urm::consensus {

enum class Step : std::uint8_t { NewHeight, Propose, Prevote, Precommit };

std::string_view step_name(Step s);

enum class TimeoutKind : std::uint8_t { Propose, Prevote, Precommit, Commit };

/// A timer firing. Commit timers carry the height they open.
struct Timeout {
  TimeoutKind kind = TimeoutKind::Propose;
  std::uint64_t height = 0;
  std::uint64_t round = 0;
};

/// Enters consensus at `height`; ignored once the validator has started.
struct StartHeight {
  std::uint64_t height = 1;
  /// Wait before round 0, as after a commit. Lets a chain start from a genesis
  /// block committed at the start time.
  std::chrono::milliseconds wait{0};
};

using Event = std::variant<StartHeight, Message, Timeout>;

struct ConsensusParams {
  ValidatorSet validators;
  TimeoutConfig timeouts;
  /// Wait after a decision before the next height starts.
  std::chrono::milliseconds commit_interval{0};
};

/// Hooks into the application. `propose` builds a fresh batch when this
/// validator leads a round with no valid value; `valid` screens proposals
/// (well-formedness is always checked first). Both must be deterministic.
struct Application {
  std::function<PayloadPtr(ValidatorId self, std::uint64_t height, std::uint64_t round)> propose;
  std::function<bool(const Payload&)> valid;
};

struct Decision {
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  PayloadPtr value;
  std::int64_t time = 0;
};

/// Two different messages of one kind from one sender for the same slot.
struct Conflict {
  ValidatorId sender{};
  std::string_view type;
  std::uint64_t height = 0;
  std::uint64_t round = 0;
};

struct Tally {
  std::map<ValidatorId, std::optional<Digest>> votes;
  std::map<std::optional<Digest>, std::uint64_t> power;
  std::uint64_t total = 0;

  std::uint64_t power_for(const std::optional<Digest>& v) const;
};

struct RoundState {
  PayloadPtr proposal;
  std::int64_t proposal_valid_round = -1;
  std::vector<ValidatorId> proposal_pol;
  Tally prevotes;
  Tally precommits;
  std::set<ValidatorId> senders;
  std::uint64_t sender_power = 0;
  bool prevote_timer = false;
  bool precommit_timer = false;
  bool prevote_quorum_seen = false;
};

struct ValidatorState {
  ValidatorId id{};
  bool started = false;
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  Step step = Step::NewHeight;
  PayloadPtr locked_value;
  std::int64_t locked_round = -1;
  PayloadPtr valid_value;
  std::int64_t valid_round = -1;
  /// Messages of the current height, by round.
  std::map<std::uint64_t, RoundState> rounds;
  std::map<ValidatorId, PayloadPtr> commits;
  /// A Commit of the current height carrying a quorum certificate.
  std::optional<Commit> certified;
  /// Messages for later heights, replayed when the height is reached.
  std::map<std::uint64_t, std::vector<Message>> future;
  std::vector<Decision> decisions;
  std::vector<Conflict> conflicts;
  std::uint64_t malformed = 0;
};

/// Heights ahead of the current one for which messages are buffered.
constexpr std::uint64_t kFutureHeights = 8;

struct TimerRequest {
  Timeout timeout;
  std::chrono::milliseconds delay{0};
};

struct Outputs {
  /// Broadcast to every other validator. The sender has already counted them.
  std::vector<Message> messages;
  std::vector<TimerRequest> timers;
  std::vector<Decision> decisions;
};

ValidatorState initial_state(ValidatorId id);

/// Applies one event in place. `now` is opaque and only stamped on decisions.
Outputs step(ValidatorState& state, const Event& event, std::int64_t now, const ConsensusParams& params,
             const Application& app);

/// Pure form of `step`.
std::pair<ValidatorState, Outputs> handle_event(ValidatorState state, const Event& event, std::int64_t now,
                                                const ConsensusParams& params, const Application& app);

/// False iff two logs decided different values at one height.
bool decision_consistency(const std::vector<std::vector<Decision>>& logs);

}  // namespace urm::consensus

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "urm/common/digest.hpp"
#include "urm/consensus/validators.hpp"

namespace urm::consensus {

/// Candidate block: a batch of transaction ids. `nonce` lets one proposer build
/// distinct values over the same batch.
struct Payload {
  std::uint64_t height = 0;
  ValidatorId proposer{};
  std::uint64_t nonce = 0;
  std::vector<std::uint64_t> txs;
  Digest digest;
};

using PayloadPtr = std::shared_ptr<const Payload>;

Digest payload_digest(std::uint64_t height, ValidatorId proposer, std::uint64_t nonce,
                      const std::vector<std::uint64_t>& txs);
PayloadPtr make_payload(std::uint64_t height, ValidatorId proposer, std::vector<std::uint64_t> txs,
                        std::uint64_t nonce = 0);
/// The stored digest matches the contents.
bool well_formed(const Payload& p);

struct Proposal {
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  PayloadPtr value;
  std::int64_t valid_round = -1;
  /// Validators that prevoted `value` in `valid_round`. Signatures are assumed,
  /// so a quorum here justifies the valid round to receivers that missed it.
  std::vector<ValidatorId> pol;
};

enum class VoteKind : std::uint8_t { Prevote, Precommit };

/// nullopt is a vote for nil.
struct Vote {
  VoteKind kind = VoteKind::Prevote;
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  std::optional<Digest> value;
};

/// Announces a decision. `certificate` lists the validators whose precommits
/// for `value` in `round` formed the deciding quorum; signatures are assumed,
/// so a receiver that left the height behind can decide from it directly.
/// Without a quorum certificate the value is adopted once enough distinct
/// senders announce it.
struct Commit {
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  PayloadPtr value;
  std::vector<ValidatorId> certificate;
};

struct Message {
  ValidatorId sender{};
  std::variant<Proposal, Vote, Commit> body;
};

std::uint64_t height_of(const Message& m);
std::uint64_t round_of(const Message& m);
/// "proposal", "prevote", "precommit" or "commit".
std::string_view message_type(const Message& m);
/// Digest carried by the message, nullopt for a nil vote.
std::optional<Digest> value_of(const Message& m);

/// One line of a message or decision trace.
struct TraceRecord {
  std::int64_t time = 0;
  ValidatorId sender{};
  std::string_view type;
  std::uint64_t height = 0;
  std::uint64_t round = 0;
  std::optional<Digest> value;
};

TraceRecord trace_record(const Message& m, std::int64_t time);
/// JSON object per line: time, sender, type, height, round, value (hex or null).
void write_trace(std::ostream& out, const std::vector<TraceRecord>& records);

}  // namespace urm::consensus

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "urm/common/digest.hpp"
#include "urm/ledger/tx.hpp"

namespace urm::ledger {

struct BlockMeta {
  std::int64_t timestamp_ms = 0;
  std::string proposer;

  friend bool operator==(const BlockMeta&, const BlockMeta&) = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash;
  Digest merkle_root;
  BlockMeta meta;
  std::vector<LedgerTx> txs;
  Digest hash;

  friend bool operator==(const Block&, const Block&) = default;
};

std::string encode_meta(const BlockMeta& meta);

/// SHA-256(prev_hash || merkle_root || encode_meta(meta)).
Digest block_hash(const Digest& prev_hash, const Digest& merkle_root, const BlockMeta& meta);

/// Outcome of a structural check; `reason` names the first defect found.
struct Verdict {
  bool ok = true;
  std::string reason;

  explicit operator bool() const { return ok; }
  static Verdict fail(std::string why) { return {false, std::move(why)}; }
};

/// Append-only permissioned chain. The genesis block carries no transactions and
/// names the chain id as its proposer, so the id is covered by every later hash.
class SideChain {
 public:
  explicit SideChain(std::string id, std::int64_t genesis_time_ms = 0);

  /// Rebuilds a chain from stored blocks without checking them (see verify_chain).
  static SideChain from_blocks(std::string id, std::vector<Block> blocks);

  const std::string& id() const { return id_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  /// Direct block access for fault-injection tests.
  std::vector<Block>& mutable_blocks() { return blocks_; }
  const Block& head() const { return blocks_.back(); }
  std::uint64_t next_seq() const;

  /// Appends a block, numbering the transactions consecutively. Throws Error on a
  /// timestamp regression, a duplicate deployment of an agreement already in
  /// force, or a revocation of an agreement not in force on this chain.
  const Block& append_block(const std::vector<TxBody>& txs, BlockMeta meta);

  /// Block index and position of the transaction with sequence `seq`.
  std::optional<std::pair<std::size_t, std::size_t>> locate(std::uint64_t seq) const;

 private:
  std::string id_;
  std::vector<Block> blocks_;
};

bool verify_chain(const SideChain& chain);
Verdict check_chain(const SideChain& chain);

/// Agreement hashes in force just before sequence number `upto_seq`: the last
/// ESAD/ESAR event per hash with a smaller sequence number was an ESAD.
std::set<Digest> agreements_in_force(const SideChain& chain, std::uint64_t upto_seq);

struct AnchorRecord {
  std::uint64_t index = 0;
  std::string chain_id;
  std::uint64_t side_height = 0;
  Digest side_root;
  std::int64_t base_time_ms = 0;
  Digest prev_hash;
  Digest hash;

  friend bool operator==(const AnchorRecord&, const AnchorRecord&) = default;
};

Digest anchor_hash(const Digest& prev_hash, std::uint64_t index, const std::string& chain_id, std::uint64_t side_height,
                   const Digest& side_root, std::int64_t base_time_ms);

/// Public base layer, modelled as a hash-linked append-only log of side-chain roots.
class BaseChain {
 public:
  const std::vector<AnchorRecord>& records() const { return records_; }
  std::vector<AnchorRecord>& mutable_records() { return records_; }

  const AnchorRecord& append(const std::string& chain_id, std::uint64_t side_height, const Digest& side_root,
                             std::int64_t base_time_ms);

  /// Height of the last anchored block of `chain_id`, if any.
  std::optional<std::uint64_t> anchored_height(const std::string& chain_id) const;

  static BaseChain from_records(std::vector<AnchorRecord> records);

 private:
  std::vector<AnchorRecord> records_;
};

constexpr std::int64_t kDefaultBaseDelayMs = 15'000;

/// Anchors every side block not yet on `base`, stamped now + delay. Returns the
/// new records (empty when there is nothing to anchor).
std::vector<AnchorRecord> anchor(const SideChain& side, BaseChain& base, std::int64_t now_ms,
                                 std::int64_t delay_ms = kDefaultBaseDelayMs);

/// Checks the base log's links and that the anchors for `side` cover a prefix of
/// its blocks in height order with matching roots and non-earlier times.
bool verify_anchors(const SideChain& side, const BaseChain& base);
Verdict check_anchors(const SideChain& side, const BaseChain& base);

/// Anchor time minus side commit time for the block holding `seq`; nullopt while
/// that block is not yet anchored. Throws Error for an unknown sequence number.
std::optional<std::int64_t> interchain_latency(std::uint64_t seq, const SideChain& side, const BaseChain& base);

/// Line-delimited JSON, one block or anchor per line, digests as lowercase hex.
void export_chain(std::ostream& out, const SideChain& chain);
SideChain import_chain(std::istream& in);
void export_base(std::ostream& out, const BaseChain& base);
BaseChain import_base(std::istream& in);

}  // namespace urm::ledger

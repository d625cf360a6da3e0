#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "urm/common/digest.hpp"
#include "urm/ledger/tx.hpp"

namespace urm::ledger {

/// Sibling path from a leaf to the root. At each level the node's position is
/// the corresponding bit of `leaf_index` (0 = left child). `leaf_count` fixes
/// the tree shape, so a self-paired node cannot be passed off as another index.
struct InclusionProof {
  std::size_t leaf_index = 0;
  std::size_t leaf_count = 0;
  std::vector<Digest> siblings;

  friend bool operator==(const InclusionProof&, const InclusionProof&) = default;
};

/// Root over leaf digests. An odd node at any level is paired with itself; an
/// empty list hashes to SHA-256 of the empty string; one leaf is its own root.
Digest merkle_root(std::span<const Digest> leaves);
Digest merkle_root(const std::vector<LedgerTx>& txs);

/// Throws std::out_of_range for an index past the last leaf.
InclusionProof merkle_proof(std::span<const Digest> leaves, std::size_t index);
InclusionProof merkle_proof(const std::vector<LedgerTx>& txs, std::size_t index);

bool verify_proof(const Digest& root, const Digest& leaf, const InclusionProof& proof);
bool verify_proof(const Digest& root, const LedgerTx& tx, const InclusionProof& proof);

}  // namespace urm::ledger

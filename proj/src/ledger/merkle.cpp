#include "urm/ledger/merkle.hpp"

#include <stdexcept>

namespace urm::ledger {

namespace {

std::vector<Digest> next_level(const std::vector<Digest>& level) {
  std::vector<Digest> up;
  up.reserve((level.size() + 1) / 2);
  for (std::size_t i = 0; i < level.size(); i += 2) {
    up.push_back(sha256_pair(level[i], i + 1 < level.size() ? level[i + 1] : level[i]));
  }
  return up;
}

std::vector<Digest> leaves_of(const std::vector<LedgerTx>& txs) {
  std::vector<Digest> out;
  out.reserve(txs.size());
  for (const auto& tx : txs) out.push_back(leaf_hash(tx));
  return out;
}

}  // namespace

Digest merkle_root(std::span<const Digest> leaves) {
  if (leaves.empty()) return sha256(std::string_view{});
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) level = next_level(level);
  return level.front();
}

Digest merkle_root(const std::vector<LedgerTx>& txs) { return merkle_root(leaves_of(txs)); }

InclusionProof merkle_proof(std::span<const Digest> leaves, std::size_t index) {
  if (index >= leaves.size()) throw std::out_of_range("merkle_proof: leaf index out of range");
  InclusionProof proof{index, leaves.size(), {}};
  std::vector<Digest> level(leaves.begin(), leaves.end());
  std::size_t idx = index;
  while (level.size() > 1) {
    const std::size_t sib = idx ^ 1U;
    proof.siblings.push_back(sib < level.size() ? level[sib] : level[idx]);
    level = next_level(level);
    idx /= 2;
  }
  return proof;
}

InclusionProof merkle_proof(const std::vector<LedgerTx>& txs, std::size_t index) {
  return merkle_proof(leaves_of(txs), index);
}

bool verify_proof(const Digest& root, const Digest& leaf, const InclusionProof& proof) {
  if (proof.leaf_index >= proof.leaf_count) return false;
  Digest node = leaf;
  std::size_t idx = proof.leaf_index;
  std::size_t width = proof.leaf_count;
  std::size_t used = 0;
  while (width > 1) {
    if (used == proof.siblings.size()) return false;
    const Digest& sib = proof.siblings[used++];
    if (idx % 2 == 1) {
      node = sha256_pair(sib, node);
    } else {
      if (idx + 1 == width && sib != node) return false;
      node = sha256_pair(node, sib);
    }
    idx /= 2;
    width = (width + 1) / 2;
  }
  return used == proof.siblings.size() && node == root;
}

bool verify_proof(const Digest& root, const LedgerTx& tx, const InclusionProof& proof) {
  return verify_proof(root, leaf_hash(tx), proof);
}

}  // namespace urm::ledger

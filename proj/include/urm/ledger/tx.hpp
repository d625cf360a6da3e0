#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "urm/common/digest.hpp"

namespace urm::ledger {

/// Pseudonymous participant address: 40 hex characters derived from a name.
using Address = std::string;

Address address_of(std::string_view name);

/// Agreement deployment.
struct EsadTx {
  Address owner;
  Address provider;
  Digest esa_hash;
  std::int64_t deployed_at_ms = 0;
  bool valid = true;

  friend bool operator==(const EsadTx&, const EsadTx&) = default;
};

/// Data access: only the hash of the executed query is recorded.
struct DataTx {
  Address provider;
  Address requester;
  Digest query_hash;
  std::int64_t time_ms = 0;

  friend bool operator==(const DataTx&, const DataTx&) = default;
};

/// Agreement revocation.
struct EsarTx {
  Digest esa_hash;
  bool valid = false;
  std::int64_t time_ms = 0;

  friend bool operator==(const EsarTx&, const EsarTx&) = default;
};

using TxBody = std::variant<EsadTx, DataTx, EsarTx>;

struct LedgerTx {
  std::uint64_t seq = 0;
  TxBody body;

  friend bool operator==(const LedgerTx&, const LedgerTx&) = default;
};

std::string_view tx_type_name(const TxBody& body);

/// Canonical byte encoding: the sequence number, type tag, then each field in
/// declaration order, every item prefixed by its 4-byte big-endian length.
/// Integers are 8-byte big-endian, booleans one byte.
std::string encode_tx(const LedgerTx& tx);

/// Merkle leaf: SHA-256 of the canonical encoding.
Digest leaf_hash(const LedgerTx& tx);

}  // namespace urm::ledger

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "urm/common/digest.hpp"
#include "urm/enforcement/compliance.hpp"
#include "urm/enforcement/query.hpp"
#include "urm/esa/esa.hpp"
#include "urm/ledger/chain.hpp"

namespace urm::audit {

/// Stands in for every written value in a stored write query.
inline constexpr std::string_view kMaskToken = "«masked»";

using EsaStore = std::map<Digest, esa::Esa>;
using SchemaMap = std::map<std::string, enforcement::Schema, std::less<>>;

struct AuditRecord {
  /// Sequence number of the DataTx this record backs.
  std::uint64_t seq = 0;
  std::string requester;
  std::string purpose;
  bool masked = false;
  std::string query;
  Digest query_hash;
  std::int64_t time_ms = 0;
  /// Side-chain block holding the DataTx.
  std::uint64_t block = 0;

  friend bool operator==(const AuditRecord&, const AuditRecord&) = default;
};

struct AuditLog {
  std::vector<AuditRecord> records;
};

struct StoredQuery {
  std::string text;
  bool masked = false;
};

/// Text kept for an executed query. Reads keep their literals; INSERT and
/// UPDATE assignments other than nulls and the owner column become kMaskToken.
StoredQuery stored_form(const enforcement::Query& q, const enforcement::Schema& schema);

struct LogContext {
  std::string provider;
  std::string requester;
  std::string purpose;
  std::int64_t time_ms = 0;
};

/// Appends one side-chain block with a DataTx over the stored form's hash, then
/// the matching record. If the block is refused nothing is written.
std::pair<AuditRecord, ledger::DataTx> log_query(AuditLog& log, ledger::SideChain& side, const enforcement::Query& q,
                                                 const enforcement::Schema& schema, const LogContext& ctx);

struct RecordVerdict {
  std::uint64_t seq = 0;
  bool hash_match = false;
  bool verifiable = false;
  bool compliant = false;
  std::string reason;

  bool ok() const { return hash_match && verifiable && compliant; }
};

struct AuditVerdict {
  bool ok = false;
  std::vector<RecordVerdict> records;
  /// DataTx sequence numbers without a record.
  std::vector<std::uint64_t> unlogged;
  /// Record positions pointing at no DataTx, or at one already claimed.
  std::vector<std::size_t> orphans;
  /// Empty when the side chain itself verifies.
  std::string chain_problem;
};

/// Matches records one to one with the side chain's DataTx entries and checks
/// each record's hash, then its compliance under the agreements in force just
/// before its sequence number. Reads go through check_compliance; writes must
/// only assign columns a write agreement of the owner grants; deletions always
/// comply. An agreement missing from `store` makes its records unverifiable.
AuditVerdict verify_audit(const AuditLog& log, const ledger::SideChain& side, const EsaStore& store,
                          const SchemaMap& schemas);

struct DisclosureEvent {
  std::uint64_t seq = 0;
  std::string type;
  std::int64_t time_ms = 0;
};

struct Disclosure {
  Digest hash;
  esa::Esa agreement;
  std::vector<DisclosureEvent> events;
};

/// Every agreement deployed for `consumer`, in deployment order, with its
/// ESAD/ESAR history. Throws Error when the consumer has no deployment or a
/// stored agreement does not match its ledger hash.
std::vector<Disclosure> reveal_agreements(const ledger::SideChain& side, const EsaStore& store,
                                          std::string_view consumer);

/// One JSON object per line.
void write_audit_log(std::ostream& out, const AuditLog& log);
/// Throws ParseError naming the line on malformed input.
AuditLog read_audit_log(std::istream& in);

nlohmann::ordered_json verdict_json(const AuditVerdict& v);

}  // namespace urm::audit

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "urm/audit/audit.hpp"
#include "urm/enforcement/database.hpp"
#include "urm/ledger/chain.hpp"

namespace urm::cli {

/// Requester and purpose recorded for queries the engine runs on its own
/// behalf after a revocation.
inline constexpr std::string_view kEngineRequester = "urm-engine";
inline constexpr std::string_view kRevocationPurpose = "revocation";

struct DeployResult {
  Digest hash;
  std::uint64_t seq = 0;
};

struct RevokeResult {
  Digest hash;
  std::uint64_t seq = 0;
  /// Updates or deletions run to withdraw the revoked data.
  std::vector<audit::AuditRecord> enforced;
};

struct QueryResult {
  /// False for a write no agreement allows; nothing was run or logged.
  bool executed = true;
  enforcement::ResultSet rows;
  std::optional<audit::AuditRecord> record;
};

/// A data provider's state: tables, revealed agreements, the side chain with
/// its anchors, and the audit log. Every operation advances a logical clock by
/// one second so that runs are reproducible.
class Workspace {
 public:
  /// Empty in-memory workspace.
  explicit Workspace(std::string provider = "provider");

  /// Creates `dir` with the given tables. Throws Error if it already holds a workspace.
  static Workspace create(const std::filesystem::path& dir, const std::vector<enforcement::Table>& tables,
                          std::string provider = "provider");
  /// Throws Error naming the file at fault.
  static Workspace open(const std::filesystem::path& dir);
  /// Writes every file back. Only valid for a workspace bound to a directory.
  void save() const;

  void add_table(enforcement::Table table);

  /// Parses, checks and deploys an agreement (ESAD). Throws on a parse error,
  /// an unknown table, or an agreement already in force.
  DeployResult deploy(const std::string& esa_text);
  /// Revokes an agreement in force (ESAR) and runs the resulting data changes.
  RevokeResult revoke(const Digest& hash);
  /// Rewrites, runs and logs one query.
  QueryResult query(const std::string& requester, const std::string& purpose, const std::string& text);

  audit::AuditVerdict audit() const;
  std::vector<audit::Disclosure> reveal(const std::string& consumer) const;

  /// Agreements in force now.
  std::vector<esa::Esa> agreements_in_force() const;

  const enforcement::Database& database() const { return db_; }
  const ledger::SideChain& side() const { return side_; }
  const ledger::BaseChain& base() const { return base_; }
  const audit::AuditLog& log() const { return log_; }
  const audit::EsaStore& store() const { return store_; }
  const audit::SchemaMap& schemas() const { return schemas_; }
  std::uint64_t rejected_writes() const { return rejected_writes_; }

  /// Direct access for fault-injection tests.
  audit::AuditLog& mutable_log() { return log_; }
  ledger::SideChain& mutable_side() { return side_; }
  audit::EsaStore& mutable_store() { return store_; }

 private:
  std::int64_t tick();
  void anchor();

  std::optional<std::filesystem::path> dir_;
  std::string provider_;
  std::int64_t clock_ms_ = 0;
  std::uint64_t rejected_writes_ = 0;
  enforcement::Database db_;
  audit::SchemaMap schemas_;
  audit::EsaStore store_;
  ledger::SideChain side_;
  ledger::BaseChain base_;
  audit::AuditLog log_;
};

}  // namespace urm::cli

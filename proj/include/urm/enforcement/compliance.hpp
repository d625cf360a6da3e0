#pragma once

#include <string>
#include <vector>

#include "urm/enforcement/database.hpp"
#include "urm/enforcement/query.hpp"
#include "urm/esa/esa.hpp"

namespace urm::enforcement {

/// Who is asking, why, and which agreements are in force.
struct ComplianceContext {
  std::string requester;
  std::string purpose;
  std::vector<esa::Esa> agreements;
};

/// Read agreements over `table` whose context predicate holds for (requester, purpose).
std::vector<const esa::Esa*> applicable_reads(const ComplianceContext& ctx, std::string_view table);

/// Rewrites `q` so that it only returns rows and fields covered by an applicable
/// read agreement. The where clause becomes
///   q.where and (owner = c1 and k1 and rows1) or (owner = c2 and k2 and rows2) ...
/// with each context predicate ki reduced to a constant. Fields granted by only
/// some agreements get a guard restricting them to those agreements' rows.
Select rewrite_select(const Select& q, const ComplianceContext& ctx, const Schema& schema);

/// Accepts `q` iff its where clause entails the disjunction of applicable
/// agreements and, for every projected field, where-and-guard entails the
/// disjunction of the agreements granting that field.
bool check_compliance(const Select& q, const ComplianceContext& ctx, const Schema& schema);

struct WriteRewrite {
  Query query;  // Insert or Update with disallowed columns set to null
  bool executed = true;
};

/// Nulls every assigned column outside the union of the owner's write agreements
/// over the table. With no write agreement the query is marked not executed.
/// The owner is read from the owner-column assignment or, for Update, a top-level
/// `owner = "x"` conjunct of the where clause; an Update naming no owner is not executed.
WriteRewrite rewrite_write(const Query& q, const std::vector<esa::Esa>& agreements, const Schema& schema);

/// Deletion is always permitted. Returns the number of rows removed.
std::size_t apply_deletion(Database& db, const Delete& q);

/// Overwrites data no longer covered after `revoked` is withdrawn. `remaining`
/// lists the consumer's other valid agreements. Returns the executed queries:
/// a Delete of the consumer's rows if no write agreement remains, otherwise an
/// Update nulling the columns only `revoked` granted (possibly nothing).
std::vector<Query> apply_revocation(Database& db, const esa::Esa& revoked, const std::vector<esa::Esa>& remaining);

}  // namespace urm::enforcement

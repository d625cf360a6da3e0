#include "urm/enforcement/compliance.hpp"

#include <algorithm>
#include <set>

#include "urm/common/error.hpp"
#include "urm/enforcement/entailment.hpp"

namespace urm::enforcement {

using esa::AccessKind;
using esa::Esa;
using esa::Null;
using esa::Predicate;
using esa::Value;

namespace {

/// The context predicate reduced to a constant for (requester, purpose).
bool context_holds(const Esa& e, const ComplianceContext& ctx) {
  Predicate p = esa::substitute(e.context, std::string(esa::kRequesterField), Value{ctx.requester});
  p = esa::simplify(esa::substitute(p, std::string(esa::kPurposeField), Value{ctx.purpose}));
  return p.is_true();
}

bool is_read_for(const Esa& e, std::string_view table) {
  return e.valid && e.kind == AccessKind::Read && e.domain == table;
}

Predicate owner_is(const Schema& schema, const std::string& consumer) {
  return Predicate::compare(schema.owner_column, esa::CmpOp::Eq, Value{consumer});
}

/// owner = consumer and rows, dropping a vacuous row predicate.
Predicate coverage(const Esa& e, const Schema& schema) {
  if (e.rows.is_true()) return owner_is(schema, e.consumer);
  return Predicate{Predicate::Kind::And, {}, {owner_is(schema, e.consumer), e.rows}};
}

Predicate coverage_of(const std::vector<const Esa*>& agreements, const Schema& schema) {
  std::vector<Predicate> terms;
  for (const Esa* e : agreements) terms.push_back(coverage(*e, schema));
  return Predicate::any_of(std::move(terms));
}

std::vector<SelectItem> expanded_items(const Select& q, const Schema& schema) {
  std::vector<SelectItem> items = q.items;
  if (q.all_columns) {
    for (const auto& c : schema.columns) items.push_back({c.name, Predicate::always()});
  }
  return items;
}

Predicate conjoin(const Predicate& a, const Predicate& b) {
  if (a.is_true()) return b;
  if (b.is_true()) return a;
  return Predicate{Predicate::Kind::And, {}, {a, b}};
}

std::optional<std::string> owner_from_where(const Predicate& where, const std::string& owner_column) {
  auto match = [&](const Predicate& p) -> std::optional<std::string> {
    if (p.kind != Predicate::Kind::Atom || p.atom.field != owner_column || p.atom.op != esa::CmpOp::Eq) {
      return std::nullopt;
    }
    if (const auto* s = std::get_if<std::string>(&p.atom.rhs)) return *s;
    return std::nullopt;
  };
  if (auto m = match(where)) return m;
  if (where.kind == Predicate::Kind::And) {
    for (const auto& c : where.children) {
      if (auto m = match(c)) return m;
    }
  }
  return std::nullopt;
}

Assignments mask(const Assignments& a, const std::string& owner_column, const std::set<std::string>* allowed) {
  Assignments out;
  for (const auto& [field, value] : a) {
    const bool keep = field == owner_column || (allowed != nullptr && allowed->count(field) != 0);
    out.emplace_back(field, keep ? value : Value{Null{}});
  }
  return out;
}

}  // namespace

std::vector<const Esa*> applicable_reads(const ComplianceContext& ctx, std::string_view table) {
  std::vector<const Esa*> out;
  for (const auto& e : ctx.agreements) {
    if (is_read_for(e, table) && context_holds(e, ctx)) out.push_back(&e);
  }
  return out;
}

Select rewrite_select(const Select& q, const ComplianceContext& ctx, const Schema& schema) {
  Select out;
  out.table = q.table;

  std::vector<Predicate> disjuncts;
  for (const auto& e : ctx.agreements) {
    if (!is_read_for(e, q.table)) continue;
    const Predicate k = context_holds(e, ctx) ? Predicate::always() : Predicate::never();
    disjuncts.push_back(Predicate{Predicate::Kind::And, {}, {owner_is(schema, e.consumer), k, e.rows}});
  }
  out.where = disjuncts.empty() ? Predicate::never()
                                : Predicate{Predicate::Kind::And, {}, {q.where, Predicate::any_of(std::move(disjuncts))}};

  const auto apps = applicable_reads(ctx, q.table);
  for (const auto& item : expanded_items(q, schema)) {
    std::vector<const Esa*> granting;
    for (const Esa* e : apps) {
      if (e->fields.count(item.field) != 0) granting.push_back(e);
    }
    if (granting.empty()) continue;
    const Predicate guard = granting.size() == apps.size() ? Predicate::always() : coverage_of(granting, schema);
    out.items.push_back({item.field, conjoin(item.guard, guard)});
  }
  return out;
}

bool check_compliance(const Select& q, const ComplianceContext& ctx, const Schema& schema) {
  try {
    validate_query(schema, q);
  } catch (const Error&) {
    return false;
  }
  const DomainMap domains = domains_of(schema);
  const auto apps = applicable_reads(ctx, q.table);
  if (!entails(q.where, coverage_of(apps, schema), domains)) return false;
  for (const auto& item : expanded_items(q, schema)) {
    std::vector<const Esa*> granting;
    for (const Esa* e : apps) {
      if (e->fields.count(item.field) != 0) granting.push_back(e);
    }
    if (!entails(conjoin(q.where, item.guard), coverage_of(granting, schema), domains)) return false;
  }
  return true;
}

WriteRewrite rewrite_write(const Query& q, const std::vector<Esa>& agreements, const Schema& schema) {
  const std::string& owner_col = schema.owner_column;
  std::optional<std::string> owner;
  const Assignments* assigned = nullptr;
  if (const auto* ins = std::get_if<Insert>(&q)) {
    assigned = &ins->values;
  } else if (const auto* up = std::get_if<Update>(&q)) {
    assigned = &up->set;
    owner = owner_from_where(up->where, owner_col);
  } else {
    throw Error("rewrite_write expects an INSERT or UPDATE");
  }
  if (const Value* v = find_assignment(*assigned, owner_col)) {
    if (const auto* s = std::get_if<std::string>(v)) owner = *s;
  }

  std::set<std::string> allowed;
  bool any = false;
  if (owner) {
    for (const auto& e : agreements) {
      if (!e.valid || e.kind != AccessKind::Write || e.domain != table_of(q) || e.consumer != *owner) continue;
      any = true;
      allowed.insert(e.fields.begin(), e.fields.end());
    }
  }

  WriteRewrite out{q, any};
  const Assignments masked = mask(*assigned, owner_col, any ? &allowed : nullptr);
  if (auto* ins = std::get_if<Insert>(&out.query)) {
    ins->values = masked;
  } else {
    std::get<Update>(out.query).set = masked;
  }
  return out;
}

std::size_t apply_deletion(Database& db, const Delete& q) { return execute(db, q).affected; }

std::vector<Query> apply_revocation(Database& db, const Esa& revoked, const std::vector<Esa>& remaining) {
  if (revoked.kind != AccessKind::Write) return {};
  const Schema& schema = db.table(revoked.domain).schema;
  const Predicate mine = owner_is(schema, revoked.consumer);

  std::set<std::string, std::less<>> still_allowed;
  bool any_left = false;
  for (const auto& e : remaining) {
    if (!e.valid || e.kind != AccessKind::Write || e.domain != revoked.domain || e.consumer != revoked.consumer) continue;
    if (e == revoked) continue;
    any_left = true;
    still_allowed.insert(e.fields.begin(), e.fields.end());
  }

  std::vector<Query> out;
  if (!any_left) {
    out.emplace_back(Delete{revoked.domain, mine});
  } else {
    Update up{revoked.domain, {}, mine};
    for (const auto& f : revoked.fields) {
      if (f == schema.owner_column || !schema.has(f) || still_allowed.count(f) != 0) continue;
      up.set.emplace_back(f, Null{});
    }
    if (!up.set.empty()) out.emplace_back(std::move(up));
  }
  for (const auto& q : out) execute(db, q);
  return out;
}

}  // namespace urm::enforcement

#include "urm/enforcement/schema.hpp"

#include <set>

#include "urm/common/error.hpp"

namespace urm::enforcement {

using esa::Value;

std::string_view column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::Integer: return "int";
    case ColumnKind::Decimal: return "decimal";
    case ColumnKind::Text: return "text";
    case ColumnKind::Bool: return "bool";
  }
  return "?";
}

ColumnKind parse_column_kind(std::string_view name) {
  if (name == "int") return ColumnKind::Integer;
  if (name == "decimal") return ColumnKind::Decimal;
  if (name == "text") return ColumnKind::Text;
  if (name == "bool") return ColumnKind::Bool;
  throw Error("unknown column kind '" + std::string(name) + "'");
}

const Column* Schema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Column& Schema::column(std::string_view name) const {
  const Column* c = find(name);
  if (c == nullptr) throw Error("table '" + table + "' has no column '" + std::string(name) + "'");
  return *c;
}

std::vector<std::string> Schema::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void validate_schema(const Schema& schema) {
  if (schema.table.empty()) throw Error("schema has an empty table name");
  std::set<std::string> seen;
  for (const auto& c : schema.columns) {
    if (!seen.insert(c.name).second) throw Error("duplicate column '" + c.name + "' in table '" + schema.table + "'");
  }
  const Column* owner = schema.find(schema.owner_column);
  if (owner == nullptr) throw Error("table '" + schema.table + "' lacks owner column '" + schema.owner_column + "'");
  if (owner->kind != ColumnKind::Text) throw Error("owner column '" + schema.owner_column + "' must be text");
}

bool value_fits(ColumnKind k, const Value& v) {
  switch (esa::kind_of(v)) {
    case esa::ValueKind::Null: return true;
    case esa::ValueKind::Integer: return k == ColumnKind::Integer || k == ColumnKind::Decimal;
    case esa::ValueKind::Decimal: return k == ColumnKind::Decimal;
    case esa::ValueKind::Text: return k == ColumnKind::Text;
    case esa::ValueKind::Bool: return k == ColumnKind::Bool;
  }
  return false;
}

Value coerce(ColumnKind k, const Value& v) {
  if (!value_fits(k, v)) throw Error("value " + esa::render_literal(v) + " does not fit a " +
                                     std::string(column_kind_name(k)) + " column");
  if (k == ColumnKind::Decimal) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return esa::Decimal(*i, 0);
  }
  return v;
}

}  // namespace urm::enforcement

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "urm/esa/value.hpp"

namespace urm::enforcement {

enum class ColumnKind { Integer, Decimal, Text, Bool };

std::string_view column_kind_name(ColumnKind k);
/// Accepts `int`, `decimal`, `text`, `bool`.
ColumnKind parse_column_kind(std::string_view name);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Text;

  friend bool operator==(const Column&, const Column&) = default;
};

struct Schema {
  std::string table;
  std::vector<Column> columns;
  std::string owner_column = "owner";

  const Column* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  /// Throws Error for an unknown column.
  const Column& column(std::string_view name) const;
  std::vector<std::string> column_names() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// Throws Error unless the owner column is present, textual, and names are unique.
void validate_schema(const Schema& schema);

/// True if `v` may be stored in a column of kind `k`. Null fits every column.
bool value_fits(ColumnKind k, const esa::Value& v);

/// Converts a value that fits `k` to the column's representation (integers into decimal columns).
esa::Value coerce(ColumnKind k, const esa::Value& v);

}  // namespace urm::enforcement

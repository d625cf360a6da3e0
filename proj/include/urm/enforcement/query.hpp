#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "urm/common/digest.hpp"
#include "urm/enforcement/schema.hpp"
#include "urm/esa/predicate.hpp"

namespace urm::enforcement {

/// A projected column. The value is returned only for rows satisfying `guard`;
/// other rows see null in its place.
struct SelectItem {
  std::string field;
  esa::Predicate guard;

  friend bool operator==(const SelectItem&, const SelectItem&) = default;
};

struct Select {
  std::vector<SelectItem> items;
  bool all_columns = false;  // `SELECT *`, expanded against the schema at execution
  std::string table;
  esa::Predicate where;

  friend bool operator==(const Select&, const Select&) = default;
};

using Assignments = std::vector<std::pair<std::string, esa::Value>>;

struct Insert {
  std::string table;
  Assignments values;

  friend bool operator==(const Insert&, const Insert&) = default;
};

struct Update {
  std::string table;
  Assignments set;
  esa::Predicate where;

  friend bool operator==(const Update&, const Update&) = default;
};

struct Delete {
  std::string table;
  esa::Predicate where;

  friend bool operator==(const Delete&, const Delete&) = default;
};

using Query = std::variant<Select, Insert, Update, Delete>;

/// Builds a plain Select with unguarded items.
Select select(std::vector<std::string> fields, std::string table, esa::Predicate where = esa::Predicate::always());

/// Parses the textual query forms:
///   SELECT f [WHEN pred], ... FROM t [WHERE pred]
///   INSERT [INTO] t SET f = v, ...
///   UPDATE t SET f = v, ... [WHERE pred]
///   DELETE FROM t [WHERE pred]
/// Keywords are case-insensitive. Throws ParseError.
Query parse_query(std::string_view text);

std::string render_query(const Query& q);
Digest hash_query(const Query& q);
const std::string& table_of(const Query& q);

/// Checks field existence and literal kinds against `schema`. Throws Error.
void validate_query(const Schema& schema, const Query& q);

/// Value assigned to `field`, if any.
const esa::Value* find_assignment(const Assignments& a, std::string_view field);

}  // namespace urm::enforcement

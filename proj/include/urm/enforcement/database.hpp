#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "urm/enforcement/query.hpp"
#include "urm/enforcement/schema.hpp"

namespace urm::enforcement {

using Row = esa::Assignment;

struct Table {
  Schema schema;
  std::vector<Row> rows;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<esa::Value>> rows;
  std::size_t affected = 0;  // rows changed by Insert/Update/Delete
};

/// In-memory relational store. Not internally synchronised: callers serialise access.
class Database {
 public:
  Table& add_table(Schema schema);
  /// Adds a table with existing rows, validating each row.
  Table& add_table(Table table);
  bool has_table(std::string_view name) const;
  Table& table(std::string_view name);
  const Table& table(std::string_view name) const;
  const std::map<std::string, Table, std::less<>>& tables() const { return tables_; }

  /// Inserts a complete row after validation; missing columns are stored as null.
  void insert_row(std::string_view table, const Row& row);

 private:
  std::map<std::string, Table, std::less<>> tables_;
};

/// Runs `q` against `db`. Select returns matching rows projected to the items;
/// an item whose guard fails on a row yields null. Throws Error on schema violations.
ResultSet execute(Database& db, const Query& q);

/// Reads a table from CSV. The header names the columns, optionally annotated
/// as `name:int|decimal|text|bool`; unannotated kinds are inferred from the cells.
/// The first column is the owner column. Empty cells are null.
Table load_csv(std::istream& in, const std::string& table_name);
Table load_csv_file(const std::string& path, const std::string& table_name);

/// Writes a table with annotated header so load_csv reproduces it exactly.
void save_csv(std::ostream& out, const Table& table);

}  // namespace urm::enforcement

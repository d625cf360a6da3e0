#include "urm/enforcement/database.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "urm/common/error.hpp"

namespace urm::enforcement {

using esa::Null;
using esa::Value;

Table& Database::add_table(Schema schema) {
  validate_schema(schema);
  const std::string name = schema.table;
  if (has_table(name)) throw Error("table '" + name + "' already exists");
  auto [it, _] = tables_.emplace(name, Table{std::move(schema), {}});
  return it->second;
}

Table& Database::add_table(Table table) {
  Table& t = add_table(table.schema);
  for (const auto& row : table.rows) insert_row(t.schema.table, row);
  return t;
}

bool Database::has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

Table& Database::table(std::string_view name) {
  const auto it = tables_.find(name);
  if (it == tables_.end()) throw Error("unknown table '" + std::string(name) + "'");
  return it->second;
}

const Table& Database::table(std::string_view name) const {
  const auto it = tables_.find(name);
  if (it == tables_.end()) throw Error("unknown table '" + std::string(name) + "'");
  return it->second;
}

void Database::insert_row(std::string_view table_name, const Row& row) {
  Table& t = table(table_name);
  Row full;
  for (const auto& c : t.schema.columns) {
    const auto it = row.find(c.name);
    full[c.name] = it == row.end() ? Value{Null{}} : coerce(c.kind, it->second);
  }
  for (const auto& [field, _] : row) t.schema.column(field);
  if (!std::holds_alternative<std::string>(full[t.schema.owner_column])) {
    throw Error("row in table '" + t.schema.table + "' has no owner");
  }
  t.rows.push_back(std::move(full));
}

namespace {

ResultSet run_select(const Table& t, const Select& s) {
  ResultSet rs;
  std::vector<SelectItem> items = s.items;
  if (s.all_columns) {
    for (const auto& c : t.schema.columns) items.push_back({c.name, esa::Predicate::always()});
  }
  for (const auto& item : items) rs.columns.push_back(item.field);
  for (const auto& row : t.rows) {
    if (!esa::eval_predicate(s.where, row)) continue;
    std::vector<Value> out;
    out.reserve(items.size());
    for (const auto& item : items) {
      out.push_back(esa::eval_predicate(item.guard, row) ? row.at(item.field) : Value{Null{}});
    }
    rs.rows.push_back(std::move(out));
  }
  return rs;
}

}  // namespace

ResultSet execute(Database& db, const Query& q) {
  Table& t = db.table(table_of(q));
  validate_query(t.schema, q);
  ResultSet rs;
  if (const auto* s = std::get_if<Select>(&q)) return run_select(t, *s);
  if (const auto* ins = std::get_if<Insert>(&q)) {
    Row row(ins->values.begin(), ins->values.end());
    db.insert_row(t.schema.table, row);
    rs.affected = 1;
  } else if (const auto* up = std::get_if<Update>(&q)) {
    for (auto& row : t.rows) {
      if (!esa::eval_predicate(up->where, row)) continue;
      for (const auto& [field, value] : up->set) row[field] = coerce(t.schema.column(field).kind, value);
      ++rs.affected;
    }
  } else {
    const auto& del = std::get<Delete>(q);
    const auto before = t.rows.size();
    std::erase_if(t.rows, [&](const Row& row) { return esa::eval_predicate(del.where, row); });
    rs.affected = before - t.rows.size();
  }
  return rs;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct Cell {
  std::string text;
  bool quoted = false;
};

/// Reads one record; returns false at end of input. Quoted fields may span lines.
bool read_record(std::istream& in, std::vector<Cell>& out) {
  out.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  Cell cell;
  bool in_quotes = false;
  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell.text.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        cell.text.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
      cell.quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell = Cell{};
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cell.text.push_back(c);
    }
  }
  if (in_quotes) throw Error("unterminated quoted CSV field");
  out.push_back(std::move(cell));
  return true;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<esa::Decimal> parse_decimal(std::string_view s) {
  try {
    return esa::Decimal::parse(s);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "false" || s == "FALSE" || s == "False") return false;
  return std::nullopt;
}

ColumnKind infer_kind(const std::vector<std::vector<Cell>>& records, std::size_t col) {
  bool all_int = true;
  bool all_dec = true;
  bool all_bool = true;
  bool any = false;
  for (const auto& r : records) {
    const Cell& c = r[col];
    if (!c.quoted && c.text.empty()) continue;
    any = true;
    if (c.quoted) return ColumnKind::Text;
    all_int = all_int && parse_int(c.text).has_value();
    all_dec = all_dec && parse_decimal(c.text).has_value();
    all_bool = all_bool && parse_bool(c.text).has_value();
  }
  if (!any) return ColumnKind::Text;
  if (all_int) return ColumnKind::Integer;
  if (all_dec) return ColumnKind::Decimal;
  if (all_bool) return ColumnKind::Bool;
  return ColumnKind::Text;
}

Value cell_value(const Cell& c, const Column& col, std::size_t line) {
  if (!c.quoted && c.text.empty()) return Null{};
  auto bad = [&]() -> Value {
    throw Error("CSV line " + std::to_string(line) + ": '" + c.text + "' is not a valid " +
                std::string(column_kind_name(col.kind)) + " for column '" + col.name + "'");
  };
  switch (col.kind) {
    case ColumnKind::Text: return c.text;
    case ColumnKind::Integer:
      if (auto v = parse_int(c.text); v && !c.quoted) return *v;
      return bad();
    case ColumnKind::Decimal:
      if (auto v = parse_decimal(c.text); v && !c.quoted) return *v;
      return bad();
    case ColumnKind::Bool:
      if (auto v = parse_bool(c.text); v && !c.quoted) return *v;
      return bad();
  }
  return bad();
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Table load_csv(std::istream& in, const std::string& table_name) {
  std::vector<Cell> header;
  if (!read_record(in, header)) throw Error("CSV for table '" + table_name + "' is empty");
  std::vector<std::vector<Cell>> records;
  std::vector<Cell> rec;
  while (read_record(in, rec)) {
    if (rec.size() == 1 && rec[0].text.empty() && !rec[0].quoted) continue;
    if (rec.size() != header.size()) {
      throw Error("CSV line " + std::to_string(records.size() + 2) + " has " + std::to_string(rec.size()) +
                  " cells, header has " + std::to_string(header.size()));
    }
    records.push_back(rec);
  }

  Schema schema;
  schema.table = table_name;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i].text;
    const auto colon = h.find(':');
    Column col;
    col.name = h.substr(0, colon);
    col.kind = colon == std::string::npos ? infer_kind(records, i) : parse_column_kind(h.substr(colon + 1));
    schema.columns.push_back(std::move(col));
  }
  if (schema.columns.empty() || schema.columns.front().name.empty()) throw Error("CSV header lacks an owner column");
  schema.owner_column = schema.columns.front().name;
  schema.columns.front().kind = ColumnKind::Text;
  validate_schema(schema);

  Table t{schema, {}};
  for (std::size_t r = 0; r < records.size(); ++r) {
    Row row;
    for (std::size_t i = 0; i < header.size(); ++i) {
      row[schema.columns[i].name] = cell_value(records[r][i], schema.columns[i], r + 2);
    }
    if (!std::holds_alternative<std::string>(row[schema.owner_column])) {
      throw Error("CSV line " + std::to_string(r + 2) + " has no owner");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table load_csv_file(const std::string& path, const std::string& table_name) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_csv(in, table_name);
}

void save_csv(std::ostream& out, const Table& table) {
  const auto& cols = table.schema.columns;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out << ',';
    out << cols[i].name << ':' << column_kind_name(cols[i].kind);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i > 0) out << ',';
      const Value& v = row.at(cols[i].name);
      if (const auto* s = std::get_if<std::string>(&v)) {
        out << quote(*s);
      } else if (!esa::is_null(v)) {
        out << esa::render_plain(v);
      }
    }
    out << '\n';
  }
}

}  // namespace urm::enforcement

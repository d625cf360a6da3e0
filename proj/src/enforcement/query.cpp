#include "urm/enforcement/query.hpp"

#include "urm/common/error.hpp"
#include "urm/esa/esa.hpp"
#include "urm/esa/lexer.hpp"

namespace urm::enforcement {

using esa::Predicate;
using esa::TokenKind;
using esa::TokenStream;
using esa::Value;

Select select(std::vector<std::string> fields, std::string table, Predicate where) {
  Select s;
  for (auto& f : fields) s.items.push_back({std::move(f), Predicate::always()});
  s.table = std::move(table);
  s.where = std::move(where);
  return s;
}

namespace {

Predicate parse_where(TokenStream& ts) {
  if (!ts.accept_keyword("where")) return Predicate::always();
  return ts.parse_predicate();
}

Assignments parse_assignments(TokenStream& ts) {
  Assignments out;
  do {
    const esa::Token at = ts.peek();
    std::string field = ts.expect_identifier("a column name");
    if (find_assignment(out, field) != nullptr) ts.fail_at(at, "column '" + field + "' assigned twice");
    if (ts.peek().kind != TokenKind::Op || ts.peek().text != "=") ts.fail("expected '='");
    ts.next();
    out.emplace_back(std::move(field), ts.parse_literal());
  } while (ts.accept(TokenKind::Comma));
  return out;
}

Select parse_select(TokenStream& ts) {
  Select s;
  if (ts.accept(TokenKind::Star)) {
    s.all_columns = true;
  } else if (!ts.peek_keyword("from")) {
    do {
      SelectItem item{ts.expect_identifier("a column name"), Predicate::always()};
      if (ts.accept_keyword("when")) item.guard = ts.parse_predicate();
      s.items.push_back(std::move(item));
    } while (ts.accept(TokenKind::Comma));
  }
  ts.expect_keyword("from");
  s.table = ts.expect_identifier("a table name");
  s.where = parse_where(ts);
  return s;
}

std::string render_assignments(const Assignments& a) {
  std::string out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i > 0) out += ", ";
    out += a[i].first + " = " + esa::render_literal(a[i].second);
  }
  return out;
}

void check_predicate(const Schema& schema, const Predicate& p) {
  if (p.kind == Predicate::Kind::Atom) {
    const Column& c = schema.column(p.atom.field);
    const Value& rhs = p.atom.rhs;
    const bool ok = esa::is_null(rhs) || (esa::is_numeric(rhs) && (c.kind == ColumnKind::Integer || c.kind == ColumnKind::Decimal)) ||
                    value_fits(c.kind, rhs);
    if (!ok) {
      throw Error("type mismatch: column '" + c.name + "' is " + std::string(column_kind_name(c.kind)) +
                  " but is compared with " + esa::render_literal(rhs));
    }
    return;
  }
  for (const auto& child : p.children) check_predicate(schema, child);
}

void check_assignments(const Schema& schema, const Assignments& a) {
  for (const auto& [field, value] : a) {
    const Column& c = schema.column(field);
    if (!value_fits(c.kind, value)) {
      throw Error("type mismatch: cannot assign " + esa::render_literal(value) + " to " +
                  std::string(column_kind_name(c.kind)) + " column '" + field + "'");
    }
  }
}

}  // namespace

Query parse_query(std::string_view text) {
  TokenStream ts(esa::tokenize(text));
  Query q;
  if (ts.accept_keyword("select")) {
    q = parse_select(ts);
  } else if (ts.accept_keyword("insert")) {
    Insert ins;
    ts.accept_keyword("into");
    ins.table = ts.expect_identifier("a table name");
    ts.expect_keyword("set");
    ins.values = parse_assignments(ts);
    q = std::move(ins);
  } else if (ts.accept_keyword("update")) {
    Update up;
    up.table = ts.expect_identifier("a table name");
    ts.expect_keyword("set");
    up.set = parse_assignments(ts);
    up.where = parse_where(ts);
    q = std::move(up);
  } else if (ts.accept_keyword("delete")) {
    Delete del;
    ts.expect_keyword("from");
    del.table = ts.expect_identifier("a table name");
    del.where = parse_where(ts);
    q = std::move(del);
  } else {
    ts.fail("expected SELECT, INSERT, UPDATE or DELETE");
  }
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return q;
}

std::string render_query(const Query& q) {
  struct Renderer {
    std::string operator()(const Select& s) const {
      std::string out = "SELECT";
      if (s.all_columns) out += " *";
      for (std::size_t i = 0; i < s.items.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += s.items[i].field;
        if (!s.items[i].guard.is_true()) out += " WHEN " + esa::render_predicate(s.items[i].guard);
      }
      return out + " FROM " + s.table + " WHERE " + esa::render_predicate(s.where);
    }
    std::string operator()(const Insert& i) const {
      return "INSERT INTO " + i.table + " SET " + render_assignments(i.values);
    }
    std::string operator()(const Update& u) const {
      return "UPDATE " + u.table + " SET " + render_assignments(u.set) + " WHERE " + esa::render_predicate(u.where);
    }
    std::string operator()(const Delete& d) const {
      return "DELETE FROM " + d.table + " WHERE " + esa::render_predicate(d.where);
    }
  };
  return std::visit(Renderer{}, q);
}

Digest hash_query(const Query& q) { return sha256(render_query(q)); }

const std::string& table_of(const Query& q) {
  return std::visit([](const auto& v) -> const std::string& { return v.table; }, q);
}

void validate_query(const Schema& schema, const Query& q) {
  if (table_of(q) != schema.table) {
    throw Error("query targets table '" + table_of(q) + "' but schema is for '" + schema.table + "'");
  }
  if (const auto* s = std::get_if<Select>(&q)) {
    for (const auto& item : s->items) {
      schema.column(item.field);
      check_predicate(schema, item.guard);
    }
    check_predicate(schema, s->where);
  } else if (const auto* i = std::get_if<Insert>(&q)) {
    check_assignments(schema, i->values);
  } else if (const auto* u = std::get_if<Update>(&q)) {
    check_assignments(schema, u->set);
    check_predicate(schema, u->where);
  } else {
    check_predicate(schema, std::get<Delete>(q).where);
  }
}

const Value* find_assignment(const Assignments& a, std::string_view field) {
  for (const auto& [f, v] : a) {
    if (f == field) return &v;
  }
  return nullptr;
}

}  // namespace urm::enforcement

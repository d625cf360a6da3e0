#include "urm/esa/esa.hpp"

#include <algorithm>
#include <cctype>

#include "urm/common/error.hpp"
#include "urm/esa/lexer.hpp"

namespace urm::esa {

bool FieldOrder::operator()(const std::string& a, const std::string& b) const {
  const auto lower = [](char c) { return std::tolower(static_cast<unsigned char>(c)); };
  const bool less_ci = std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                                    [&](char x, char y) { return lower(x) < lower(y); });
  if (less_ci) return true;
  const bool greater_ci = std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end(),
                                                       [&](char x, char y) { return lower(x) < lower(y); });
  if (greater_ci) return false;
  return a < b;
}

namespace {

bool only_context_fields(const Predicate& p) {
  const auto fields = referenced_fields(p);
  return std::all_of(fields.begin(), fields.end(),
                     [](const std::string& f) { return f == kRequesterField || f == kPurposeField; });
}

std::string render_name(const std::string& name) {
  return is_plain_identifier(name) ? name : render_literal(Value{name});
}

}  // namespace

void validate(const Esa& esa) {
  if (esa.consumer.empty()) throw Error("agreement has an empty consumer");
  if (esa.domain.empty()) throw Error("agreement has an empty domain");
  if (esa.fields.empty()) throw Error("agreement field list is empty");
  if (esa.kind == AccessKind::Write && !esa.rows.is_true()) {
    throw Error("write agreements cannot carry a row predicate");
  }
  if (!only_context_fields(esa.context)) {
    throw Error("context predicate may only reference 'requester' and 'purpose'");
  }
}

Esa parse_esa(std::string_view text) {
  TokenStream ts(tokenize(text));
  Esa esa;

  if (ts.peek().kind == TokenKind::String) {
    esa.consumer = ts.next().text;
  } else {
    esa.consumer = ts.expect_identifier("a consumer name");
  }
  ts.expect(TokenKind::Comma, "',' after the consumer");

  const Token ctx_start = ts.peek();
  esa.context = ts.parse_predicate();
  if (!only_context_fields(esa.context)) {
    ts.fail_at(ctx_start, "context predicate may only reference 'requester' and 'purpose'");
  }
  ts.expect(TokenKind::Colon, "':' after the context predicate");

  ts.expect(TokenKind::LBracket, "'[' opening the field list");
  do {
    const Token field_tok = ts.peek();
    std::string field = ts.expect_identifier("a field name");
    if (!esa.fields.insert(field).second) ts.fail_at(field_tok, "duplicate field '" + field + "'");
  } while (ts.accept(TokenKind::Comma));
  ts.expect(TokenKind::RBracket, "']' closing the field list");

  ts.expect_keyword("of");
  esa.domain = ts.expect_identifier("a domain name");
  if (ts.accept(TokenKind::Dot)) {
    if (!ts.peek_keyword("write")) ts.fail("expected 'write' after '.'");
    ts.next();
    esa.kind = AccessKind::Write;
  }

  if (ts.accept(TokenKind::Comma)) {
    const Token rows_start = ts.peek();
    esa.rows = ts.parse_predicate();
    if (esa.kind == AccessKind::Write && !esa.rows.is_true()) {
      ts.fail_at(rows_start, "write agreements cannot carry a row predicate");
    }
  }
  if (!ts.at_end()) ts.fail("unexpected trailing input");
  return esa;
}

std::string render_predicate(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::True: return "true";
    case Predicate::Kind::False: return "false";
    case Predicate::Kind::Atom:
      return p.atom.field + " " + std::string(op_symbol(p.atom.op)) + " " + render_literal(p.atom.rhs);
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      if (p.children.size() == 1) return render_predicate(p.children.front());
      const std::string sep = p.kind == Predicate::Kind::And ? " and " : " or ";
      std::string out;
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i > 0) out += sep;
        const auto& c = p.children[i];
        out += c.is_compound() && c.children.size() > 1 ? "(" + render_predicate(c) + ")" : render_predicate(c);
      }
      return out;
    }
  }
  return {};
}

std::string render_esa(const Esa& esa) {
  std::string out = render_name(esa.consumer) + ", " + render_predicate(esa.context) + " : [";
  bool first = true;
  for (const auto& f : esa.fields) {
    if (!first) out += ", ";
    out += f;
    first = false;
  }
  out += "] of " + esa.domain;
  if (esa.kind == AccessKind::Write) {
    out += ".write";
  } else {
    out += ", " + render_predicate(esa.rows);
  }
  return out;
}

Digest hash_esa(const Esa& esa) { return sha256(render_esa(esa)); }

// ---------------------------------------------------------------------------
// Natural language

namespace {

std::string join_list(const std::vector<std::string>& items, std::string_view last_sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? std::string(last_sep) : ", ";
    out += items[i];
  }
  return out;
}

std::string_view op_phrase(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "is";
    case CmpOp::Ne: return "is not";
    case CmpOp::Lt: return "is less than";
    case CmpOp::Le: return "is less than or equal to";
    case CmpOp::Gt: return "is greater than";
    case CmpOp::Ge: return "is greater than or equal to";
  }
  return "?";
}

std::string clause(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::True: return "true";
    case Predicate::Kind::False: return "false";
    case Predicate::Kind::Atom:
      return "the " + p.atom.field + " " + std::string(op_phrase(p.atom.op)) + " " + render_plain(p.atom.rhs);
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      const std::string sep = p.kind == Predicate::Kind::And ? " and " : " or ";
      std::string out;
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i > 0) out += sep;
        const auto& c = p.children[i];
        out += c.is_compound() && c.children.size() > 1 ? "(" + clause(c) + ")" : clause(c);
      }
      return out;
    }
  }
  return {};
}

/// Values of `field = v` atoms when `p` is one such atom or a disjunction of them.
std::optional<std::vector<std::string>> equality_values(const Predicate& p, std::string_view field) {
  auto single = [&](const Predicate& a) -> std::optional<std::string> {
    if (a.kind != Predicate::Kind::Atom || a.atom.field != field || a.atom.op != CmpOp::Eq) return std::nullopt;
    return render_plain(a.atom.rhs);
  };
  if (auto v = single(p)) return std::vector<std::string>{*v};
  if (p.kind != Predicate::Kind::Or) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& c : p.children) {
    auto v = single(c);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::string describe_party(const Predicate& p, std::string_view field, std::string_view anyone,
                           std::string_view none, std::string_view noun) {
  if (p.is_true()) return std::string(anyone);
  if (p.is_false()) return std::string(none);
  if (auto values = equality_values(p, field)) return join_list(*values, " or ");
  if (p.kind == Predicate::Kind::Atom && p.atom.op == CmpOp::Ne) {
    return std::string(anyone) + " other than " + render_plain(p.atom.rhs);
  }
  return "any " + std::string(noun) + " such that " + clause(p);
}

}  // namespace

std::string render_natural_language(const Esa& esa) {
  std::vector<Predicate> requester_terms;
  std::vector<Predicate> purpose_terms;
  std::vector<Predicate> mixed_terms;
  const std::vector<Predicate> conjuncts =
      esa.context.kind == Predicate::Kind::And ? esa.context.children : std::vector<Predicate>{esa.context};
  for (const auto& c : conjuncts) {
    const auto fields = referenced_fields(c);
    if (fields.size() == 1 && *fields.begin() == kRequesterField) {
      requester_terms.push_back(c);
    } else if (fields.size() == 1 && *fields.begin() == kPurposeField) {
      purpose_terms.push_back(c);
    } else if (!c.is_true()) {
      mixed_terms.push_back(c);
    }
  }

  std::string who;
  std::string why;
  std::string proviso;
  if (mixed_terms.empty()) {
    who = describe_party(Predicate::all_of(requester_terms), kRequesterField, "Anyone", "No one", "requester");
    why = describe_party(Predicate::all_of(purpose_terms), kPurposeField, "any purpose", "no purpose", "purpose");
  } else {
    who = "Anyone";
    why = "any purpose";
    proviso = ", provided that " + clause(esa.context) + ",";
  }
  if (!who.empty()) who[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(who[0])));

  const std::vector<std::string> fields(esa.fields.begin(), esa.fields.end());
  std::string out = who + " can " + (esa.kind == AccessKind::Write ? "store" : "read") + " the " +
                    join_list(fields, " and ") + " of " + esa.consumer + "'s " + esa.domain + " for " + why + proviso;
  if (!esa.rows.is_true()) out += " and if " + clause(esa.rows);
  if (out.back() == ',') out.pop_back();
  out += ".";
  return out;
}

}  // namespace urm::esa

#include "urm/esa/predicate.hpp"

#include <algorithm>

#include "urm/common/error.hpp"

namespace urm::esa {

Predicate Predicate::compare(std::string field, CmpOp op, Value rhs) {
  Predicate p;
  p.kind = Kind::Atom;
  p.atom = Comparison{std::move(field), op, std::move(rhs)};
  return p;
}

Predicate Predicate::all_of(std::vector<Predicate> children) {
  if (children.empty()) return always();
  if (children.size() == 1) return std::move(children.front());
  return {Kind::And, {}, std::move(children)};
}

Predicate Predicate::any_of(std::vector<Predicate> children) {
  if (children.empty()) return never();
  if (children.size() == 1) return std::move(children.front());
  return {Kind::Or, {}, std::move(children)};
}

bool eval_predicate(const Predicate& p, const std::function<const Value*(const std::string&)>& lookup) {
  switch (p.kind) {
    case Predicate::Kind::True: return true;
    case Predicate::Kind::False: return false;
    case Predicate::Kind::Atom: {
      const Value* v = lookup(p.atom.field);
      if (v == nullptr) throw EvalError("field '" + p.atom.field + "' missing from assignment");
      const auto r = compare(*v, p.atom.op, p.atom.rhs);
      if (!r) {
        throw EvalError("cannot compare " + std::string(kind_name(kind_of(*v))) + " field '" + p.atom.field +
                        "' using " + std::string(op_symbol(p.atom.op)) + " against " +
                        std::string(kind_name(kind_of(p.atom.rhs))));
      }
      return *r;
    }
    case Predicate::Kind::And:
      // Evaluate every child so errors surface regardless of short-circuiting order.
      {
        bool result = true;
        for (const auto& c : p.children) result = eval_predicate(c, lookup) && result;
        return result;
      }
    case Predicate::Kind::Or: {
      bool result = false;
      for (const auto& c : p.children) result = eval_predicate(c, lookup) || result;
      return result;
    }
  }
  return false;
}

bool eval_predicate(const Predicate& p, const Assignment& assignment) {
  return eval_predicate(p, [&](const std::string& field) -> const Value* {
    const auto it = assignment.find(field);
    return it == assignment.end() ? nullptr : &it->second;
  });
}

namespace {

void collect_fields(const Predicate& p, std::set<std::string>& out) {
  if (p.kind == Predicate::Kind::Atom) out.insert(p.atom.field);
  for (const auto& c : p.children) collect_fields(c, out);
}

}  // namespace

std::set<std::string> referenced_fields(const Predicate& p) {
  std::set<std::string> out;
  collect_fields(p, out);
  return out;
}

Predicate substitute(const Predicate& p, const std::string& field, const Value& value) {
  switch (p.kind) {
    case Predicate::Kind::True:
    case Predicate::Kind::False: return p;
    case Predicate::Kind::Atom: {
      if (p.atom.field != field) return p;
      const auto r = compare(value, p.atom.op, p.atom.rhs);
      return r.value_or(false) ? Predicate::always() : Predicate::never();
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      Predicate out{p.kind, {}, {}};
      out.children.reserve(p.children.size());
      for (const auto& c : p.children) out.children.push_back(substitute(c, field, value));
      return out;
    }
  }
  return p;
}

Predicate simplify(const Predicate& p) {
  if (!p.is_compound()) return p;
  const bool is_and = p.kind == Predicate::Kind::And;
  std::vector<Predicate> kept;
  for (const auto& c : p.children) {
    Predicate s = simplify(c);
    if (is_and) {
      if (s.is_false()) return Predicate::never();
      if (s.is_true()) continue;
    } else {
      if (s.is_true()) return Predicate::always();
      if (s.is_false()) continue;
    }
    kept.push_back(std::move(s));
  }
  return is_and ? Predicate::all_of(std::move(kept)) : Predicate::any_of(std::move(kept));
}

int depth(const Predicate& p) {
  int d = 0;
  for (const auto& c : p.children) d = std::max(d, depth(c) + 1);
  return d;
}

}  // namespace urm::esa

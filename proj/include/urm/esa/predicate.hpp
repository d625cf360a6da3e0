#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "urm/esa/value.hpp"

namespace urm::esa {

/// `field op rhs`. Ordering operators require a numeric right-hand side.
struct Comparison {
  std::string field;
  CmpOp op = CmpOp::Eq;
  Value rhs;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Boolean formula over field comparisons. And/Or nodes hold at least one child;
/// the canonical form holds at least two.
struct Predicate {
  enum class Kind { True, False, Atom, And, Or };

  Kind kind = Kind::True;
  Comparison atom;
  std::vector<Predicate> children;

  static Predicate always() { return {}; }
  static Predicate never() { return {Kind::False, {}, {}}; }
  static Predicate compare(std::string field, CmpOp op, Value rhs);
  /// Conjunction; a single child collapses to itself, an empty list to True.
  static Predicate all_of(std::vector<Predicate> children);
  /// Disjunction; a single child collapses to itself, an empty list to False.
  static Predicate any_of(std::vector<Predicate> children);

  bool is_true() const { return kind == Kind::True; }
  bool is_false() const { return kind == Kind::False; }
  bool is_compound() const { return kind == Kind::And || kind == Kind::Or; }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

using Assignment = std::map<std::string, Value, std::less<>>;

/// Evaluates `p` under a complete assignment. Throws EvalError on a missing
/// field or incompatible operand kinds.
bool eval_predicate(const Predicate& p, const Assignment& assignment);

/// Variant taking an arbitrary field lookup; `lookup` returns nullptr for unknown fields.
bool eval_predicate(const Predicate& p, const std::function<const Value*(const std::string&)>& lookup);

/// Every field name referenced by `p`.
std::set<std::string> referenced_fields(const Predicate& p);

/// Replaces each atom on `field` by its truth value under `value` (partial evaluation).
Predicate substitute(const Predicate& p, const std::string& field, const Value& value);

/// Removes constant children and collapses And/Or nodes that become trivial.
Predicate simplify(const Predicate& p);

/// Nesting depth: constants and atoms have depth 0.
int depth(const Predicate& p);

}  // namespace urm::esa

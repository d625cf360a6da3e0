#include "urm/enforcement/entailment.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "urm/common/error.hpp"

namespace urm::enforcement {

using esa::Decimal;
using esa::Null;
using esa::Predicate;
using esa::Value;

DomainMap domains_of(const Schema& schema) {
  DomainMap out;
  for (const auto& c : schema.columns) {
    FieldDomain d;
    d.kind = c.kind;
    d.nullable = c.name != schema.owner_column;
    out.emplace(c.name, d);
  }
  return out;
}

namespace {

__extension__ using int128 = __int128;

int128 pow10(int n) {
  int128 p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

/// Numeric literal as units at a fixed scale.
int128 scaled_units(const Value& v, int scale) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<int128>(*i) * pow10(scale);
  const auto& d = std::get<Decimal>(v);
  return static_cast<int128>(d.units()) * pow10(scale - d.scale());
}

int128 floor_div(int128 a, int128 b) {
  int128 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t narrow(int128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw Error("numeric literal out of range for entailment");
  return static_cast<std::int64_t>(v);
}

struct FieldInfo {
  std::vector<Value> literals;
  std::size_t atoms = 0;
};

void collect(const Predicate& p, std::map<std::string, FieldInfo, std::less<>>& out) {
  if (p.kind == Predicate::Kind::Atom) {
    auto& info = out[p.atom.field];
    ++info.atoms;
    info.literals.push_back(p.atom.rhs);
  }
  for (const auto& c : p.children) collect(c, out);
}

std::vector<Value> integer_candidates(const std::vector<Value>& numeric, const FieldDomain& d) {
  int scale = 0;
  for (const auto& v : numeric) {
    if (const auto* dec = std::get_if<Decimal>(&v)) scale = std::max(scale, dec->scale());
  }
  const int128 unit = pow10(scale);
  std::set<int128> points;
  for (const auto& v : numeric) {
    const int128 u = scaled_units(v, scale);
    const int128 lo = floor_div(u, unit);
    const int128 hi = -floor_div(-u, unit);
    for (int128 x : {lo - 1, lo, hi, hi + 1}) points.insert(x);
  }
  if (d.min) points.insert(*d.min);
  if (d.max) points.insert(*d.max);
  if (points.empty()) points.insert(0);
  std::vector<Value> out;
  for (int128 x : points) {
    if (d.min && x < *d.min) continue;
    if (d.max && x > *d.max) continue;
    if (x > INT64_MAX || x < INT64_MIN) continue;
    out.emplace_back(static_cast<std::int64_t>(x));
  }
  return out;
}

/// One representative per cell of the partition of the decimals induced by the
/// literals: each literal, one value in each gap, one below and one above.
std::vector<Value> decimal_candidates(const std::vector<Value>& numeric) {
  int scale = 0;
  for (const auto& v : numeric) {
    if (const auto* dec = std::get_if<Decimal>(&v)) scale = std::max(scale, dec->scale());
  }
  std::set<int128> points;
  for (const auto& v : numeric) points.insert(scaled_units(v, scale));
  if (points.empty()) return {Value{Decimal(0, 0)}};

  // Work one digit finer when possible so every gap has a midpoint.
  const bool finer = scale < Decimal::kMaxScale;
  const int out_scale = finer ? scale + 1 : scale;
  const int128 k = finer ? 10 : 1;
  std::vector<int128> reps;
  reps.push_back(*points.begin() * k - pow10(out_scale));
  int128 prev = 0;
  bool first = true;
  for (int128 p : points) {
    if (!first) {
      const int128 a = prev * k;
      const int128 b = p * k;
      if (b - a >= 2) reps.push_back(a + (b - a) / 2);
    }
    reps.push_back(p * k);
    prev = p;
    first = false;
  }
  reps.push_back(*points.rbegin() * k + pow10(out_scale));
  std::vector<Value> out;
  for (int128 r : reps) out.emplace_back(Decimal(narrow(r), out_scale));
  return out;
}

std::vector<Value> text_candidates(const std::vector<Value>& literals) {
  std::set<std::string> seen;
  for (const auto& v : literals) {
    if (const auto* s = std::get_if<std::string>(&v)) seen.insert(*s);
  }
  std::vector<Value> out(seen.begin(), seen.end());
  std::string fresh = "~";
  while (seen.count(fresh) != 0) fresh += "~";
  out.emplace_back(fresh);
  return out;
}

std::vector<Value> candidates(const FieldInfo& info, const FieldDomain* declared) {
  std::vector<Value> numeric;
  bool has_text = false;
  bool has_bool = false;
  for (const auto& v : info.literals) {
    if (esa::is_numeric(v)) numeric.push_back(v);
    has_text = has_text || std::holds_alternative<std::string>(v);
    has_bool = has_bool || std::holds_alternative<bool>(v);
  }

  std::vector<Value> out;
  auto append = [&](std::vector<Value> vs) { out.insert(out.end(), vs.begin(), vs.end()); };
  if (declared != nullptr) {
    switch (declared->kind) {
      case ColumnKind::Integer: append(integer_candidates(numeric, *declared)); break;
      case ColumnKind::Decimal: append(decimal_candidates(numeric)); break;
      case ColumnKind::Text: append(text_candidates(info.literals)); break;
      case ColumnKind::Bool: append({true, false}); break;
    }
    if (declared->nullable) out.emplace_back(Null{});
    return out;
  }
  if (!numeric.empty()) append(decimal_candidates(numeric));
  if (has_text) append(text_candidates(info.literals));
  if (has_bool) append({true, false});
  out.emplace_back(Null{});
  return out;
}

/// Substitutes `value` for `field` and simplifies in one pass.
Predicate reduce(const Predicate& p, const std::string& field, const Value& value) {
  switch (p.kind) {
    case Predicate::Kind::True:
    case Predicate::Kind::False: return p;
    case Predicate::Kind::Atom: {
      if (p.atom.field != field) return p;
      return esa::compare(value, p.atom.op, p.atom.rhs).value_or(false) ? Predicate::always() : Predicate::never();
    }
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      const bool is_and = p.kind == Predicate::Kind::And;
      std::vector<Predicate> kept;
      for (const auto& c : p.children) {
        Predicate r = reduce(c, field, value);
        if (r.is_false() && is_and) return Predicate::never();
        if (r.is_true() && !is_and) return Predicate::always();
        if (r.is_true() || r.is_false()) continue;
        kept.push_back(std::move(r));
      }
      return is_and ? Predicate::all_of(std::move(kept)) : Predicate::any_of(std::move(kept));
    }
  }
  return p;
}

bool mentions(const Predicate& p, const std::string& field) {
  if (p.kind == Predicate::Kind::Atom) return p.atom.field == field;
  return std::any_of(p.children.begin(), p.children.end(), [&](const Predicate& c) { return mentions(c, field); });
}

struct Search {
  std::vector<std::string> fields;
  std::vector<std::vector<Value>> cells;

  /// True if some assignment makes `pos` true and `neg` false.
  bool witness(const Predicate& pos, const Predicate& neg, std::size_t idx) const {
    if (pos.is_false() || neg.is_true()) return false;
    if (pos.is_true() && neg.is_false()) return true;
    if (idx == fields.size()) return false;
    const std::string& f = fields[idx];
    if (!mentions(pos, f) && !mentions(neg, f)) return witness(pos, neg, idx + 1);
    for (const auto& v : cells[idx]) {
      if (witness(reduce(pos, f, v), reduce(neg, f, v), idx + 1)) return true;
    }
    return false;
  }
};

bool find_witness(const Predicate& pos, const Predicate& neg, const DomainMap& domains) {
  std::map<std::string, FieldInfo, std::less<>> info;
  collect(pos, info);
  collect(neg, info);

  std::vector<std::pair<std::string, const FieldInfo*>> order;
  for (const auto& [name, fi] : info) order.emplace_back(name, &fi);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second->atoms > b.second->atoms; });

  Search s;
  for (const auto& [name, fi] : order) {
    const auto it = domains.find(name);
    s.fields.push_back(name);
    s.cells.push_back(candidates(*fi, it == domains.end() ? nullptr : &it->second));
  }
  return s.witness(esa::simplify(pos), esa::simplify(neg), 0);
}

}  // namespace

bool satisfiable(const Predicate& p, const DomainMap& domains) {
  return find_witness(p, Predicate::never(), domains);
}

bool entails(const Predicate& pi, const Predicate& phi, const DomainMap& domains) {
  return !find_witness(pi, phi, domains);
}

}  // namespace urm::enforcement

#include "urm/esa/value.hpp"

#include <array>
#include <stdexcept>

namespace urm::esa {

namespace {

__extension__ using int128 = __int128;

constexpr std::array<int128, Decimal::kMaxScale + 1> kPow10 = [] {
  std::array<int128, Decimal::kMaxScale + 1> p{};
  p[0] = 1;
  for (std::size_t i = 1; i < p.size(); ++i) p[i] = p[i - 1] * 10;
  return p;
}();

struct Scaled {
  int128 units;
  int scale;
};

Scaled as_scaled(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return {*i, 0};
  const auto& d = std::get<Decimal>(v);
  return {d.units(), d.scale()};
}

}  // namespace

Decimal::Decimal(std::int64_t units, int scale) : units_(units), scale_(scale) {
  if (scale < 0 || scale > kMaxScale) throw std::invalid_argument("decimal scale out of range");
  while (scale_ > 0 && units_ % 10 == 0) {
    units_ /= 10;
    --scale_;
  }
}

Decimal Decimal::parse(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && text[pos] == '-') {
    negative = true;
    ++pos;
  }
  int128 units = 0;
  int scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.') {
      if (seen_point || !seen_digit) throw std::invalid_argument("malformed decimal literal");
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("malformed decimal literal");
    seen_digit = true;
    units = units * 10 + (c - '0');
    if (seen_point) ++scale;
    if (units > INT64_MAX || scale > kMaxScale) throw std::invalid_argument("decimal literal out of range");
  }
  if (!seen_digit || text.back() == '.') throw std::invalid_argument("malformed decimal literal");
  return Decimal(static_cast<std::int64_t>(negative ? -units : units), scale);
}

std::string Decimal::to_string() const {
  const bool negative = units_ < 0;
  const auto magnitude = static_cast<unsigned long long>(negative ? -static_cast<int128>(units_) : units_);
  std::string digits = std::to_string(magnitude);
  std::string out;
  if (scale_ == 0) {
    out = digits + ".0";
  } else {
    if (digits.size() <= static_cast<std::size_t>(scale_)) {
      digits.insert(0, static_cast<std::size_t>(scale_) - digits.size() + 1, '0');
    }
    out = digits.substr(0, digits.size() - scale_) + "." + digits.substr(digits.size() - scale_);
  }
  return negative ? "-" + out : out;
}

ValueKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return ValueKind::Null;
    case 1: return ValueKind::Integer;
    case 2: return ValueKind::Decimal;
    case 3: return ValueKind::Text;
    default: return ValueKind::Bool;
  }
}

std::string_view kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Null: return "null";
    case ValueKind::Integer: return "integer";
    case ValueKind::Decimal: return "decimal";
    case ValueKind::Text: return "text";
    case ValueKind::Bool: return "bool";
  }
  return "?";
}

bool is_numeric(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<Decimal>(v);
}

bool is_null(const Value& v) { return std::holds_alternative<Null>(v); }

std::strong_ordering compare_numeric(const Value& a, const Value& b) {
  Scaled x = as_scaled(a);
  Scaled y = as_scaled(b);
  if (x.scale < y.scale) {
    x.units *= kPow10[y.scale - x.scale];
  } else if (y.scale < x.scale) {
    y.units *= kPow10[x.scale - y.scale];
  }
  return x.units <=> y.units;
}

std::string_view op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

bool is_ordering(CmpOp op) { return op != CmpOp::Eq && op != CmpOp::Ne; }

std::optional<bool> compare(const Value& lhs, CmpOp op, const Value& rhs) {
  if (is_null(rhs)) {
    if (op == CmpOp::Eq) return is_null(lhs);
    if (op == CmpOp::Ne) return !is_null(lhs);
    return std::nullopt;
  }
  if (is_null(lhs)) return false;

  if (is_numeric(lhs) && is_numeric(rhs)) {
    const auto c = compare_numeric(lhs, rhs);
    switch (op) {
      case CmpOp::Eq: return c == 0;
      case CmpOp::Ne: return c != 0;
      case CmpOp::Lt: return c < 0;
      case CmpOp::Le: return c <= 0;
      case CmpOp::Gt: return c > 0;
      case CmpOp::Ge: return c >= 0;
    }
  }
  if (is_ordering(op)) return std::nullopt;
  if (lhs.index() != rhs.index()) return std::nullopt;
  const bool equal = lhs == rhs;
  return op == CmpOp::Eq ? equal : !equal;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string render_literal(const Value& v) {
  switch (kind_of(v)) {
    case ValueKind::Null: return "null";
    case ValueKind::Integer: return std::to_string(std::get<std::int64_t>(v));
    case ValueKind::Decimal: return std::get<Decimal>(v).to_string();
    case ValueKind::Text: return quote(std::get<std::string>(v));
    case ValueKind::Bool: return std::get<bool>(v) ? "true" : "false";
  }
  return {};
}

std::string render_plain(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return render_literal(v);
}

}  // namespace urm::esa

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace urm::esa {

/// Exact fixed-point decimal: `units / 10^scale`, normalised so that `units`
/// carries no trailing decimal zeros.
class Decimal {
 public:
  static constexpr int kMaxScale = 18;

  constexpr Decimal() = default;
  Decimal(std::int64_t units, int scale);

  /// Parses `-?digits(.digits)?`. Throws std::invalid_argument.
  static Decimal parse(std::string_view text);

  std::int64_t units() const { return units_; }
  int scale() const { return scale_; }

  /// Always renders at least one fractional digit so the literal re-parses as a decimal.
  std::string to_string() const;

  friend bool operator==(const Decimal&, const Decimal&) = default;

 private:
  std::int64_t units_ = 0;
  int scale_ = 0;
};

struct Null {
  friend bool operator==(Null, Null) = default;
};

using Value = std::variant<Null, std::int64_t, Decimal, std::string, bool>;

enum class ValueKind { Null, Integer, Decimal, Text, Bool };

ValueKind kind_of(const Value& v);
std::string_view kind_name(ValueKind k);
bool is_numeric(const Value& v);
bool is_null(const Value& v);

/// Three-way numeric comparison of two integer/decimal values.
std::strong_ordering compare_numeric(const Value& a, const Value& b);

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view op_symbol(CmpOp op);
bool is_ordering(CmpOp op);

/// Evaluates `lhs op rhs`. Null satisfies only `= null`; a non-null value
/// satisfies `!= null`. Returns nullopt when the operand kinds are incompatible.
std::optional<bool> compare(const Value& lhs, CmpOp op, const Value& rhs);

/// Canonical literal text: quoted strings, `null`, `true`/`false`, decimals with a fractional part.
std::string render_literal(const Value& v);

/// Plain text used in natural-language sentences (strings unquoted).
std::string render_plain(const Value& v);

}  // namespace urm::esa

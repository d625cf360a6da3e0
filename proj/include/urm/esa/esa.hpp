#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "urm/common/digest.hpp"
#include "urm/esa/predicate.hpp"

namespace urm::esa {

/// Reserved context fields of an agreement's requester/purpose predicate.
inline constexpr std::string_view kRequesterField = "requester";
inline constexpr std::string_view kPurposeField = "purpose";

/// Case-insensitive ordering with a byte-wise tie break: `age < ethnicity < PSA`.
struct FieldOrder {
  bool operator()(const std::string& a, const std::string& b) const;
};

using FieldSet = std::set<std::string, FieldOrder>;

enum class AccessKind { Read, Write };

/// A sharing agreement: `consumer, context : [fields] of domain, rows`.
struct Esa {
  std::string id;
  std::string consumer;
  Predicate context;
  std::string domain;
  FieldSet fields;
  Predicate rows;
  AccessKind kind = AccessKind::Read;
  bool valid = true;
  std::int64_t deployed_at = 0;

  friend bool operator==(const Esa&, const Esa&) = default;
};

/// Checks the structural invariants; throws urm::Error describing the first violation.
void validate(const Esa& esa);

/// Parses the textual agreement notation. Throws ParseError with line/column.
Esa parse_esa(std::string_view text);

/// Canonical text: sorted field list, normalised spacing, quoted string literals.
std::string render_esa(const Esa& esa);

/// Canonical predicate text; compound children of compound nodes are parenthesised.
std::string render_predicate(const Predicate& p);

/// Rule-based English rendering of an agreement.
std::string render_natural_language(const Esa& esa);

/// SHA-256 of the canonical rendering.
Digest hash_esa(const Esa& esa);

}  // namespace urm::esa

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "urm/enforcement/schema.hpp"
#include "urm/esa/predicate.hpp"

namespace urm::enforcement {

/// Value range of one field for satisfiability purposes.
struct FieldDomain {
  ColumnKind kind = ColumnKind::Decimal;
  std::optional<std::int64_t> min;  // inclusive bounds, integer fields only
  std::optional<std::int64_t> max;
  bool nullable = true;
};

using DomainMap = std::map<std::string, FieldDomain, std::less<>>;

/// Domains for every column of `schema`; the owner column is non-null text.
DomainMap domains_of(const Schema& schema);

/// True if some assignment drawn from the field domains satisfies `p`.
/// Fields missing from `domains` range over every kind of literal they are
/// compared with, over dense numbers, and over null.
bool satisfiable(const esa::Predicate& p, const DomainMap& domains = {});

/// pi entails phi: every assignment satisfying pi satisfies phi.
bool entails(const esa::Predicate& pi, const esa::Predicate& phi, const DomainMap& domains = {});

}  // namespace urm::enforcement

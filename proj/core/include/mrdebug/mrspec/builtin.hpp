#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mrdebug/decimal.hpp"
#include "mrdebug/mrspec/ast.hpp"

namespace mrdebug::mrspec {

struct BuiltinRelation {
  RelationAst ast;
  /// False for relations over behaviour the reference engine does not model
  /// (the annuity sample); campaigns skip them unless asked explicitly.
  bool engine_supported = true;
};

/// Tax years with a builtin library: 2018 through 2021.
std::vector<int> builtin_years();

/// MFJ EITC AGI threshold encoded into P3/P4a for the year. Throws
/// std::out_of_range for unsupported years.
Decimal builtin_eitc_threshold(int year);

/// P1, P2, P3, P4a, P4b, P4c, P5 (P4's three disjuncts as separate
/// relations), followed by the engine-unsupported annuity sample.
std::vector<BuiltinRelation> builtin_relations(int tax_year);

/// Exact contents of specs/builtin_<year>.mr.
std::string builtin_library_text(int tax_year);
/// Exact contents of specs/annuity_sample.mr.
std::string annuity_sample_text();

/// "P4b" -> "P4": the property a per-disjunct relation was expanded from.
std::string relation_family(std::string_view name);

}  // namespace mrdebug::mrspec

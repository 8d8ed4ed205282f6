#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mrdebug/decimal.hpp"

namespace mrdebug::mrspec {

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class Quantifier { forall, exists };
enum class CmpOp { lt, le, eq, ge, gt };

std::string_view to_string(CmpOp op);
/// The operator obtained by swapping operands (a < b  <=>  b > a).
CmpOp mirror(CmpOp op);

struct QuantifiedVar {
  Quantifier kind = Quantifier::forall;
  std::string name;
  int group = 0;  // index of the quantifier statement declaring it
  SourcePos pos;
};

/// `var.label`. The indices are filled in by compile().
struct LabelRef {
  std::string var;
  std::string label;
  int var_index = -1;
  int field_index = -1;

  bool operator==(const LabelRef& o) const { return var == o.var && label == o.label; }
};

/// Bare identifier in term position: an enum tag, or true/false.
struct TagLiteral {
  std::string tag;
  bool operator==(const TagLiteral&) const = default;
};

using Term = std::variant<LabelRef, Decimal, TagLiteral>;

struct Comparison {
  Term lhs;
  CmpOp op = CmpOp::eq;
  Term rhs;
  bool operator==(const Comparison&) const = default;
};

/// `x.blind` or `!x.blind`.
struct BoolAtom {
  LabelRef ref;
  bool negated = false;
  bool operator==(const BoolAtom&) const = default;
};

struct BoolExpr {
  enum class Kind { comparison, atom, conjunction, disjunction };

  Kind kind = Kind::comparison;
  Comparison comparison;
  BoolAtom atom;
  std::vector<BoolExpr> children;
  SourcePos pos;

  /// Structural equality; source positions and resolved indices are ignored.
  bool operator==(const BoolExpr& o) const;
};

struct WhereClause {
  BoolExpr expr;
  SourcePos pos;
  bool operator==(const WhereClause& o) const { return expr == o.expr; }
};

struct MetamorphoseClause {
  std::string target;
  std::string source;
  std::vector<std::string> exceptions;
  SourcePos pos;
  bool operator==(const MetamorphoseClause& o) const {
    return target == o.target && source == o.source && exceptions == o.exceptions;
  }
};

using Clause = std::variant<WhereClause, MetamorphoseClause>;

/// One signed summand of an output expression: ±F(var) or ±constant.
struct OutputTerm {
  int sign = 1;
  std::optional<std::string> var;
  Decimal constant;
  int var_index = -1;
  bool operator==(const OutputTerm& o) const {
    return sign == o.sign && var == o.var && constant == o.constant;
  }
};

struct OutputExpr {
  std::vector<OutputTerm> terms;
  bool parenthesized = false;
  bool operator==(const OutputExpr& o) const {
    return terms == o.terms && parenthesized == o.parenthesized;
  }
};

struct OutputAssertion {
  OutputExpr lhs;
  CmpOp op = CmpOp::eq;
  OutputExpr rhs;
  SourcePos pos;
  bool operator==(const OutputAssertion& o) const {
    return lhs == o.lhs && op == o.op && rhs == o.rhs;
  }
};

struct RelationAst {
  std::string name;
  std::vector<QuantifiedVar> quantifiers;
  std::vector<Clause> clauses;
  OutputAssertion assertion;
  SourcePos pos;

  const QuantifiedVar* find_var(std::string_view name) const;
  bool operator==(const RelationAst& o) const;
};

}  // namespace mrdebug::mrspec

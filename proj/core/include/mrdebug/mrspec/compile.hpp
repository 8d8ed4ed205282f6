#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrdebug/model.hpp"
#include "mrdebug/mrspec/ast.hpp"

namespace mrdebug::mrspec {

class CompileError : public std::runtime_error {
 public:
  CompileError(int clause_index, SourcePos pos, std::string message);

  int clause_index() const { return clause_index_; }
  SourcePos pos() const { return pos_; }
  const std::string& message() const { return message_; }

 private:
  int clause_index_;
  SourcePos pos_;
  std::string message_;
};

enum class Polarity { falsify, witness };

struct FollowUp {
  std::string var;
  int var_index = -1;
  std::string source;
  int source_index = -1;
  std::vector<std::string> exceptions;
  std::vector<int> exception_fields;
};

/// One top-level conjunct of a where clause, with the variables it mentions.
struct Conjunct {
  BoolExpr expr;
  int clause_index = -1;
  std::vector<int> vars;
};

/// A relation split into what the generator needs: source variables and the
/// predicate over them, follow-up variables with their ≡_L constraints and
/// the predicate tying them to the sources, and the output assertion.
struct ExecutableRelation {
  std::string name;
  SchemaPtr schema;
  std::vector<std::string> variables;  // quantifier order
  std::size_t source_count = 0;        // the first quantifier group
  std::vector<FollowUp> followups;     // quantifier order
  std::vector<Conjunct> source_predicate;
  std::vector<Conjunct> followup_predicate;
  OutputAssertion assertion;
  Polarity polarity = Polarity::falsify;

  int var_index(std::string_view var) const;
  bool is_source(int var_index) const { return var_index < static_cast<int>(source_count); }
};

ExecutableRelation compile(const RelationAst& ast, const SchemaPtr& schema);

/// Evaluates a (compiled) expression. `bindings` is indexed by variable.
bool holds(const BoolExpr& expr, std::span<const Record> bindings);
bool holds_all(std::span<const Conjunct> conjuncts, std::span<const Record> bindings);

struct Verdict {
  bool pass = true;
  Decimal deviation;  // positive beyond epsilon means violation
};

/// Signed deviation of `lhs op rhs`: for ≥/> it is rhs - lhs, for ≤/< it is
/// lhs - rhs, for == it is |lhs - rhs|. Non-strict and equality pass iff the
/// deviation is ≤ epsilon; strict comparisons additionally fail when the two
/// sides are within epsilon of each other (deviation ≥ -epsilon).
Verdict judge(CmpOp op, Decimal lhs, Decimal rhs, Decimal epsilon);

/// `outputs` is indexed by variable; throws std::logic_error for an unbound
/// variable referenced by the assertion.
Verdict evaluate_assertion(const ExecutableRelation& rel,
                           std::span<const std::optional<Decimal>> outputs, Decimal epsilon);
Verdict evaluate_assertion(const ExecutableRelation& rel,
                           const std::map<std::string, Decimal>& outputs, Decimal epsilon);

}  // namespace mrdebug::mrspec

#pragma once

#include <string>
#include <vector>

#include "mrdebug/mrspec/ast.hpp"

namespace mrdebug::mrspec {

/// Canonical text form; parse(print(ast)) == ast.
std::string print_relation(const RelationAst& ast);
/// Relations separated by blank lines.
std::string print_spec(const std::vector<RelationAst>& relations);

std::string print_expr(const BoolExpr& expr);
std::string print_output_expr(const OutputExpr& expr);

}  // namespace mrdebug::mrspec

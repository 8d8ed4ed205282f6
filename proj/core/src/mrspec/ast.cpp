#include "mrdebug/mrspec/ast.hpp"

namespace mrdebug::mrspec {

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::eq: return "==";
    case CmpOp::ge: return ">=";
    case CmpOp::gt: return ">";
  }
  return "?";
}

CmpOp mirror(CmpOp op) {
  switch (op) {
    case CmpOp::lt: return CmpOp::gt;
    case CmpOp::le: return CmpOp::ge;
    case CmpOp::eq: return CmpOp::eq;
    case CmpOp::ge: return CmpOp::le;
    case CmpOp::gt: return CmpOp::lt;
  }
  return op;
}

bool BoolExpr::operator==(const BoolExpr& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::comparison: return comparison == o.comparison;
    case Kind::atom: return atom == o.atom;
    default: return children == o.children;
  }
}

const QuantifiedVar* RelationAst::find_var(std::string_view var) const {
  for (const auto& q : quantifiers) {
    if (q.name == var) return &q;
  }
  return nullptr;
}

bool RelationAst::operator==(const RelationAst& o) const {
  if (name != o.name || quantifiers.size() != o.quantifiers.size()) return false;
  for (std::size_t i = 0; i < quantifiers.size(); ++i) {
    const auto& a = quantifiers[i];
    const auto& b = o.quantifiers[i];
    if (a.kind != b.kind || a.name != b.name || a.group != b.group) return false;
  }
  return clauses == o.clauses && assertion == o.assertion;
}

}  // namespace mrdebug::mrspec

#include "mrdebug/mrspec/printer.hpp"

#include <sstream>

namespace mrdebug::mrspec {

namespace {

std::string print_term(const Term& t) {
  if (const auto* r = std::get_if<LabelRef>(&t)) return r->var + "." + r->label;
  if (const auto* d = std::get_if<Decimal>(&t)) return d->to_compact_string();
  return std::get<TagLiteral>(t).tag;
}

std::string print_nested(const BoolExpr& e, BoolExpr::Kind parent) {
  const bool compound =
      e.kind == BoolExpr::Kind::conjunction || e.kind == BoolExpr::Kind::disjunction;
  std::string s = print_expr(e);
  if (compound && (parent == BoolExpr::Kind::conjunction || e.kind == parent)) return "(" + s + ")";
  return s;
}

}  // namespace

std::string print_expr(const BoolExpr& e) {
  switch (e.kind) {
    case BoolExpr::Kind::comparison:
      return print_term(e.comparison.lhs) + " " + std::string(to_string(e.comparison.op)) + " " +
             print_term(e.comparison.rhs);
    case BoolExpr::Kind::atom:
      return (e.atom.negated ? "!" : "") + e.atom.ref.var + "." + e.atom.ref.label;
    case BoolExpr::Kind::conjunction:
    case BoolExpr::Kind::disjunction: {
      const char* sep = e.kind == BoolExpr::Kind::conjunction ? " && " : " || ";
      std::string s;
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) s += sep;
        s += print_nested(e.children[i], e.kind);
      }
      return s;
    }
  }
  return {};
}

std::string print_output_expr(const OutputExpr& e) {
  std::string s;
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    const auto& t = e.terms[i];
    if (i == 0) {
      if (t.sign < 0) s += "-";
    } else {
      s += t.sign < 0 ? " - " : " + ";
    }
    s += t.var ? "F(" + *t.var + ")" : t.constant.to_compact_string();
  }
  return e.parenthesized ? "(" + s + ")" : s;
}

std::string print_relation(const RelationAst& ast) {
  std::ostringstream out;
  out << "relation \"" << ast.name << "\" {\n";
  for (std::size_t i = 0; i < ast.quantifiers.size();) {
    const auto& first = ast.quantifiers[i];
    out << "  " << (first.kind == Quantifier::forall ? "forall " : "exists ") << first.name;
    std::size_t j = i + 1;
    for (; j < ast.quantifiers.size() && ast.quantifiers[j].group == first.group; ++j) {
      out << ", " << ast.quantifiers[j].name;
    }
    out << ";\n";
    i = j;
  }
  for (const auto& clause : ast.clauses) {
    if (const auto* w = std::get_if<WhereClause>(&clause)) {
      out << "  where " << print_expr(w->expr) << ";\n";
      continue;
    }
    const auto& m = std::get<MetamorphoseClause>(clause);
    out << "  metamorphose " << m.target << " from " << m.source << " except {";
    for (std::size_t i = 0; i < m.exceptions.size(); ++i) out << (i ? ", " : "") << m.exceptions[i];
    out << "};\n";
  }
  out << "  assert " << print_output_expr(ast.assertion.lhs) << " "
      << to_string(ast.assertion.op) << " " << print_output_expr(ast.assertion.rhs) << ";\n";
  out << "}\n";
  return out.str();
}

std::string print_spec(const std::vector<RelationAst>& relations) {
  std::string s;
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (i) s += "\n";
    s += print_relation(relations[i]);
  }
  return s;
}

}  // namespace mrdebug::mrspec

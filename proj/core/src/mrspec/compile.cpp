#include "mrdebug/mrspec/compile.hpp"

#include <algorithm>

namespace mrdebug::mrspec {

CompileError::CompileError(int clause_index, SourcePos pos, std::string message)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " +
                         message + " (clause " + std::to_string(clause_index) + ")"),
      clause_index_(clause_index),
      pos_(pos),
      message_(std::move(message)) {}

int ExecutableRelation::var_index(std::string_view var) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] == var) return static_cast<int>(i);
  }
  return -1;
}

namespace {

class Compiler {
 public:
  Compiler(const RelationAst& ast, const SchemaPtr& schema) : ast_(ast), schema_(schema) {}

  ExecutableRelation run() {
    ExecutableRelation rel;
    rel.name = ast_.name;
    rel.schema = schema_;
    const int first_group = ast_.quantifiers.front().group;
    for (const auto& q : ast_.quantifiers) {
      rel.variables.push_back(q.name);
      if (q.group == first_group) ++rel.source_count;
      if (q.kind == Quantifier::exists) rel.polarity = Polarity::witness;
    }
    rel_ = &rel;

    std::vector<std::optional<FollowUp>> followups(rel.variables.size());
    for (std::size_t ci = 0; ci < ast_.clauses.size(); ++ci) {
      clause_ = static_cast<int>(ci);
      const auto& clause = ast_.clauses[ci];
      if (const auto* w = std::get_if<WhereClause>(&clause)) {
        BoolExpr expr = w->expr;
        resolve(expr);
        std::vector<BoolExpr> parts;
        if (expr.kind == BoolExpr::Kind::conjunction) {
          parts = std::move(expr.children);
        } else {
          parts.push_back(std::move(expr));
        }
        for (auto& part : parts) {
          Conjunct c;
          c.clause_index = clause_;
          collect_vars(part, c.vars);
          std::sort(c.vars.begin(), c.vars.end());
          c.vars.erase(std::unique(c.vars.begin(), c.vars.end()), c.vars.end());
          c.expr = std::move(part);
          const bool source_only = std::all_of(c.vars.begin(), c.vars.end(),
                                               [&](int v) { return rel.is_source(v); });
          (source_only ? rel.source_predicate : rel.followup_predicate).push_back(std::move(c));
        }
        continue;
      }
      const auto& m = std::get<MetamorphoseClause>(clause);
      FollowUp f;
      f.var = m.target;
      f.var_index = var_of(m.target, m.pos);
      f.source = m.source;
      f.source_index = var_of(m.source, m.pos);
      if (rel.is_source(f.var_index)) {
        fail(m.pos, "source variable " + m.target + " cannot be a metamorphose target");
      }
      if (f.source_index >= f.var_index) {
        fail(m.pos, "metamorphose target " + m.target + " must be quantified after its source");
      }
      if (followups[f.var_index]) {
        fail(m.pos, "follow-up variable " + m.target + " has more than one metamorphose clause");
      }
      for (const auto& label : m.exceptions) {
        const auto index = schema_->index_of(label);
        if (!index) fail(m.pos, "unknown label " + label);
        f.exceptions.push_back(label);
        f.exception_fields.push_back(static_cast<int>(*index));
      }
      followups[f.var_index] = std::move(f);
    }

    for (std::size_t v = rel.source_count; v < rel.variables.size(); ++v) {
      if (!followups[v]) {
        throw CompileError(-1, ast_.quantifiers[v].pos,
                           "dangling variable " + rel.variables[v] + " has no metamorphose clause");
      }
      rel.followups.push_back(std::move(*followups[v]));
    }

    clause_ = static_cast<int>(ast_.clauses.size());
    rel.assertion = ast_.assertion;
    for (auto* side : {&rel.assertion.lhs, &rel.assertion.rhs}) {
      for (auto& t : side->terms) {
        if (t.var) t.var_index = var_of(*t.var, rel.assertion.pos);
      }
    }
    return rel;
  }

 private:
  [[noreturn]] void fail(SourcePos pos, const std::string& msg) const {
    throw CompileError(clause_, pos, msg);
  }

  int var_of(const std::string& name, SourcePos pos) const {
    const int index = rel_->var_index(name);
    if (index < 0) fail(pos, "unquantified variable " + name);
    return index;
  }

  const FieldSpec& resolve_ref(LabelRef& ref, SourcePos pos) const {
    ref.var_index = var_of(ref.var, pos);
    const auto index = schema_->index_of(ref.label);
    if (!index) fail(pos, "unknown label " + ref.label);
    ref.field_index = static_cast<int>(*index);
    return schema_->field(*index);
  }

  void resolve(BoolExpr& e) const {
    switch (e.kind) {
      case BoolExpr::Kind::comparison: resolve_comparison(e.comparison, e.pos); return;
      case BoolExpr::Kind::atom: {
        const FieldSpec& f = resolve_ref(e.atom.ref, e.pos);
        if (!f.is_boolean()) {
          fail(e.pos, std::string(e.atom.negated ? "negation" : "bare reference") +
                          " requires a boolean label, " + f.name + " is not boolean");
        }
        return;
      }
      default:
        for (auto& c : e.children) resolve(c);
    }
  }

  void resolve_comparison(Comparison& c, SourcePos pos) const {
    const FieldSpec* lf = nullptr;
    const FieldSpec* rf = nullptr;
    if (auto* r = std::get_if<LabelRef>(&c.lhs)) lf = &resolve_ref(*r, pos);
    if (auto* r = std::get_if<LabelRef>(&c.rhs)) rf = &resolve_ref(*r, pos);

    for (const FieldSpec* f : {lf, rf}) {
      if (f && f->is_boolean() && c.op != CmpOp::eq) fail(pos, "comparison on boolean label " + f->name);
      if (f && f->is_enum() && c.op != CmpOp::eq) fail(pos, "ordering comparison on enum label " + f->name);
    }
    auto check_against = [&](const FieldSpec& f, const Term& other, const FieldSpec* other_field) {
      if (other_field) {
        if (f.kind.index() != other_field->kind.index() ||
            (f.is_enum() && !(f.enumeration() == other_field->enumeration()))) {
          fail(pos, "labels " + f.name + " and " + other_field->name + " have incompatible kinds");
        }
        return;
      }
      if (f.is_numeric()) {
        if (!std::holds_alternative<Decimal>(other)) fail(pos, "numeric label " + f.name + " compared with a tag");
      } else if (f.is_boolean()) {
        const auto* tag = std::get_if<TagLiteral>(&other);
        if (!tag || (tag->tag != "true" && tag->tag != "false")) {
          fail(pos, "comparison on boolean label " + f.name);
        }
      } else {
        const auto* tag = std::get_if<TagLiteral>(&other);
        if (!tag) fail(pos, "enum label " + f.name + " compared with a number");
        if (!f.enumeration().contains(tag->tag)) fail(pos, "unknown tag " + tag->tag + " for label " + f.name);
      }
    };
    if (lf) check_against(*lf, c.rhs, rf);
    if (rf) check_against(*rf, c.lhs, lf);
    if (!lf && !rf) {
      if (!std::holds_alternative<Decimal>(c.lhs) || !std::holds_alternative<Decimal>(c.rhs)) {
        fail(pos, "comparison between two tags");
      }
    }
  }

  static void collect_vars(const BoolExpr& e, std::vector<int>& out) {
    switch (e.kind) {
      case BoolExpr::Kind::comparison:
        for (const Term* t : {&e.comparison.lhs, &e.comparison.rhs}) {
          if (const auto* r = std::get_if<LabelRef>(t)) out.push_back(r->var_index);
        }
        return;
      case BoolExpr::Kind::atom: out.push_back(e.atom.ref.var_index); return;
      default:
        for (const auto& c : e.children) collect_vars(c, out);
    }
  }

  const RelationAst& ast_;
  const SchemaPtr& schema_;
  ExecutableRelation* rel_ = nullptr;
  int clause_ = -1;
};

Value term_value(const Term& t, const Term& other, std::span<const Record> bindings) {
  if (const auto* r = std::get_if<LabelRef>(&t)) {
    const auto& v = bindings[r->var_index].at(r->field_index);
    if (!v) throw std::logic_error("unbound label " + r->var + "." + r->label);
    return *v;
  }
  if (const auto* d = std::get_if<Decimal>(&t)) return *d;
  const auto& tag = std::get<TagLiteral>(t).tag;
  if (const auto* r = std::get_if<LabelRef>(&other)) {
    const auto& schema = *bindings[r->var_index].schema();
    if (schema.field(r->field_index).is_boolean()) return tag == "true";
  }
  return EnumTag{tag};
}

}  // namespace

ExecutableRelation compile(const RelationAst& ast, const SchemaPtr& schema) {
  if (ast.quantifiers.empty()) throw CompileError(-1, ast.pos, "relation has no quantifiers");
  return Compiler(ast, schema).run();
}

bool holds(const BoolExpr& e, std::span<const Record> bindings) {
  switch (e.kind) {
    case BoolExpr::Kind::comparison: {
      const Value a = term_value(e.comparison.lhs, e.comparison.rhs, bindings);
      const Value b = term_value(e.comparison.rhs, e.comparison.lhs, bindings);
      if (e.comparison.op == CmpOp::eq) return a == b;
      const Decimal x = std::get<Decimal>(a);
      const Decimal y = std::get<Decimal>(b);
      switch (e.comparison.op) {
        case CmpOp::lt: return x < y;
        case CmpOp::le: return x <= y;
        case CmpOp::ge: return x >= y;
        case CmpOp::gt: return x > y;
        default: return false;
      }
    }
    case BoolExpr::Kind::atom: {
      const auto& r = e.atom.ref;
      const auto& v = bindings[r.var_index].at(r.field_index);
      if (!v) throw std::logic_error("unbound label " + r.var + "." + r.label);
      return std::get<bool>(*v) != e.atom.negated;
    }
    case BoolExpr::Kind::conjunction:
      return std::all_of(e.children.begin(), e.children.end(),
                         [&](const BoolExpr& c) { return holds(c, bindings); });
    case BoolExpr::Kind::disjunction:
      return std::any_of(e.children.begin(), e.children.end(),
                         [&](const BoolExpr& c) { return holds(c, bindings); });
  }
  return false;
}

bool holds_all(std::span<const Conjunct> conjuncts, std::span<const Record> bindings) {
  return std::all_of(conjuncts.begin(), conjuncts.end(),
                     [&](const Conjunct& c) { return holds(c.expr, bindings); });
}

Verdict judge(CmpOp op, Decimal lhs, Decimal rhs, Decimal epsilon) {
  Verdict v;
  switch (op) {
    case CmpOp::eq:
      v.deviation = abs(lhs - rhs);
      v.pass = v.deviation <= epsilon;
      break;
    case CmpOp::ge:
    case CmpOp::gt:
      v.deviation = rhs - lhs;
      v.pass = op == CmpOp::ge ? v.deviation <= epsilon : v.deviation < -epsilon;
      break;
    case CmpOp::le:
    case CmpOp::lt:
      v.deviation = lhs - rhs;
      v.pass = op == CmpOp::le ? v.deviation <= epsilon : v.deviation < -epsilon;
      break;
  }
  return v;
}

namespace {

Decimal sum(const OutputExpr& e, std::span<const std::optional<Decimal>> outputs) {
  Decimal total;
  for (const auto& t : e.terms) {
    Decimal term = t.constant;
    if (t.var) {
      if (t.var_index < 0 || t.var_index >= static_cast<int>(outputs.size()) ||
          !outputs[t.var_index]) {
        throw std::logic_error("internal error: unbound variable " + *t.var + " in assertion");
      }
      term = *outputs[t.var_index];
    }
    total += t.sign < 0 ? -term : term;
  }
  return total;
}

}  // namespace

Verdict evaluate_assertion(const ExecutableRelation& rel,
                           std::span<const std::optional<Decimal>> outputs, Decimal epsilon) {
  return judge(rel.assertion.op, sum(rel.assertion.lhs, outputs), sum(rel.assertion.rhs, outputs),
               epsilon);
}

Verdict evaluate_assertion(const ExecutableRelation& rel,
                           const std::map<std::string, Decimal>& outputs, Decimal epsilon) {
  std::vector<std::optional<Decimal>> by_index(rel.variables.size());
  for (const auto& [var, value] : outputs) {
    const int index = rel.var_index(var);
    if (index >= 0) by_index[index] = value;
  }
  return evaluate_assertion(rel, by_index, epsilon);
}

}  // namespace mrdebug::mrspec

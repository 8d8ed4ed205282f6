#include "mrdebug/generator.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "mrdebug/errors.hpp"

namespace mrdebug::generator {

using mrspec::BoolExpr;
using mrspec::CmpOp;
using mrspec::Conjunct;
using mrspec::ExecutableRelation;
using mrspec::LabelRef;

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r < limit) return r % n;
  }
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::string_view relation) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : relation) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SearchConfig::validate() const {
  if (budget <= 0) throw ParameterError("budget must be positive");
  if (population < 1) throw ParameterError("population must be at least 1");
  if (!(restart_probability >= 0.0 && restart_probability <= 1.0)) {
    throw ParameterError("restart probability must lie in [0,1]");
  }
  if (!(boundary_bias >= 0.0 && boundary_bias <= 1.0)) throw ParameterError("boundary bias must lie in [0,1]");
  if (step_multiplier < 1 || boundary_band < 0) throw ParameterError("step sizes must be positive");
  if (rejection_attempts < 0 || repair_attempts < 1 || perturbation_attempts < 1) {
    throw ParameterError("attempt limits must be positive");
  }
}

namespace {

using Slot = std::pair<int, int>;  // (variable, field)

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Feasible values of one slot: a grid-index interval for numerics, a mask
// over {false,true} or the enum tags otherwise.
struct Domain {
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  std::vector<char> allowed;
  bool numeric = false;

  explicit Domain(const FieldSpec& f) {
    if (f.is_numeric()) {
      numeric = true;
      hi = f.numeric().grid_size() - 1;
    } else if (f.is_boolean()) {
      allowed.assign(2, 1);
    } else {
      allowed.assign(f.enumeration().values.size(), 1);
    }
  }

  bool empty() const {
    if (numeric) return lo > hi;
    return std::none_of(allowed.begin(), allowed.end(), [](char c) { return c != 0; });
  }
};

std::size_t tag_index(const FieldSpec& f, const std::string& tag) {
  const auto& vs = f.enumeration().values;
  return static_cast<std::size_t>(std::find(vs.begin(), vs.end(), tag) - vs.begin());
}

// Restricts `d` to values v with `v op bound`.
void restrict(Domain& d, const FieldSpec& f, CmpOp op, const Value& bound) {
  if (d.numeric) {
    const auto& n = f.numeric();
    const auto* b = std::get_if<Decimal>(&bound);
    if (!b) {
      d.hi = d.lo - 1;
      return;
    }
    const std::int64_t off = (*b - n.min).cents();
    const std::int64_t step = n.step.cents();
    switch (op) {
      case CmpOp::le: d.hi = std::min(d.hi, floor_div(off, step)); break;
      case CmpOp::lt: d.hi = std::min(d.hi, ceil_div(off, step) - 1); break;
      case CmpOp::ge: d.lo = std::max(d.lo, ceil_div(off, step)); break;
      case CmpOp::gt: d.lo = std::max(d.lo, floor_div(off, step) + 1); break;
      case CmpOp::eq:
        if (off % step != 0) {
          d.hi = d.lo - 1;
        } else {
          d.lo = std::max(d.lo, off / step);
          d.hi = std::min(d.hi, off / step);
        }
        break;
    }
    return;
  }
  if (op != CmpOp::eq) return;
  std::size_t keep = d.allowed.size();
  if (const auto* bv = std::get_if<bool>(&bound)) {
    keep = *bv ? 1 : 0;
  } else if (const auto* t = std::get_if<EnumTag>(&bound)) {
    if (f.is_enum()) keep = tag_index(f, t->tag);
  }
  for (std::size_t i = 0; i < d.allowed.size(); ++i) {
    if (i != keep) d.allowed[i] = 0;
  }
}

// Atomic constraints usable for direct assignment: comparisons and boolean
// atoms reachable through conjunctions only. Disjunctions are left to the
// final predicate check.
void collect_atoms(const BoolExpr& e, std::vector<const BoolExpr*>& out) {
  switch (e.kind) {
    case BoolExpr::Kind::comparison:
    case BoolExpr::Kind::atom: out.push_back(&e); return;
    case BoolExpr::Kind::conjunction:
      for (const auto& c : e.children) collect_atoms(c, out);
      return;
    case BoolExpr::Kind::disjunction: return;
  }
}

void collect_constants(const BoolExpr& e, std::map<int, std::set<Decimal>>& out) {
  if (e.kind == BoolExpr::Kind::comparison) {
    const auto& c = e.comparison;
    const auto* lr = std::get_if<LabelRef>(&c.lhs);
    const auto* rr = std::get_if<LabelRef>(&c.rhs);
    const auto* ld = std::get_if<Decimal>(&c.lhs);
    const auto* rd = std::get_if<Decimal>(&c.rhs);
    if (lr && rd) out[lr->field_index].insert(*rd);
    if (rr && ld) out[rr->field_index].insert(*ld);
    return;
  }
  for (const auto& c : e.children) collect_constants(c, out);
}

// Constants each field is compared against anywhere in the relation; the
// boundary-biased draws aim near them.
std::map<int, std::vector<std::int64_t>> boundary_hints(const ExecutableRelation& rel) {
  std::map<int, std::set<Decimal>> constants;
  for (const auto* preds : {&rel.source_predicate, &rel.followup_predicate}) {
    for (const auto& c : *preds) collect_constants(c.expr, constants);
  }
  std::map<int, std::vector<std::int64_t>> out;
  for (const auto& [field, values] : constants) {
    const FieldSpec& f = rel.schema->field(static_cast<std::size_t>(field));
    if (!f.is_numeric()) continue;
    for (Decimal v : values) {
      out[field].push_back(floor_div((v - f.numeric().min).cents(), f.numeric().step.cents()));
    }
  }
  return out;
}

class Draw {
 public:
  Draw(const ExecutableRelation& rel, Rng& rng, const SearchConfig& cfg)
      : rel_(rel), rng_(rng), cfg_(cfg), hints_(boundary_hints(rel)) {}

  Value sample(int field, const Domain& d) {
    const FieldSpec& f = rel_.schema->field(static_cast<std::size_t>(field));
    if (d.numeric) return f.numeric().grid_value(sample_index(field, d.lo, d.hi));
    std::vector<std::size_t> options;
    for (std::size_t i = 0; i < d.allowed.size(); ++i) {
      if (d.allowed[i]) options.push_back(i);
    }
    const std::size_t pick = options[rng_.below(options.size())];
    if (f.is_boolean()) return pick == 1;
    return EnumTag{f.enumeration().values[pick]};
  }

  Record uniform_record(const SchemaPtr& schema) {
    Record r(schema);
    for (std::size_t i = 0; i < schema->size(); ++i) {
      r = r.with(i, sample(static_cast<int>(i), Domain(schema->field(i))));
    }
    return r;
  }

  Rng& rng() { return rng_; }
  const SearchConfig& cfg() const { return cfg_; }

 private:
  std::int64_t sample_index(int field, std::int64_t lo, std::int64_t hi) {
    const auto it = hints_.find(field);
    if (it != hints_.end() && cfg_.boundary_bias > 0.0 && rng_.chance(cfg_.boundary_bias)) {
      const std::int64_t centre = it->second[rng_.below(it->second.size())];
      const std::int64_t a = std::max(lo, centre - cfg_.boundary_band);
      const std::int64_t b = std::min(hi, centre + cfg_.boundary_band);
      if (a <= b) return rng_.between(a, b);
    }
    return rng_.between(lo, hi);
  }

  const ExecutableRelation& rel_;
  Rng& rng_;
  const SearchConfig& cfg_;
  std::map<int, std::vector<std::int64_t>> hints_;
};

// Assigns `free` slots in order; each slot's domain is narrowed by every
// atom whose other side is a constant or an already assigned slot.
bool assign_slots(const ExecutableRelation& rel, Bindings& b, const std::vector<Slot>& free,
                  const std::vector<const BoolExpr*>& atoms, Draw& draw) {
  std::set<Slot> pending(free.begin(), free.end());
  auto slot_of = [](const LabelRef& r) { return Slot{r.var_index, r.field_index}; };
  for (const Slot& slot : free) {
    const FieldSpec& f = rel.schema->field(static_cast<std::size_t>(slot.second));
    Domain d(f);
    for (const BoolExpr* atom : atoms) {
      if (atom->kind == BoolExpr::Kind::atom) {
        if (slot_of(atom->atom.ref) == slot) restrict(d, f, CmpOp::eq, Value{!atom->atom.negated});
        continue;
      }
      const auto& c = atom->comparison;
      const auto* lr = std::get_if<LabelRef>(&c.lhs);
      const auto* rr = std::get_if<LabelRef>(&c.rhs);
      const bool on_left = lr && slot_of(*lr) == slot;
      const bool on_right = rr && slot_of(*rr) == slot;
      if (on_left == on_right) continue;
      const mrspec::Term& other = on_left ? c.rhs : c.lhs;
      const CmpOp op = on_left ? c.op : mrspec::mirror(c.op);
      Value bound;
      if (const auto* o = std::get_if<LabelRef>(&other)) {
        if (pending.count(slot_of(*o))) continue;
        const auto& v = b[o->var_index].at(o->field_index);
        if (!v) continue;
        bound = *v;
      } else if (const auto* dv = std::get_if<Decimal>(&other)) {
        bound = *dv;
      } else {
        const auto& tag = std::get<mrspec::TagLiteral>(other).tag;
        bound = f.is_boolean() ? Value{tag == "true"} : Value{EnumTag{tag}};
      }
      restrict(d, f, op, bound);
    }
    if (d.empty()) return false;
    b[slot.first] = b[slot.first].with(static_cast<std::size_t>(slot.second), draw.sample(slot.second, d));
    pending.erase(slot);
  }
  return true;
}

std::vector<const BoolExpr*> atoms_of(const std::vector<Conjunct>& conjuncts) {
  std::vector<const BoolExpr*> out;
  for (const auto& c : conjuncts) collect_atoms(c.expr, out);
  return out;
}

Bindings sample_source_impl(const ExecutableRelation& rel, Draw& draw) {
  const SearchConfig& cfg = draw.cfg();
  Bindings b(rel.variables.size());
  for (int attempt = 0; attempt < cfg.rejection_attempts; ++attempt) {
    for (std::size_t v = 0; v < rel.source_count; ++v) b[v] = draw.uniform_record(rel.schema);
    if (mrspec::holds_all(rel.source_predicate, b)) return b;
  }
  std::vector<Slot> free;
  for (std::size_t v = 0; v < rel.source_count; ++v) {
    for (std::size_t f = 0; f < rel.schema->size(); ++f) free.emplace_back(static_cast<int>(v), static_cast<int>(f));
  }
  const auto atoms = atoms_of(rel.source_predicate);
  for (int attempt = 0; attempt < cfg.repair_attempts; ++attempt) {
    for (std::size_t v = 0; v < rel.source_count; ++v) b[v] = Record(rel.schema);
    if (assign_slots(rel, b, free, atoms, draw) && mrspec::holds_all(rel.source_predicate, b)) return b;
  }
  throw Unsatisfiable("source predicate of " + rel.name + " could not be satisfied");
}

Bindings derive_followups_impl(const ExecutableRelation& rel, Bindings b, Draw& draw) {
  std::vector<Slot> free;
  std::set<Slot> free_set;
  for (const auto& fu : rel.followups) {
    Record copy = b[fu.source_index];
    b[fu.var_index] = copy;
    for (int field : fu.exception_fields) {
      free.emplace_back(fu.var_index, field);
      free_set.emplace(fu.var_index, field);
    }
  }
  // Conjuncts over labels outside every exception set cannot be repaired.
  for (const auto& c : rel.followup_predicate) {
    std::vector<const BoolExpr*> atoms;
    collect_atoms(c.expr, atoms);
    bool touches_free = false;
    std::vector<const BoolExpr*> stack{&c.expr};
    while (!stack.empty()) {
      const BoolExpr* e = stack.back();
      stack.pop_back();
      if (e->kind == BoolExpr::Kind::atom) {
        touches_free |= free_set.count({e->atom.ref.var_index, e->atom.ref.field_index}) > 0;
      } else if (e->kind == BoolExpr::Kind::comparison) {
        for (const auto* t : {&e->comparison.lhs, &e->comparison.rhs}) {
          if (const auto* r = std::get_if<LabelRef>(t)) touches_free |= free_set.count({r->var_index, r->field_index}) > 0;
        }
      } else {
        for (const auto& child : e->children) stack.push_back(&child);
      }
    }
    if (!touches_free && !mrspec::holds(c.expr, b)) {
      throw Unsatisfiable("follow-up predicate of " + rel.name + " cannot hold within the exception sets");
    }
  }
  const auto atoms = atoms_of(rel.followup_predicate);
  const Bindings start = b;
  for (int attempt = 0; attempt < draw.cfg().repair_attempts; ++attempt) {
    b = start;
    if (assign_slots(rel, b, free, atoms, draw) && mrspec::holds_all(rel.followup_predicate, b)) return b;
  }
  throw Unsatisfiable("follow-up predicate of " + rel.name + " could not be satisfied");
}

std::size_t assertion_evaluations(const ExecutableRelation& rel) {
  std::set<int> vars;
  for (const auto* side : {&rel.assertion.lhs, &rel.assertion.rhs}) {
    for (const auto& t : side->terms) {
      if (t.var) vars.insert(t.var_index);
    }
  }
  return vars.size();
}

// Higher is more promising: violations for falsification, passes for
// witness search.
double score(const ExecutableRelation& rel, const TestCase& tc) {
  return rel.polarity == mrspec::Polarity::witness ? -tc.rank() : tc.rank();
}

}  // namespace

Record sample_uniform(const SchemaPtr& schema, Rng& rng) {
  Record r(schema);
  for (std::size_t i = 0; i < schema->size(); ++i) {
    const FieldSpec& f = schema->field(i);
    if (f.is_numeric()) {
      r = r.with(i, f.numeric().grid_value(rng.between(0, f.numeric().grid_size() - 1)));
    } else if (f.is_boolean()) {
      r = r.with(i, rng.below(2) == 1);
    } else {
      r = r.with(i, EnumTag{f.enumeration().values[rng.below(f.enumeration().values.size())]});
    }
  }
  return r;
}

Bindings sample_source(const ExecutableRelation& rel, Rng& rng, const SearchConfig& cfg) {
  Draw draw(rel, rng, cfg);
  return sample_source_impl(rel, draw);
}

Bindings derive_followups(const ExecutableRelation& rel, Bindings sources, Rng& rng, const SearchConfig& cfg) {
  Draw draw(rel, rng, cfg);
  sources.resize(rel.variables.size());
  return derive_followups_impl(rel, std::move(sources), draw);
}

std::vector<std::pair<int, int>> mutable_slots(const ExecutableRelation& rel) {
  std::set<Slot> pinned;
  for (const auto* atom : atoms_of(rel.source_predicate)) {
    if (atom->kind == BoolExpr::Kind::atom) {
      pinned.emplace(atom->atom.ref.var_index, atom->atom.ref.field_index);
    } else if (atom->comparison.op == CmpOp::eq) {
      for (const auto* t : {&atom->comparison.lhs, &atom->comparison.rhs}) {
        if (const auto* r = std::get_if<LabelRef>(t)) pinned.emplace(r->var_index, r->field_index);
      }
    }
  }
  std::vector<Slot> out;
  for (std::size_t v = 0; v < rel.source_count; ++v) {
    for (std::size_t f = 0; f < rel.schema->size(); ++f) {
      const Slot s{static_cast<int>(v), static_cast<int>(f)};
      if (!pinned.count(s)) out.push_back(s);
    }
  }
  return out;
}

std::int64_t evaluate_case(const ExecutableRelation& rel, const Sut& sut, Decimal epsilon, TestCase& tc) {
  std::set<int> vars;
  for (const auto* side : {&rel.assertion.lhs, &rel.assertion.rhs}) {
    for (const auto& t : side->terms) {
      if (t.var) vars.insert(t.var_index);
    }
  }
  tc.outputs.assign(rel.variables.size(), std::nullopt);
  std::vector<std::optional<Decimal>> values(rel.variables.size());
  std::int64_t evaluations = 0;
  for (int v : vars) {
    ++evaluations;
    try {
      tc.outputs[v] = sut.evaluate(tc.bindings[v]);
      values[v] = tc.outputs[v]->value;
    } catch (const SutFailure& e) {
      tc.pass = false;
      tc.deviation.reset();
      tc.error = rel.variables[v] + ": " + std::string(to_string(e.kind())) + ": " + e.what();
      return evaluations;
    }
  }
  const auto verdict = mrspec::evaluate_assertion(rel, values, epsilon);
  tc.pass = verdict.pass;
  tc.deviation = verdict.deviation;
  tc.error.clear();
  return evaluations;
}

StepResult search_step(const ExecutableRelation& rel, std::vector<TestCase>& promising, const SearchConfig& cfg,
                       Rng& rng, const Sut& sut, Decimal epsilon, std::int64_t budget_left,
                       std::int64_t case_id) {
  StepResult out;
  const auto needed = static_cast<std::int64_t>(assertion_evaluations(rel));
  Draw draw(rel, rng, cfg);

  auto finish = [&](Bindings bindings, std::optional<std::int64_t> parent) {
    TestCase tc;
    tc.id = case_id;
    tc.relation = rel.name;
    tc.variables = rel.variables;
    tc.source_count = rel.source_count;
    tc.bindings = std::move(bindings);
    tc.parent = parent;
    out.cost += evaluate_case(rel, sut, epsilon, tc);
    out.test_case = tc;
  };

  const bool restart = promising.empty() || rng.chance(cfg.restart_probability);
  const auto slots = mutable_slots(rel);
  bool done = false;
  if (!restart && !slots.empty()) {
    const TestCase* parent = &promising.front();
    for (const auto& m : promising) {
      if (score(rel, m) > score(rel, *parent)) parent = &m;
    }
    for (int attempt = 0; attempt < cfg.perturbation_attempts; ++attempt) {
      if (out.cost + needed > budget_left) return out;
      Bindings b(parent->bindings.begin(), parent->bindings.begin() + static_cast<std::ptrdiff_t>(rel.source_count));
      b.resize(rel.variables.size());
      const Slot slot = slots[rng.below(slots.size())];
      const FieldSpec& f = rel.schema->field(static_cast<std::size_t>(slot.second));
      const auto& current = b[slot.first].at(static_cast<std::size_t>(slot.second));
      Value next;
      if (f.is_numeric()) {
        const auto& n = f.numeric();
        const Decimal delta = Decimal::from_cents(n.step.cents() * cfg.step_multiplier);
        const Decimal v = std::get<Decimal>(*current);
        next = std::clamp(rng.below(2) == 0 ? v - delta : v + delta, n.min, n.max);
      } else if (f.is_boolean()) {
        next = !std::get<bool>(*current);
      } else {
        const auto& values = f.enumeration().values;
        const std::size_t cur = tag_index(f, std::get<EnumTag>(*current).tag);
        std::size_t pick = cur;
        if (values.size() > 1) {
          pick = rng.below(values.size() - 1);
          if (pick >= cur) ++pick;
        }
        next = EnumTag{values[pick]};
      }
      b[slot.first] = b[slot.first].with(static_cast<std::size_t>(slot.second), next);
      if (!mrspec::holds_all(rel.source_predicate, b)) {
        ++out.cost;
        ++out.discarded;
        continue;
      }
      try {
        b = derive_followups_impl(rel, std::move(b), draw);
      } catch (const Unsatisfiable&) {
        ++out.cost;
        ++out.discarded;
        continue;
      }
      if (out.cost + needed > budget_left) return out;
      finish(std::move(b), parent->id);
      done = true;
      break;
    }
  }
  if (!done) {
    if (out.cost + needed > budget_left) return out;
    out.restarted = true;
    finish(derive_followups_impl(rel, sample_source_impl(rel, draw), draw), std::nullopt);
  }

  promising.push_back(*out.test_case);
  if (promising.size() > cfg.population) {
    auto worst = promising.begin();
    for (auto it = promising.begin(); it != promising.end(); ++it) {
      if (score(rel, *it) <= score(rel, *worst)) worst = it;
    }
    promising.erase(worst);
  }
  return out;
}

std::int64_t RelationResult::fail_count() const {
  return std::count_if(cases.begin(), cases.end(), [](const TestCase& c) { return !c.pass; });
}

std::int64_t RelationResult::pass_count() const {
  return static_cast<std::int64_t>(cases.size()) - fail_count();
}

RelationResult run_relation(const ExecutableRelation& rel, const Sut& sut, const RunConfig& cfg) {
  cfg.search.validate();
  if (cfg.k < 1) throw ParameterError("K must be at least 1");
  const auto started = std::chrono::steady_clock::now();
  RelationResult result;
  result.name = rel.name;
  result.polarity = rel.polarity;
  result.seed = derive_seed(cfg.search.seed, rel.name);
  Rng rng(result.seed);
  const bool witness = rel.polarity == mrspec::Polarity::witness;
  std::int64_t spent = 0;

  for (std::size_t source = 0; source < cfg.sources; ++source) {
    stats::SequentialTest test(cfg.k, source);
    // Witness relations look for one passing case per source; K failures in a
    // row falsify the source instead.
    stats::SourceVerdict witness_verdict;
    witness_verdict.source_id = source;
    std::vector<TestCase> promising;
    std::int64_t step = 0;
    bool decided = false;
    while (!decided && !result.skipped) {
      StepResult sr;
      try {
        sr = search_step(rel, promising, cfg.search, rng, sut, cfg.epsilon, cfg.search.budget - spent,
                         static_cast<std::int64_t>(result.cases.size()));
      } catch (const Unsatisfiable& e) {
        result.skipped = e.what();
        break;
      }
      spent += sr.cost;
      result.discarded += sr.discarded;
      if (!sr.test_case) break;
      TestCase& tc = *sr.test_case;
      tc.source_id = static_cast<std::int64_t>(source);
      tc.step = step++;
      tc.seed = result.seed;
      tc.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (!tc.pass && !result.first_failure) {
        result.first_failure = tc.id;
        result.time_to_first_failure = tc.elapsed;
      }
      if (witness) {
        ++witness_verdict.observed;
        if (tc.pass) {
          witness_verdict.outcome = stats::Outcome::certified_pass;
          witness_verdict.consecutive_passes = 1;
          decided = true;
        } else if (witness_verdict.observed == cfg.k) {
          witness_verdict.outcome = stats::Outcome::falsified;
          witness_verdict.failure_index = witness_verdict.observed - 1;
          decided = true;
        }
      } else {
        decided = test.push(tc.pass);
      }
      result.cases.push_back(std::move(tc));
    }
    if (result.skipped) break;
    result.verdicts.push_back(witness ? witness_verdict : test.verdict());
  }
  if (result.skipped) result.verdicts.clear();
  result.evaluations = spent - result.discarded;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace mrdebug::generator

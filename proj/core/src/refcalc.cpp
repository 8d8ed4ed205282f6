#include "mrdebug/refcalc.hpp"

#include <algorithm>
#include <stdexcept>

#include "mrdebug/errors.hpp"

namespace mrdebug::refcalc {

namespace {

Decimal usd(std::int64_t units) { return Decimal::from_units(units); }

void emit(std::vector<TraceFeature>* trace, std::string name, Decimal value) {
  if (trace) trace->push_back({std::move(name), value});
}

void emit_flag(std::vector<TraceFeature>* trace, std::string name, bool value) {
  emit(trace, std::move(name), usd(value ? 1 : 0));
}

constexpr std::array<std::pair<Mutant, std::string_view>, 4> kNames{{
    {Mutant::drop_mfs_guard, "M1_drop_mfs_guard"},
    {Mutant::stale_threshold, "M2_stale_threshold"},
    {Mutant::edu_nonrefundable_clamp, "M3_edu_nonrefundable_clamp"},
    {Mutant::ignore_spouse_blind, "M4_ignore_spouse_blind"},
}};

}  // namespace

std::map<std::string, Decimal, std::less<>> eitc_thresholds(int year) {
  std::int64_t joint = 0;
  std::int64_t other = 0;
  switch (year) {
    case 2018: joint = 54884; other = 49194; break;
    case 2019: joint = 55952; other = 50162; break;
    case 2020: joint = 56844; other = 50954; break;
    case 2021: joint = 57414; other = 51464; break;
    default: throw std::out_of_range("no EITC thresholds for tax year " + std::to_string(year));
  }
  return {{"Single", usd(other)}, {"MFJ", usd(joint)}, {"MFS", usd(other)}, {"HoH", usd(other)}};
}

RuleTable RuleTable::for_year(int year) {
  RuleTable t;
  t.tax_year = year;
  t.eitc_threshold = eitc_thresholds(year);
  t.std_deduction = {{"Single", usd(12400)}, {"MFJ", usd(24800)}, {"MFS", usd(12400)}, {"HoH", usd(18650)}};
  t.addl_box_married = usd(1300);
  t.addl_box_other = usd(1650);
  t.eitc_max = {usd(538), usd(3584), usd(5920), usd(6660)};
  t.ctc_per_child = usd(2000);
  t.edu_cap = usd(2500);
  t.edu_phase_lo = usd(160000);
  t.edu_phase_hi = usd(180000);
  return t;
}

Decimal RuleTable::threshold(std::string_view sts) const {
  const auto it = eitc_threshold.find(sts);
  if (it == eitc_threshold.end()) throw SpecError("no EITC threshold for status " + std::string(sts));
  return it->second;
}

Decimal RuleTable::addl_box(std::string_view sts) const {
  return sts == "MFJ" || sts == "MFS" ? addl_box_married : addl_box_other;
}

void RuleTable::validate() const {
  auto nonneg = [](Decimal d, const char* what) {
    if (d < Decimal{}) throw SpecError(std::string(what) + " must be non-negative");
  };
  for (const auto& [k, v] : std_deduction) nonneg(v, "standard deduction");
  for (const auto& v : eitc_max) nonneg(v, "EITC maximum");
  for (const auto& [k, v] : eitc_threshold) {
    if (v <= Decimal{}) throw SpecError("EITC threshold for " + k + " must be positive");
  }
  nonneg(addl_box_married, "additional box amount");
  nonneg(addl_box_other, "additional box amount");
  nonneg(ctc_per_child, "child credit");
  nonneg(edu_cap, "education credit cap");
  if (!(edu_phase_lo < edu_phase_hi)) throw SpecError("education phase-out band is empty");
  if (flat_rate_den <= 0 || flat_rate_num < 0 || medical_floor_den <= 0 || medical_floor_num < 0) {
    throw SpecError("rates must be non-negative fractions");
  }
}

std::string_view mutant_id(Mutant m) { return mutant_name(m).substr(0, 2); }

std::string_view mutant_name(Mutant m) {
  for (const auto& [id, name] : kNames) {
    if (id == m) return name;
  }
  return "?";
}

MutantSet::MutantSet(std::initializer_list<Mutant> mutants) {
  for (Mutant m : mutants) bits_ |= 1U << static_cast<unsigned>(m);
}

MutantSet MutantSet::parse(std::string_view text) {
  MutantSet set;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      bool found = false;
      for (const auto& [id, name] : kNames) {
        if (item == name || item == name.substr(0, 2)) {
          set = set.with(id);
          found = true;
        }
      }
      if (!found) throw SpecError("unknown mutant " + std::string(item));
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return set;
}

MutantSet MutantSet::with(Mutant m) const {
  MutantSet out = *this;
  out.bits_ |= 1U << static_cast<unsigned>(m);
  return out;
}

std::vector<Mutant> MutantSet::list() const {
  std::vector<Mutant> out;
  for (const auto& [id, name] : kNames) {
    if (has(id)) out.push_back(id);
  }
  return out;
}

std::string MutantSet::to_string() const {
  std::string out;
  for (Mutant m : list()) {
    if (!out.empty()) out += ',';
    out += mutant_id(m);
  }
  return out;
}

Decimal effective_eitc_threshold(const RuleTable& table, std::string_view sts, const MutantSet& mutants) {
  if (!mutants.has(Mutant::stale_threshold)) return table.threshold(sts);
  const int year = table.tax_year;
  int other = year + 1;
  try {
    (void)eitc_thresholds(other);
  } catch (const std::out_of_range&) {
    other = year - 1;
  }
  const auto stale = eitc_thresholds(other);
  return stale.find(sts)->second;
}

Decimal standard_deduction(const Record& record, const RuleTable& table, const MutantSet& mutants) {
  const std::string& sts = record.tag("sts");
  int boxes = 0;
  if (record.decimal("age") >= usd(65)) ++boxes;
  if (record.boolean("blind")) ++boxes;
  if (sts == "MFJ") {
    const bool skip_spouse = mutants.has(Mutant::ignore_spouse_blind) && record.boolean("s_blind");
    if (!skip_spouse) {
      if (record.decimal("s_age") >= usd(65)) ++boxes;
      if (record.boolean("s_blind")) ++boxes;
    }
  }
  const auto base = table.std_deduction.find(sts);
  if (base == table.std_deduction.end()) throw SpecError("no standard deduction for status " + sts);
  return base->second + Decimal::from_cents(table.addl_box(sts).cents() * boxes);
}

Decimal eitc_amount(const Record& record, const RuleTable& table, const MutantSet& mutants,
                    std::vector<TraceFeature>* trace) {
  const std::string& sts = record.tag("sts");
  const Decimal agi = record.decimal("AGI");
  const Decimal threshold = effective_eitc_threshold(table, sts, mutants);

  const bool over = agi > threshold;
  emit_flag(trace, "branch@eitc_agi:taken", over);
  if (over) return Decimal{};

  const bool mfs_guard = !mutants.has(Mutant::drop_mfs_guard) && sts == "MFS";
  emit_flag(trace, "branch@eitc_mfs:taken", mfs_guard);
  if (mfs_guard) return Decimal{};

  const std::int64_t qc = record.decimal("QC").cents() / 100;
  const Decimal cap = table.eitc_max.at(static_cast<std::size_t>(std::clamp<std::int64_t>(qc, 0, 3)));
  emit(trace, "val@eitc_cap", cap);
  const Decimal phased = cap.scaled((threshold - agi).cents(), threshold.cents());
  return min(record.decimal("L27"), phased);
}

Decimal education_credit(const Record& record, const RuleTable& table, const MutantSet&,
                         std::vector<TraceFeature>* trace) {
  const Decimal agi = record.decimal("AGI");
  const Decimal base = min(record.decimal("L29"), table.edu_cap);
  Decimal credit;
  const bool phasing = agi > table.edu_phase_lo && agi < table.edu_phase_hi;
  emit_flag(trace, "branch@edu_phase:taken", phasing);
  if (agi <= table.edu_phase_lo) {
    credit = base;
  } else if (phasing) {
    credit = base.scaled((table.edu_phase_hi - agi).cents(), (table.edu_phase_hi - table.edu_phase_lo).cents());
  }
  emit(trace, "val@edu_credit", credit);
  return credit;
}

Output compute_return(const Record& record, const RuleTable& table, const MutantSet& mutants) {
  Output out;
  auto* trace = &out.trace;
  const Decimal agi = record.decimal("AGI");

  const bool itemize = record.boolean("itemize");
  emit_flag(trace, "branch@itemize:taken", itemize);
  const Decimal deduction =
      itemize ? max(Decimal{}, record.decimal("MDE") - agi.scaled(table.medical_floor_num, table.medical_floor_den))
              : standard_deduction(record, table, mutants);
  const Decimal taxable = max(Decimal{}, agi - deduction);
  emit(trace, "val@taxable", taxable);
  const Decimal tax = taxable.scaled(table.flat_rate_num, table.flat_rate_den);

  Decimal child_credit;
  std::int64_t loops = 0;
  for (std::int64_t child = 0; child < record.decimal("QC").cents() / 100; ++child) {
    child_credit += table.ctc_per_child;
    ++loops;
  }
  emit(trace, "loop@qc:count", usd(loops));
  const Decimal tax_after = max(Decimal{}, tax - child_credit);
  emit(trace, "val@tax_after", tax_after);

  const Decimal eitc = eitc_amount(record, table, mutants, trace);
  const Decimal edu = education_credit(record, table, mutants, trace);
  if (mutants.has(Mutant::edu_nonrefundable_clamp)) {
    out.value = eitc - max(Decimal{}, tax_after - edu);
  } else {
    out.value = eitc + edu - tax_after;
  }
  return out;
}

RefcalcSut::RefcalcSut(RuleTable table, MutantSet mutants) : table_(std::move(table)), mutants_(mutants) {
  table_.validate();
}

std::string RefcalcSut::name() const {
  std::string out = "refcalc(" + std::to_string(table_.tax_year);
  if (!mutants_.empty()) out += "," + mutants_.to_string();
  return out + ")";
}

ScreenSut::ScreenSut(Decimal threshold, bool require_non_mfs)
    : threshold_(threshold), require_non_mfs_(require_non_mfs) {}

Output ScreenSut::evaluate(const Record& record) const {
  bool eligible = record.decimal("AGI") <= threshold_;
  if (require_non_mfs_ && record.tag("sts") == "MFS") eligible = false;
  Output out;
  out.value = Decimal::from_units(eligible ? 1 : 0);
  return out;
}

std::string ScreenSut::name() const {
  return "screen(" + threshold_.to_compact_string() + (require_non_mfs_ ? ",non-MFS" : "") + ")";
}

}  // namespace mrdebug::refcalc

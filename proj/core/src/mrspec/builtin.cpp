#include "mrdebug/mrspec/builtin.hpp"

#include <cctype>
#include <stdexcept>

#include "mrdebug/mrspec/parser.hpp"
#include "mrdebug/mrspec/printer.hpp"

namespace mrdebug::mrspec {

namespace {

std::string replace_all(std::string text, std::string_view key, const std::string& value) {
  for (std::size_t at = text.find(key); at != std::string::npos; at = text.find(key, at)) {
    text.replace(at, key.size(), value);
    at += value.size();
  }
  return text;
}

// P4's three disjuncts each carry their own exception set, so they are kept as
// separate relations rather than one clause-level disjunction.
constexpr std::string_view kLibraryTemplate = R"(relation "P1" {
  forall x;
  forall y;
  where x.sts == MFJ;
  metamorphose y from x except {s_blind};
  where x.s_blind && !y.s_blind;
  assert F(x) >= F(y);
}

relation "P2" {
  forall x;
  forall y;
  where x.sts == MFS;
  metamorphose y from x except {L27};
  where x.L27 > 0 && y.L27 == 0;
  assert F(x) == F(y);
}

relation "P3" {
  forall x;
  forall y;
  where x.sts == MFJ && x.AGI > @T@;
  metamorphose y from x except {L27};
  where x.L27 > 0 && y.L27 == 0;
  assert F(x) == F(y);
}

relation "P4a" {
  forall x;
  forall y;
  where x.sts == MFJ;
  metamorphose y from x except {AGI};
  where x.AGI <= @T@ && y.AGI > @T@;
  assert F(x) >= F(y);
}

relation "P4b" {
  forall x;
  forall y;
  where x.sts == MFJ;
  metamorphose y from x except {L27};
  where x.L27 > 0 && y.L27 == 0;
  assert F(x) >= F(y);
}

relation "P4c" {
  forall x;
  forall y;
  where x.sts == MFJ;
  metamorphose y from x except {QC};
  where x.QC >= y.QC;
  assert F(x) >= F(y);
}

relation "P5" {
  forall x, x';
  forall y, y';
  where x.sts == MFJ && x'.sts == MFJ;
  where x.AGI <= 160000 && x'.AGI > 160000 && x'.AGI < 180000;
  where x.L29 == x'.L29;
  metamorphose y from x except {L29};
  metamorphose y' from x' except {L29};
  where y.L29 == y'.L29 && x.L29 >= y.L29;
  assert (F(x) - F(y)) >= (F(x') - F(y'));
}
)";

constexpr std::string_view kAnnuityRelation = R"(relation "A1" {
  forall x;
  forall y;
  metamorphose y from x except {age, start};
  where x.age >= 66 && x.age <= 70 && y.age >= 66 && y.age <= 70;
  where x.start < 19961119 && y.start > 19961118;
  assert F(x) >= F(y);
}
)";

}  // namespace

std::vector<int> builtin_years() { return {2018, 2019, 2020, 2021}; }

Decimal builtin_eitc_threshold(int year) {
  switch (year) {
    case 2018: return Decimal::from_units(54884);
    case 2019: return Decimal::from_units(55952);
    case 2020: return Decimal::from_units(56844);
    case 2021: return Decimal::from_units(57414);
    default: throw std::out_of_range("unsupported tax year " + std::to_string(year));
  }
}

std::string builtin_library_text(int tax_year) {
  const Decimal threshold = builtin_eitc_threshold(tax_year);
  std::string text = "# Builtin metamorphic relations for tax year " + std::to_string(tax_year) +
                     ".\n# MFJ EITC AGI threshold: " + threshold.to_compact_string() + ".\n\n";
  text += replace_all(std::string(kLibraryTemplate), "@T@", threshold.to_compact_string());
  return text;
}

std::string annuity_sample_text() {
  return "# Annuity start-date relation for filers aged 66 to 70 (no beneficiary).\n"
         "# engine-unsupported: the reference engine does not model annuity income.\n\n" +
         std::string(kAnnuityRelation);
}

std::vector<BuiltinRelation> builtin_relations(int tax_year) {
  std::vector<BuiltinRelation> out;
  for (auto& ast : parse_spec(builtin_library_text(tax_year))) out.push_back({std::move(ast), true});
  out.push_back({parse_relation(kAnnuityRelation), false});
  return out;
}

std::string relation_family(std::string_view name) {
  if (name.size() >= 2 && std::islower(static_cast<unsigned char>(name.back())) &&
      std::isdigit(static_cast<unsigned char>(name[name.size() - 2]))) {
    return std::string(name.substr(0, name.size() - 1));
  }
  return std::string(name);
}

}  // namespace mrdebug::mrspec

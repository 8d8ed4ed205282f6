#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mrdebug/decimal.hpp"
#include "mrdebug/model.hpp"
#include "mrdebug/sut.hpp"

namespace mrdebug::refcalc {

/// Simplified single-rate return parameters for one tax year.
struct RuleTable {
  int tax_year = 2020;
  std::map<std::string, Decimal, std::less<>> std_deduction;
  Decimal addl_box_married;  // MFJ, MFS
  Decimal addl_box_other;    // Single, HoH
  std::int64_t flat_rate_num = 1;
  std::int64_t flat_rate_den = 10;
  std::int64_t medical_floor_num = 75;
  std::int64_t medical_floor_den = 1000;
  std::array<Decimal, 4> eitc_max{};
  Decimal ctc_per_child;
  Decimal edu_cap;
  Decimal edu_phase_lo;
  Decimal edu_phase_hi;
  /// EITC AGI thresholds by filing status for `tax_year`.
  std::map<std::string, Decimal, std::less<>> eitc_threshold;

  /// Throws std::out_of_range outside 2018..2021.
  static RuleTable for_year(int year);

  Decimal threshold(std::string_view sts) const;
  Decimal addl_box(std::string_view sts) const;
  /// Throws SpecError when an amount is negative or the phase band is empty.
  void validate() const;
};

/// EITC thresholds (MFJ, other statuses) for a year; throws std::out_of_range.
std::map<std::string, Decimal, std::less<>> eitc_thresholds(int year);

enum class Mutant {
  drop_mfs_guard,            // M1
  stale_threshold,           // M2
  edu_nonrefundable_clamp,   // M3
  ignore_spouse_blind,       // M4
};

std::string_view mutant_id(Mutant m);    // "M1"
std::string_view mutant_name(Mutant m);  // "M1_drop_mfs_guard"

class MutantSet {
 public:
  MutantSet() = default;
  MutantSet(std::initializer_list<Mutant> mutants);

  /// "M1,M3", "M2_stale_threshold", "" (clean). Throws SpecError on unknown ids.
  static MutantSet parse(std::string_view text);

  bool has(Mutant m) const { return (bits_ >> static_cast<unsigned>(m)) & 1U; }
  MutantSet with(Mutant m) const;
  bool empty() const { return bits_ == 0; }
  /// "M1,M3"; "" when clean.
  std::string to_string() const;
  std::vector<Mutant> list() const;

  bool operator==(const MutantSet&) const = default;

 private:
  unsigned bits_ = 0;
};

/// Table used for the EITC threshold lookup: the year's own table, or under
/// stale_threshold the adjacent year's (the following one, or the preceding
/// one for the last supported year).
Decimal effective_eitc_threshold(const RuleTable& table, std::string_view sts, const MutantSet& mutants);

Decimal standard_deduction(const Record& record, const RuleTable& table, const MutantSet& mutants = {});

Decimal eitc_amount(const Record& record, const RuleTable& table, const MutantSet& mutants = {},
                    std::vector<TraceFeature>* trace = nullptr);

Decimal education_credit(const Record& record, const RuleTable& table, const MutantSet& mutants = {},
                         std::vector<TraceFeature>* trace = nullptr);

Output compute_return(const Record& record, const RuleTable& table, const MutantSet& mutants = {});

class RefcalcSut final : public Sut {
 public:
  explicit RefcalcSut(RuleTable table, MutantSet mutants = {});
  Output evaluate(const Record& record) const override { return compute_return(record, table_, mutants_); }
  std::string name() const override;
  const RuleTable& table() const { return table_; }
  const MutantSet& mutants() const { return mutants_; }

 private:
  RuleTable table_;
  MutantSet mutants_;
};

/// Eligibility screen with output 1 iff AGI ≤ threshold (and, optionally, the
/// filer is not MFS), otherwise 0.
class ScreenSut final : public Sut {
 public:
  ScreenSut(Decimal threshold, bool require_non_mfs = false);
  Output evaluate(const Record& record) const override;
  bool boolean_output() const override { return true; }
  std::string name() const override;

 private:
  Decimal threshold_;
  bool require_non_mfs_;
};

}  // namespace mrdebug::refcalc

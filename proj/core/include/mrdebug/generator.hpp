#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mrdebug/model.hpp"
#include "mrdebug/mrspec/compile.hpp"
#include "mrdebug/stats.hpp"
#include "mrdebug/sut.hpp"

namespace mrdebug::generator {

/// Seeded 64-bit stream with portable bounded draws (the standard
/// distributions are implementation-defined, which would break log
/// reproducibility across toolchains).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  /// Uniform in [0, 1) with 53 random bits.
  double unit();
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Stream seed for one relation of a campaign.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view relation);

struct SearchConfig {
  std::uint64_t seed = 0;
  std::int64_t budget = 50000;  // SUT evaluations, plus one per discarded perturbation
  std::size_t population = 20;
  double restart_probability = 0.1;
  std::int64_t step_multiplier = 10;  // numeric perturbation = ± step × this
  /// Probability that a numeric draw lands within `boundary_band` grid steps
  /// of a constant the relation compares that label against.
  double boundary_bias = 0.2;
  std::int64_t boundary_band = 1000;
  int rejection_attempts = 64;
  int repair_attempts = 256;
  int perturbation_attempts = 64;

  /// Throws ParameterError.
  void validate() const;
};

/// Index of every binding is the variable's quantifier position.
using Bindings = std::vector<Record>;

/// Uniform draw of every field on its grid.
Record sample_uniform(const SchemaPtr& schema, Rng& rng);

/// Draws the source variables (follow-up slots left empty) so that the
/// source predicate holds. Throws Unsatisfiable.
Bindings sample_source(const mrspec::ExecutableRelation& rel, Rng& rng, const SearchConfig& cfg = {});

/// Fills the follow-up variables: each starts as a copy of its source and
/// only its exception labels are redrawn so the follow-up predicate holds.
/// Throws Unsatisfiable.
Bindings derive_followups(const mrspec::ExecutableRelation& rel, Bindings sources, Rng& rng,
                          const SearchConfig& cfg = {});

/// Source fields the search may perturb: those not pinned by an equality or
/// a bare boolean atom in the source predicate.
std::vector<std::pair<int, int>> mutable_slots(const mrspec::ExecutableRelation& rel);

struct TestCase {
  std::string relation;
  std::int64_t id = 0;          // position in the relation's log
  std::int64_t source_id = 0;   // which source test this case belongs to
  std::int64_t step = 0;        // position within that source's stream
  std::optional<std::int64_t> parent;
  std::uint64_t seed = 0;       // relation stream seed
  std::vector<std::string> variables;
  std::size_t source_count = 0;  // leading variables that are sources
  Bindings bindings;
  std::vector<std::optional<Output>> outputs;
  bool pass = true;
  std::optional<Decimal> deviation;  // empty when a SUT evaluation failed
  std::string error;
  double elapsed = 0.0;  // seconds since the relation started; not logged

  /// Search ordering key: crashes rank above every deviation.
  double rank() const {
    return deviation ? deviation->to_double() : std::numeric_limits<double>::infinity();
  }
};

/// Evaluates every variable the assertion mentions and sets the verdict.
/// Returns the number of SUT evaluations performed.
std::int64_t evaluate_case(const mrspec::ExecutableRelation& rel, const Sut& sut, Decimal epsilon,
                           TestCase& tc);

struct StepResult {
  std::optional<TestCase> test_case;  // empty when the budget ran out
  std::int64_t cost = 0;              // evaluations plus discarded perturbations
  std::int64_t discarded = 0;
  bool restarted = false;
};

/// One search move: either a fresh source (always when `promising` is empty,
/// otherwise with the restart probability) or a one-field perturbation of the
/// highest-deviation member of `promising`, which is then trimmed to the best
/// `cfg.population` members. Never spends more than `budget_left`.
StepResult search_step(const mrspec::ExecutableRelation& rel, std::vector<TestCase>& promising,
                       const SearchConfig& cfg, Rng& rng, const Sut& sut, Decimal epsilon,
                       std::int64_t budget_left, std::int64_t case_id = 0);

struct RunConfig {
  SearchConfig search;
  Decimal epsilon = Decimal::from_cents(1);
  std::int64_t k = 44;
  std::size_t sources = 20;
};

struct RelationResult {
  std::string name;
  std::uint64_t seed = 0;
  mrspec::Polarity polarity = mrspec::Polarity::falsify;
  std::vector<TestCase> cases;
  std::vector<stats::SourceVerdict> verdicts;
  std::int64_t evaluations = 0;
  std::int64_t discarded = 0;
  std::optional<std::string> skipped;  // Unsatisfiable reason
  std::optional<std::int64_t> first_failure;  // case id
  std::optional<double> time_to_first_failure;
  double wall_time = 0.0;

  std::int64_t fail_count() const;
  std::int64_t pass_count() const;
};

/// Runs sources one after another; each feeds a sequential test from its
/// first case onward until falsified, certified after `k` passes, or the
/// relation's budget runs out.
RelationResult run_relation(const mrspec::ExecutableRelation& rel, const Sut& sut, const RunConfig& cfg);

}  // namespace mrdebug::generator

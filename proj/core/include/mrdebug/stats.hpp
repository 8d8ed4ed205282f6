#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

namespace mrdebug::stats {

struct JeffreysParams {
  double theta = 0.9;          // lower bound on the pass probability, in (0,1)
  double bayes_factor = 100.0;  // > 1

  /// Throws ParameterError when out of domain.
  void validate() const;
};

/// Least K with θ^K ≤ 1/B, i.e. K = ⌈log₂B / −log₂θ⌉, exact at the ceiling.
std::int64_t jeffreys_k(const JeffreysParams& params);

/// True iff `k` consecutive passes suffice: k·(−log₂θ) ≥ log₂B, decided with
/// at least 160 bits of working precision.
bool jeffreys_bound_holds(const JeffreysParams& params, std::int64_t k);

enum class Outcome { certified_pass, falsified, inconclusive };

std::string_view to_string(Outcome outcome);

struct SourceVerdict {
  std::size_t source_id = 0;
  Outcome outcome = Outcome::inconclusive;
  std::int64_t consecutive_passes = 0;
  std::optional<std::int64_t> failure_index;  // set iff falsified
  std::int64_t observed = 0;                   // outcomes consumed

  bool operator==(const SourceVerdict&) const = default;
};

/// Incremental form of sequential_verdict: feed outcomes one at a time until
/// decided().
class SequentialTest {
 public:
  /// Throws ParameterError for k < 1.
  explicit SequentialTest(std::int64_t k, std::size_t source_id = 0);

  /// Returns true once the test has reached a decision. Pushing after the
  /// decision throws std::logic_error.
  bool push(bool pass);
  bool decided() const { return verdict_.outcome != Outcome::inconclusive; }
  std::int64_t k() const { return k_; }
  const SourceVerdict& verdict() const { return verdict_; }

 private:
  std::int64_t k_;
  SourceVerdict verdict_;
};

/// Consumes the stream only up to the decision point.
SourceVerdict sequential_verdict(std::span<const bool> stream, std::int64_t k);
/// Pull form: `next` yields outcomes until it returns nullopt.
SourceVerdict sequential_verdict(const std::function<std::optional<bool>()>& next, std::int64_t k);

}  // namespace mrdebug::stats

#include "mrdebug/stats.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mrdebug/errors.hpp"

namespace mrdebug::stats {

namespace {

using Precise = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<160, boost::multiprecision::digit_base_2>>;

// θ = 2^-a and B = 2^b exactly: the ratio is rational and the ceiling is an
// integer division.
std::optional<std::int64_t> exact_power_of_two_k(double theta, double bayes_factor) {
  int et = 0;
  int eb = 0;
  if (std::frexp(theta, &et) != 0.5 || std::frexp(bayes_factor, &eb) != 0.5) return std::nullopt;
  const std::int64_t a = 1 - et;
  const std::int64_t b = eb - 1;
  return (b + a - 1) / a;
}

Precise precise_ratio(double theta, double bayes_factor) {
  return log(Precise(bayes_factor)) / -log(Precise(theta));
}

}  // namespace

void JeffreysParams::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("theta must lie in (0,1)");
  if (!(bayes_factor > 1.0) || !std::isfinite(bayes_factor)) {
    throw ParameterError("bayes_factor must be a finite value greater than 1");
  }
}

bool jeffreys_bound_holds(const JeffreysParams& params, std::int64_t k) {
  params.validate();
  if (k < 1) return false;
  if (auto exact = exact_power_of_two_k(params.theta, params.bayes_factor)) return k >= *exact;
  return Precise(k) >= precise_ratio(params.theta, params.bayes_factor);
}

std::int64_t jeffreys_k(const JeffreysParams& params) {
  params.validate();
  if (auto exact = exact_power_of_two_k(params.theta, params.bayes_factor)) return *exact;

  const long double ratio = std::log2(static_cast<long double>(params.bayes_factor)) /
                            -std::log2(static_cast<long double>(params.theta));
  if (!(ratio < static_cast<long double>(std::numeric_limits<std::int64_t>::max()))) {
    throw ParameterError("theta too close to 1: bound does not fit in 64 bits");
  }
  auto k = static_cast<std::int64_t>(std::ceil(ratio));
  const long double nearest = std::round(ratio);
  if (std::fabs(ratio - nearest) <= 1e-12L * std::max(1.0L, ratio)) {
    // Too close to an integer for long double to decide the ceiling.
    k = static_cast<std::int64_t>(ceil(precise_ratio(params.theta, params.bayes_factor)));
  }
  k = std::max<std::int64_t>(k, 1);
  assert(jeffreys_bound_holds(params, k));
  assert(k == 1 || !jeffreys_bound_holds(params, k - 1));
  return k;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::certified_pass: return "certified_pass";
    case Outcome::falsified: return "falsified";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

SequentialTest::SequentialTest(std::int64_t k, std::size_t source_id) : k_(k) {
  if (k < 1) throw ParameterError("K must be at least 1");
  verdict_.source_id = source_id;
}

bool SequentialTest::push(bool pass) {
  if (decided()) throw std::logic_error("sequential test already decided");
  ++verdict_.observed;
  if (!pass) {
    verdict_.outcome = Outcome::falsified;
    verdict_.failure_index = verdict_.observed - 1;
    return true;
  }
  if (++verdict_.consecutive_passes == k_) verdict_.outcome = Outcome::certified_pass;
  return decided();
}

SourceVerdict sequential_verdict(std::span<const bool> stream, std::int64_t k) {
  SequentialTest test(k);
  for (bool pass : stream) {
    if (test.push(pass)) break;
  }
  return test.verdict();
}

SourceVerdict sequential_verdict(const std::function<std::optional<bool>()>& next, std::int64_t k) {
  SequentialTest test(k);
  while (!test.decided()) {
    const auto outcome = next();
    if (!outcome) break;
    test.push(*outcome);
  }
  return test.verdict();
}

}  // namespace mrdebug::stats

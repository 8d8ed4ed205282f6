#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrdebug/decimal.hpp"
#include "mrdebug/model.hpp"

namespace mrdebug {

/// Named internal observation, "<kind>@<site>", e.g. "loop@qc:count".
/// Booleans are carried as 0/1.
struct TraceFeature {
  std::string name;
  Decimal value;
  bool operator==(const TraceFeature&) const = default;
};

/// F(x): the federal return (refund positive, owed negative), or 0/1 for
/// eligibility-style SUTs, plus whatever trace the SUT exposes.
struct Output {
  Decimal value;
  std::vector<TraceFeature> trace;
  double wall_time = 0.0;  // seconds; not part of equality
  bool operator==(const Output& o) const { return value == o.value && trace == o.trace; }
};

class SutFailure : public std::runtime_error {
 public:
  enum class Kind { exit_code, timeout, no_match, parse_error, spawn_error, io_error };
  SutFailure(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(SutFailure::Kind kind);

/// Uniform front for every system under test. Implementations must be safe to
/// call concurrently.
class Sut {
 public:
  virtual ~Sut() = default;
  /// Throws SutFailure when the system cannot produce an output.
  virtual Output evaluate(const Record& record) const = 0;
  /// True for SUTs whose output is a 0/1 decision; tolerance is then forced to 0.
  virtual bool boolean_output() const { return false; }
  virtual std::string name() const = 0;
};

using SutPtr = std::shared_ptr<const Sut>;

/// Exchange file: one `label = value` line per field in schema order, LF
/// endings; decimals with two fraction digits, booleans true/false, enums as
/// bare tags. Unset labels are omitted.
std::string write_exchange(const Record& record);
/// Inverse of write_exchange; throws ValidationError on unknown labels or
/// malformed values.
Record read_exchange(const SchemaPtr& schema, std::string_view text);

/// `name = value` lines, used for trace files.
std::string write_trace(const std::vector<TraceFeature>& trace);
std::vector<TraceFeature> read_trace(std::string_view text);

struct ExternalSutConfig {
  std::string command;
  /// {infile}, {outfile} and {tracefile} are substituted per call.
  std::vector<std::string> args;
  /// Regular expression with exactly one capture group.
  std::string extract_pattern = "RETURN = (-?[0-9.]+)";
  double timeout = 10.0;  // seconds
  bool boolean_output = false;

  /// Throws SpecError if the pattern does not compile or does not have exactly
  /// one capture group.
  void validate() const;
};

/// Runs an external program per record through the exchange format.
Output spawn_external(const ExternalSutConfig& config, const Record& record);

class ExternalSut final : public Sut {
 public:
  explicit ExternalSut(ExternalSutConfig config);
  Output evaluate(const Record& record) const override { return spawn_external(config_, record); }
  bool boolean_output() const override { return config_.boolean_output; }
  std::string name() const override { return "external:" + config_.command; }
  const ExternalSutConfig& config() const { return config_; }

 private:
  ExternalSutConfig config_;
};

/// First capture group of the first line matching `pattern`, parsed as a
/// decimal; throws SutFailure(no_match | parse_error).
Decimal extract_value(std::string_view output_text, const std::string& pattern);

struct Discrepancy {
  enum class Kind { value, crash };
  Kind kind = Kind::value;
  std::optional<Output> ground;
  std::optional<Output> target;
  Decimal difference;   // |G - F| when both produced a value
  std::string message;  // crash details
};

/// x ≡_∅ x' => G(x) == F(x'): empty optional when the two agree within
/// epsilon (exactly, for boolean SUTs).
std::optional<Discrepancy> differential_check(const Sut& ground, const Sut& target,
                                              const Record& record, Decimal epsilon);

}  // namespace mrdebug

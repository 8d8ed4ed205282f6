#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mrdebug/decimal.hpp"

namespace mrdebug {

struct NumericKind {
  Decimal min;
  Decimal max;
  Decimal step;

  /// Number of points on the step grid, both ends included.
  std::int64_t grid_size() const { return (max - min).cents() / step.cents() + 1; }
  Decimal grid_value(std::int64_t index) const {
    return min + Decimal::from_cents(index * step.cents());
  }

  bool operator==(const NumericKind&) const = default;
};

struct BooleanKind {
  bool operator==(const BooleanKind&) const = default;
};

struct EnumKind {
  std::vector<std::string> values;

  bool contains(std::string_view tag) const;
  bool operator==(const EnumKind&) const = default;
};

using FieldKind = std::variant<NumericKind, BooleanKind, EnumKind>;

struct FieldSpec {
  std::string name;
  FieldKind kind;
  std::string unit;

  bool is_numeric() const { return std::holds_alternative<NumericKind>(kind); }
  bool is_boolean() const { return std::holds_alternative<BooleanKind>(kind); }
  bool is_enum() const { return std::holds_alternative<EnumKind>(kind); }
  const NumericKind& numeric() const { return std::get<NumericKind>(kind); }
  const EnumKind& enumeration() const { return std::get<EnumKind>(kind); }

  bool operator==(const FieldSpec&) const = default;
};

/// Ordered label set. Field order is canonical: it drives the exchange
/// format, logs and feature columns.
class Schema {
 public:
  /// Throws SpecError if any field breaks its kind invariants or names repeat.
  explicit Schema(std::vector<FieldSpec> fields);

  const std::vector<FieldSpec>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws SpecError for unknown labels.
  std::size_t require_index(std::string_view name) const;
  const FieldSpec& field(std::size_t index) const { return fields_.at(index); }
  const FieldSpec& field(std::string_view name) const { return fields_[require_index(name)]; }

  bool operator==(const Schema& other) const { return fields_ == other.fields_; }

 private:
  std::vector<FieldSpec> fields_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

struct EnumTag {
  std::string tag;
  bool operator==(const EnumTag&) const = default;
};

using Value = std::variant<Decimal, bool, EnumTag>;

std::string to_string(const Value& value);

/// Label -> value assignment over a schema. Immutable; `with` returns a
/// modified copy. A record may be incomplete (validate_record reports it).
class Record {
 public:
  Record() = default;
  explicit Record(SchemaPtr schema);
  /// Throws SpecError for labels the schema does not know.
  Record(SchemaPtr schema, const std::map<std::string, Value>& assignments);

  const SchemaPtr& schema() const { return schema_; }
  const std::optional<Value>& at(std::size_t index) const { return values_.at(index); }
  const std::optional<Value>& at(std::string_view label) const;

  /// Typed accessors; throw ValidationError when absent or of another kind.
  Decimal decimal(std::string_view label) const;
  bool boolean(std::string_view label) const;
  const std::string& tag(std::string_view label) const;

  Record with(std::size_t index, Value value) const;
  Record with(std::string_view label, Value value) const;

  bool operator==(const Record& other) const { return values_ == other.values_; }

 private:
  SchemaPtr schema_;
  std::vector<std::optional<Value>> values_;
};

struct Violation {
  std::string label;
  std::string rule;  // "missing", "kind", "range", "enum"
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationResult validate_record(const Schema& schema, const Record& record);
/// Conformance of one value to one field (kind, range, enum membership).
std::optional<Violation> check_value(const FieldSpec& field, const Value& value);

/// x ≡_L y: the records agree on every label outside `exceptions`.
bool is_metamorphose(const Record& x, const Record& y, std::span<const std::string> exceptions);

/// Builds y with y ≡_L x by overwriting only the given assignments.
Record metamorphose(const Record& x, std::span<const std::string> exceptions,
                    const std::map<std::string, Value>& assignments);

}  // namespace mrdebug

#include "mrdebug/model.hpp"

#include <algorithm>
#include <set>

#include "mrdebug/errors.hpp"

namespace mrdebug {

bool EnumKind::contains(std::string_view tag) const {
  return std::find(values.begin(), values.end(), tag) != values.end();
}

Schema::Schema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const FieldSpec& f = fields_[i];
    if (f.name.empty()) throw SpecError("field " + std::to_string(i) + " has an empty name");
    if (!index_.emplace(f.name, i).second) throw SpecError("duplicate field name " + f.name);
    if (const auto* num = std::get_if<NumericKind>(&f.kind)) {
      if (num->max < num->min) throw SpecError("field " + f.name + ": min > max");
      if (num->step <= Decimal{}) throw SpecError("field " + f.name + ": step must be positive");
      if ((num->max - num->min).cents() % num->step.cents() != 0) {
        throw SpecError("field " + f.name + ": range is not a multiple of step");
      }
    } else if (const auto* en = std::get_if<EnumKind>(&f.kind)) {
      if (en->values.empty()) throw SpecError("field " + f.name + ": enum has no values");
      std::set<std::string> seen(en->values.begin(), en->values.end());
      if (seen.size() != en->values.size()) {
        throw SpecError("field " + f.name + ": enum values repeat");
      }
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::require_index(std::string_view name) const {
  if (auto i = index_of(name)) return *i;
  throw SpecError("unknown label " + std::string(name));
}

std::string to_string(const Value& value) {
  struct Visitor {
    std::string operator()(Decimal d) const { return d.to_string(); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const EnumTag& t) const { return t.tag; }
  };
  return std::visit(Visitor{}, value);
}

Record::Record(SchemaPtr schema) : schema_(std::move(schema)), values_(schema_->size()) {}

Record::Record(SchemaPtr schema, const std::map<std::string, Value>& assignments)
    : Record(std::move(schema)) {
  for (const auto& [label, value] : assignments) {
    values_[schema_->require_index(label)] = value;
  }
}

const std::optional<Value>& Record::at(std::string_view label) const {
  return values_[schema_->require_index(label)];
}

Decimal Record::decimal(std::string_view label) const {
  const auto& v = at(label);
  if (!v || !std::holds_alternative<Decimal>(*v)) {
    throw ValidationError("label " + std::string(label) + " is not a bound numeric");
  }
  return std::get<Decimal>(*v);
}

bool Record::boolean(std::string_view label) const {
  const auto& v = at(label);
  if (!v || !std::holds_alternative<bool>(*v)) {
    throw ValidationError("label " + std::string(label) + " is not a bound boolean");
  }
  return std::get<bool>(*v);
}

const std::string& Record::tag(std::string_view label) const {
  const auto& v = at(label);
  if (!v || !std::holds_alternative<EnumTag>(*v)) {
    throw ValidationError("label " + std::string(label) + " is not a bound enum");
  }
  return std::get<EnumTag>(*v).tag;
}

Record Record::with(std::size_t index, Value value) const {
  Record copy = *this;
  copy.values_.at(index) = std::move(value);
  return copy;
}

Record Record::with(std::string_view label, Value value) const {
  return with(schema_->require_index(label), std::move(value));
}

std::optional<Violation> check_value(const FieldSpec& field, const Value& value) {
  if (const auto* num = std::get_if<NumericKind>(&field.kind)) {
    const auto* d = std::get_if<Decimal>(&value);
    if (!d) return Violation{field.name, "kind", field.name + " expects a numeric value"};
    if (*d < num->min || *d > num->max) {
      return Violation{field.name, "range",
                       field.name + " out of range [" + num->min.to_compact_string() + "," +
                           num->max.to_compact_string() + "]"};
    }
    if ((*d - num->min).cents() % num->step.cents() != 0) {
      return Violation{field.name, "grid", field.name + " is not a multiple of " + num->step.to_compact_string()};
    }
    return std::nullopt;
  }
  if (field.is_boolean()) {
    if (!std::holds_alternative<bool>(value)) {
      return Violation{field.name, "kind", field.name + " expects a boolean value"};
    }
    return std::nullopt;
  }
  const auto* tag = std::get_if<EnumTag>(&value);
  if (!tag) return Violation{field.name, "kind", field.name + " expects an enum tag"};
  if (!field.enumeration().contains(tag->tag)) {
    return Violation{field.name, "enum", field.name + " has no tag " + tag->tag};
  }
  return std::nullopt;
}

ValidationResult validate_record(const Schema& schema, const Record& record) {
  ValidationResult result;
  if (record.schema() && !(*record.schema() == schema)) {
    result.violations.push_back({"", "schema", "record belongs to a different schema"});
    return result;
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FieldSpec& field = schema.field(i);
    const auto& value = record.schema() ? record.at(i) : std::optional<Value>{};
    if (!value) {
      result.violations.push_back({field.name, "missing", "missing label " + field.name});
      continue;
    }
    if (auto v = check_value(field, *value)) result.violations.push_back(std::move(*v));
  }
  return result;
}

namespace {

std::vector<bool> exception_mask(const Schema& schema, std::span<const std::string> exceptions) {
  std::vector<bool> mask(schema.size(), false);
  for (const auto& label : exceptions) mask[schema.require_index(label)] = true;
  return mask;
}

}  // namespace

bool is_metamorphose(const Record& x, const Record& y, std::span<const std::string> exceptions) {
  if (x.schema() != y.schema() && !(*x.schema() == *y.schema())) {
    throw SpecError("records do not share a schema");
  }
  const auto mask = exception_mask(*x.schema(), exceptions);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] && x.at(i) != y.at(i)) return false;
  }
  return true;
}

Record metamorphose(const Record& x, std::span<const std::string> exceptions,
                    const std::map<std::string, Value>& assignments) {
  const Schema& schema = *x.schema();
  const auto mask = exception_mask(schema, exceptions);
  Record y = x;
  for (const auto& [label, value] : assignments) {
    const std::size_t index = schema.require_index(label);
    if (!mask[index]) throw SpecError(label + " not in exception set");
    if (auto v = check_value(schema.field(index), value)) throw ValidationError(v->message);
    y = y.with(index, value);
  }
  return y;
}

}  // namespace mrdebug

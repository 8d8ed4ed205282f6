#include "mrdebug/schema_io.hpp"

#include <fstream>
#include <sstream>

#include "mrdebug/errors.hpp"

namespace mrdebug {

using nlohmann::ordered_json;

Decimal decimal_from_json(const ordered_json& j, const std::string& what) {
  if (j.is_number_integer()) return Decimal::from_units(j.get<std::int64_t>());
  if (j.is_number()) return Decimal::from_double(j.get<double>());
  if (j.is_string()) return Decimal::parse(j.get<std::string>());
  throw SpecError(what + " must be a number");
}

ordered_json decimal_to_json(Decimal d) {
  if (d.cents() % 100 == 0) return ordered_json(d.cents() / 100);
  return ordered_json(d.to_double());
}

SchemaPtr parse_schema(const ordered_json& doc) {
  if (!doc.is_object() || !doc.contains("fields") || !doc["fields"].is_array()) {
    throw SpecError("schema document needs a \"fields\" array");
  }
  std::vector<FieldSpec> fields;
  for (const auto& f : doc["fields"]) {
    FieldSpec spec;
    spec.name = f.at("name").get<std::string>();
    spec.unit = f.value("unit", "");
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "numeric") {
      spec.kind = NumericKind{decimal_from_json(f.at("min"), spec.name + ".min"),
                              decimal_from_json(f.at("max"), spec.name + ".max"),
                              decimal_from_json(f.at("step"), spec.name + ".step")};
    } else if (kind == "boolean") {
      spec.kind = BooleanKind{};
    } else if (kind == "enum") {
      spec.kind = EnumKind{f.at("values").get<std::vector<std::string>>()};
    } else {
      throw SpecError("field " + spec.name + ": unknown kind " + kind);
    }
    fields.push_back(std::move(spec));
  }
  return std::make_shared<const Schema>(std::move(fields));
}

SchemaPtr load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open schema " + path.string());
  try {
    return parse_schema(ordered_json::parse(in));
  } catch (const ordered_json::exception& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

ordered_json schema_to_json(const Schema& schema) {
  ordered_json fields = ordered_json::array();
  for (const auto& f : schema.fields()) {
    ordered_json j;
    j["name"] = f.name;
    if (f.is_numeric()) {
      j["kind"] = "numeric";
      j["min"] = decimal_to_json(f.numeric().min);
      j["max"] = decimal_to_json(f.numeric().max);
      j["step"] = decimal_to_json(f.numeric().step);
    } else if (f.is_boolean()) {
      j["kind"] = "boolean";
    } else {
      j["kind"] = "enum";
      j["values"] = f.enumeration().values;
    }
    j["unit"] = f.unit;
    fields.push_back(std::move(j));
  }
  ordered_json doc;
  doc["fields"] = std::move(fields);
  return doc;
}

std::string dump_schema(const Schema& schema) { return schema_to_json(schema).dump(2) + "\n"; }

ordered_json value_to_json(const Value& value) {
  if (const auto* d = std::get_if<Decimal>(&value)) return decimal_to_json(*d);
  if (const auto* b = std::get_if<bool>(&value)) return *b;
  return std::get<EnumTag>(value).tag;
}

Value value_from_json(const FieldSpec& field, const ordered_json& j) {
  if (field.is_numeric()) return decimal_from_json(j, field.name);
  if (field.is_boolean()) {
    if (!j.is_boolean()) throw ValidationError(field.name + " expects a boolean value");
    return j.get<bool>();
  }
  if (!j.is_string()) throw ValidationError(field.name + " expects an enum tag");
  return EnumTag{j.get<std::string>()};
}

ordered_json record_to_json(const Record& record) {
  ordered_json j = ordered_json::object();
  const Schema& schema = *record.schema();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (const auto& v = record.at(i)) j[schema.field(i).name] = value_to_json(*v);
  }
  return j;
}

Record record_from_json(const SchemaPtr& schema, const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object");
  Record record(schema);
  for (const auto& [label, value] : j.items()) {
    const std::size_t index = schema->require_index(label);
    record = record.with(index, value_from_json(schema->field(index), value));
  }
  return record;
}

SchemaPtr us1040_schema() {
  static const SchemaPtr schema = [] {
    auto num = [](std::int64_t lo, std::int64_t hi) {
      return NumericKind{Decimal::from_units(lo), Decimal::from_units(hi), Decimal::from_units(1)};
    };
    std::vector<FieldSpec> fields{
        {"sts", EnumKind{{"Single", "MFJ", "MFS", "HoH"}}, "status"},
        {"age", num(0, 120), "years"},
        {"s_age", num(0, 120), "years"},
        {"blind", BooleanKind{}, "flag"},
        {"s_blind", BooleanKind{}, "flag"},
        {"AGI", num(0, 199999), "USD"},
        {"QC", num(0, 3), "count"},
        {"L27", num(0, 7000), "USD"},
        {"L29", num(0, 4000), "USD"},
        {"itemize", BooleanKind{}, "flag"},
        {"MDE", num(0, 50000), "USD"},
        {"start", num(19700101, 20211231), "date"},
    };
    return std::make_shared<const Schema>(std::move(fields));
  }();
  return schema;
}

}  // namespace mrdebug

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mrdebug/model.hpp"

namespace mrdebug {

/// Schema documents: {"fields": [{"name", "kind", "min", "max", "step",
/// "values", "unit"}, ...]} with kind one of numeric|boolean|enum.
SchemaPtr parse_schema(const nlohmann::ordered_json& doc);
SchemaPtr load_schema(const std::filesystem::path& path);
nlohmann::ordered_json schema_to_json(const Schema& schema);
/// Pretty-printed canonical document, newline terminated.
std::string dump_schema(const Schema& schema);

/// Whole values as JSON integers, others as the nearest double (which reads
/// back to the same hundredths).
nlohmann::ordered_json decimal_to_json(Decimal d);
/// Accepts numbers and decimal strings; throws SpecError naming `what`.
Decimal decimal_from_json(const nlohmann::ordered_json& j, const std::string& what);

/// Decimals become JSON numbers, booleans JSON booleans, enum tags strings.
nlohmann::ordered_json value_to_json(const Value& value);
Value value_from_json(const FieldSpec& field, const nlohmann::ordered_json& j);
nlohmann::ordered_json record_to_json(const Record& record);
Record record_from_json(const SchemaPtr& schema, const nlohmann::ordered_json& j);

/// The simplified individual-return schema the bundled reference engine reads
/// (shipped as schemas/us1040_2020.json).
SchemaPtr us1040_schema();

}  // namespace mrdebug

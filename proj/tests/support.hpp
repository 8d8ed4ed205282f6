#pragma once

#include <map>
#include <string>

#include "mrdebug/model.hpp"
#include "mrdebug/schema_io.hpp"

namespace testing {

using namespace mrdebug;

inline Decimal usd(std::string_view text) { return Decimal::parse(text); }

// A complete us1040 record: numerics at their minimum, booleans off, enums at
// their first tag; `overrides` replaces individual labels.
inline Record household(const std::map<std::string, Value>& overrides = {}) {
  const SchemaPtr schema = us1040_schema();
  std::map<std::string, Value> values;
  for (const auto& f : schema->fields()) {
    if (f.is_numeric()) {
      values[f.name] = f.numeric().min;
    } else if (f.is_boolean()) {
      values[f.name] = false;
    } else {
      values[f.name] = EnumTag{f.enumeration().values.front()};
    }
  }
  for (const auto& [k, v] : overrides) values[k] = v;
  return Record(schema, values);
}

}  // namespace testing

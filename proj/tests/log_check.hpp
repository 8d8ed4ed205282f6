#pragma once
// Stand-alone campaign-log checker. Deliberately shares no code with the core
// library: it reads cases.jsonl as plain JSON and re-checks every follow-up
// constraint "target equals source outside the exception set".

#include <nlohmann/json.hpp>

#include <istream>
#include <set>
#include <string>
#include <vector>

namespace logcheck {

struct Summary {
  std::size_t cases = 0;
  std::size_t constraints = 0;
  std::vector<std::string> violations;
};

inline void check_line(const nlohmann::json& c, std::size_t line, Summary& out) {
  auto where = [&](const std::string& msg) {
    const std::string rel = c.contains("relation") && c["relation"].is_string() ? c["relation"].get<std::string>() : "?";
    const std::string id = c.contains("id") ? c["id"].dump() : "?";
    out.violations.push_back("line " + std::to_string(line) + " (" + rel + " #" + id + "): " + msg);
  };
  if (!c.contains("bindings") || !c["bindings"].is_object() || !c.contains("constraints") ||
      !c["constraints"].is_array()) {
    where("missing bindings or constraints");
    return;
  }
  const auto& b = c["bindings"];
  for (const auto& k : c["constraints"]) {
    ++out.constraints;
    const std::string target = k.value("target", "");
    const std::string source = k.value("source", "");
    if (!b.contains(target) || !b.contains(source)) {
      where("constraint names an unbound variable");
      continue;
    }
    std::set<std::string> except;
    for (const auto& e : k.value("except", nlohmann::json::array())) except.insert(e.get<std::string>());
    const auto& x = b[source];
    const auto& y = b[target];
    std::set<std::string> labels;
    for (const auto& [key, v] : x.items()) labels.insert(key);
    for (const auto& [key, v] : y.items()) labels.insert(key);
    for (const auto& label : labels) {
      if (except.count(label)) continue;
      if (!x.contains(label) || !y.contains(label)) {
        where(label + " bound on one side only");
      } else if (x[label] != y[label]) {
        where(target + "." + label + " = " + y[label].dump() + " differs from " + source + "." + label + " = " +
              x[label].dump());
      }
    }
  }
}

inline Summary check_log(std::istream& in) {
  Summary out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    ++out.cases;
    nlohmann::json c;
    try {
      c = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      out.violations.push_back("line " + std::to_string(line) + ": " + e.what());
      continue;
    }
    check_line(c, line, out);
  }
  return out;
}

}  // namespace logcheck

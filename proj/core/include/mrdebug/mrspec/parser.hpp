#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrdebug/model.hpp"
#include "mrdebug/mrspec/ast.hpp"

namespace mrdebug::mrspec {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, std::string message);

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

/// Parses a .mr document (one or more relations, '#' line comments). When a
/// schema is given, labels are checked against it as well.
std::vector<RelationAst> parse_spec(std::string_view text, const Schema* schema = nullptr);

/// Parses exactly one relation.
RelationAst parse_relation(std::string_view text, const Schema* schema = nullptr);

}  // namespace mrdebug::mrspec

#pragma once

#include <string_view>

#include "sqlinsight/sql/ast.hpp"

namespace sqlinsight::sql {

/// Parses exactly one SELECT statement (optionally with WITH and a trailing
/// semicolon). Throws ParseError on malformed input and UnsupportedStatement
/// for DML/DDL.
QueryPtr ParseSelect(std::string_view sql);

/// Parses a standalone expression, e.g. a WHERE predicate or an ORDER BY
/// key with direction. Used to validate bundle fragments.
ExprPtr ParseExpression(std::string_view sql);

/// Cheap check used by generation and adaptation.
bool ParsesAsSelect(std::string_view sql);

}  // namespace sqlinsight::sql

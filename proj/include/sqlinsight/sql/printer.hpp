#pragma once

#include <string>
#include <string_view>

#include "sqlinsight/sql/ast.hpp"

namespace sqlinsight::sql {

// Canonical single-line rendering. Printing is a fixed point:
// Print(Parse(Print(q))) == Print(q).

std::string Print(const Query& query);
std::string Print(const SelectCore& core);
std::string Print(const Expr& expr);
std::string Print(const OrderItem& item);
std::string Print(const TableRef& ref);
std::string Print(const Join& join);
std::string Print(const SelectItem& item);
std::string PrintName(const std::vector<std::string>& parts);

/// Parse + canonical print. Uppercases keywords and identifiers outside
/// string literals, collapses whitespace, strips the terminal semicolon.
std::string NormalizeSql(std::string_view sql);

/// Whitespace/case normalization that does not require a parse; used for
/// substring checks over text that may be a fragment.
std::string NormalizeFragment(std::string_view sql);

}  // namespace sqlinsight::sql

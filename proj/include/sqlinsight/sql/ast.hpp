#pragma once

#include <memory>
#include <string>
#include <vector>

namespace sqlinsight::sql {

// Identifiers are stored normalized: unquoted names uppercased, quoted names
// kept verbatim with double-quote delimiters. Keywords never appear in the
// tree as text except where noted (join types, set operators, frame clauses).

struct Expr;
struct Query;
using ExprPtr = std::unique_ptr<Expr>;
using QueryPtr = std::unique_ptr<Query>;

struct OrderItem {
  ExprPtr expr;
  std::string direction;  // "", "ASC" or "DESC"
  std::string nulls;      // "", "NULLS FIRST" or "NULLS LAST"
};

struct WindowSpec {
  std::string base_window;  // named window this spec extends, may be empty
  std::vector<ExprPtr> partition_by;
  std::vector<OrderItem> order_by;
  std::string frame;  // normalized frame clause text, may be empty
};

enum class ExprKind {
  kLiteral,   // text = literal as written (strings keep quotes), keywords uppercased
  kColumn,    // name_parts = [qualifier..., column]
  kStar,      // name_parts = qualifier parts, empty for bare *
  kUnary,     // text = "-", "+", "NOT"; args[0]
  kBinary,    // text = operator ("AND", "OR", "=", "+", "||", ...); args[0], args[1]
  kFunction,  // text = function name; args; distinct; star_arg; over; filter
  kCase,      // has_operand -> args[0] is operand; then WHEN/THEN pairs; has_else -> last
  kCast,      // text = type name; args[0]
  kParen,     // args[0]
  kSubquery,  // scalar subquery
  kExists,    // negated for NOT EXISTS
  kInList,    // args[0] IN (args[1..]); negated
  kInQuery,   // args[0] IN (subquery); negated
  kBetween,   // args[0] BETWEEN args[1] AND args[2]; negated
  kLike,      // text = "LIKE" | "GLOB" | "ILIKE" | "REGEXP"; args[0], args[1], optional escape args[2]; negated
  kIs,        // args[0] IS [NOT] args[1]; negated
  kCollate,   // args[0] COLLATE text
};

struct Expr {
  ExprKind kind = ExprKind::kLiteral;
  std::string text;
  std::vector<std::string> name_parts;
  std::vector<ExprPtr> args;
  bool negated = false;
  bool distinct = false;
  bool star_arg = false;
  bool has_operand = false;
  bool has_else = false;
  QueryPtr subquery;
  std::unique_ptr<WindowSpec> over;
  std::string over_name;  // OVER <name>
  ExprPtr filter;         // FILTER (WHERE ...)
};

struct TableRef {
  std::vector<std::string> name_parts;  // named relation; empty when derived
  QueryPtr derived;
  std::string alias;
  std::vector<std::string> column_aliases;

  bool IsDerived() const { return derived != nullptr; }
};

struct Join {
  std::string type;  // normalized, e.g. "JOIN", "LEFT JOIN", "CROSS JOIN"
  TableRef table;
  ExprPtr on;
  std::vector<std::string> using_columns;
};

/// One comma-separated member of a FROM clause with its chained joins.
struct FromItem {
  TableRef table;
  std::vector<Join> joins;
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;
};

struct SelectCore {
  bool distinct = false;
  bool all = false;
  std::vector<SelectItem> items;
  std::vector<FromItem> from;
  ExprPtr where;
  std::vector<ExprPtr> group_by;
  ExprPtr having;
};

struct Cte {
  std::string name;
  std::vector<std::string> columns;
  std::string materialized;  // "", "MATERIALIZED" or "NOT MATERIALIZED"
  QueryPtr query;
};

/// A full query expression: optional WITH list, one or more SELECT cores
/// joined by set operators (left-associative, equal precedence), and the
/// compound-level ORDER BY / LIMIT.
struct Query {
  bool recursive = false;
  std::vector<Cte> ctes;
  std::vector<SelectCore> branches;
  std::vector<std::string> set_ops;  // size == branches.size() - 1
  std::vector<OrderItem> order_by;
  ExprPtr limit;
  ExprPtr offset;
};

}  // namespace sqlinsight::sql

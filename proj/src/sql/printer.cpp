#include "sqlinsight/sql/printer.hpp"

#include <cctype>

#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/sql/parser.hpp"

namespace sqlinsight::sql {
namespace {

void Append(std::string& out, std::string_view piece) {
  out.append(piece.data(), piece.size());
}

std::string JoinExprs(const std::vector<ExprPtr>& exprs) {
  std::string out;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    if (i) out += ", ";
    out += Print(*exprs[i]);
  }
  return out;
}

std::string JoinOrder(const std::vector<OrderItem>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += Print(items[i]);
  }
  return out;
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

std::string PrintWindow(const WindowSpec& spec) {
  std::string out = "(";
  auto sep = [&] {
    if (out.size() > 1) out += ' ';
  };
  if (!spec.base_window.empty()) {
    out += spec.base_window;
  }
  if (!spec.partition_by.empty()) {
    sep();
    out += "PARTITION BY " + JoinExprs(spec.partition_by);
  }
  if (!spec.order_by.empty()) {
    sep();
    out += "ORDER BY " + JoinOrder(spec.order_by);
  }
  if (!spec.frame.empty()) {
    sep();
    out += spec.frame;
  }
  out += ')';
  return out;
}

}  // namespace

std::string PrintName(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '.';
    out += parts[i];
  }
  return out;
}

std::string Print(const Expr& e) {
  switch (e.kind) {
    case ExprKind::kLiteral:
      return e.text;
    case ExprKind::kColumn:
      return PrintName(e.name_parts);
    case ExprKind::kStar:
      return e.name_parts.empty() ? "*" : PrintName(e.name_parts) + ".*";
    case ExprKind::kUnary: {
      std::string operand = Print(*e.args[0]);
      if (e.text == "NOT") return "NOT " + operand;
      // "- -1" must not collapse into a comment marker.
      if (!operand.empty() && (operand[0] == '-' || operand[0] == '+')) {
        return e.text + " " + operand;
      }
      return e.text + operand;
    }
    case ExprKind::kBinary:
      return Print(*e.args[0]) + " " + e.text + " " + Print(*e.args[1]);
    case ExprKind::kFunction: {
      std::string out = e.text + "(";
      if (e.star_arg) {
        out += "*";
      } else {
        if (e.distinct) out += "DISTINCT ";
        out += JoinExprs(e.args);
      }
      out += ")";
      if (e.filter) out += " FILTER (WHERE " + Print(*e.filter) + ")";
      if (e.over) {
        out += " OVER " + PrintWindow(*e.over);
      } else if (!e.over_name.empty()) {
        out += " OVER " + e.over_name;
      }
      return out;
    }
    case ExprKind::kCase: {
      std::string out = "CASE";
      std::size_t i = 0;
      if (e.has_operand) out += " " + Print(*e.args[i++]);
      std::size_t end = e.args.size() - (e.has_else ? 1 : 0);
      for (; i + 1 < end; i += 2) {
        out += " WHEN " + Print(*e.args[i]) + " THEN " + Print(*e.args[i + 1]);
      }
      if (e.has_else) out += " ELSE " + Print(*e.args.back());
      out += " END";
      return out;
    }
    case ExprKind::kCast:
      return "CAST(" + Print(*e.args[0]) + " AS " + e.text + ")";
    case ExprKind::kParen:
      return "(" + Print(*e.args[0]) + ")";
    case ExprKind::kSubquery:
      return "(" + Print(*e.subquery) + ")";
    case ExprKind::kExists:
      return std::string(e.negated ? "NOT " : "") + "EXISTS (" + Print(*e.subquery) + ")";
    case ExprKind::kInList: {
      std::string out = Print(*e.args[0]) + (e.negated ? " NOT IN (" : " IN (");
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        if (i > 1) out += ", ";
        out += Print(*e.args[i]);
      }
      return out + ")";
    }
    case ExprKind::kInQuery:
      return Print(*e.args[0]) + (e.negated ? " NOT IN (" : " IN (") +
             Print(*e.subquery) + ")";
    case ExprKind::kBetween:
      return Print(*e.args[0]) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
             Print(*e.args[1]) + " AND " + Print(*e.args[2]);
    case ExprKind::kLike: {
      std::string out = Print(*e.args[0]) + (e.negated ? " NOT " : " ") + e.text +
                        " " + Print(*e.args[1]);
      if (e.args.size() > 2) out += " ESCAPE " + Print(*e.args[2]);
      return out;
    }
    case ExprKind::kIs:
      return Print(*e.args[0]) + (e.negated ? " IS NOT " : " IS ") + Print(*e.args[1]);
    case ExprKind::kCollate:
      return Print(*e.args[0]) + " COLLATE " + e.text;
  }
  return {};
}

std::string Print(const OrderItem& item) {
  std::string out = Print(*item.expr);
  if (!item.direction.empty()) out += " " + item.direction;
  if (!item.nulls.empty()) out += " " + item.nulls;
  return out;
}

std::string Print(const TableRef& ref) {
  std::string out = ref.IsDerived() ? "(" + Print(*ref.derived) + ")" : PrintName(ref.name_parts);
  if (!ref.alias.empty()) out += " " + ref.alias;
  if (!ref.column_aliases.empty()) out += "(" + JoinNames(ref.column_aliases) + ")";
  return out;
}

std::string Print(const Join& join) {
  std::string out = join.type + " " + Print(join.table);
  if (join.on) out += " ON " + Print(*join.on);
  if (!join.using_columns.empty()) out += " USING (" + JoinNames(join.using_columns) + ")";
  return out;
}

std::string Print(const SelectItem& item) {
  std::string out = Print(*item.expr);
  if (!item.alias.empty()) out += " AS " + item.alias;
  return out;
}

std::string Print(const SelectCore& core) {
  std::string out = "SELECT ";
  if (core.distinct) out += "DISTINCT ";
  if (core.all) out += "ALL ";
  for (std::size_t i = 0; i < core.items.size(); ++i) {
    if (i) out += ", ";
    out += Print(core.items[i]);
  }
  if (!core.from.empty()) {
    out += " FROM ";
    for (std::size_t i = 0; i < core.from.size(); ++i) {
      if (i) out += ", ";
      out += Print(core.from[i].table);
      for (const Join& j : core.from[i].joins) out += " " + Print(j);
    }
  }
  if (core.where) out += " WHERE " + Print(*core.where);
  if (!core.group_by.empty()) out += " GROUP BY " + JoinExprs(core.group_by);
  if (core.having) out += " HAVING " + Print(*core.having);
  return out;
}

std::string Print(const Query& q) {
  std::string out;
  if (!q.ctes.empty()) {
    out += q.recursive ? "WITH RECURSIVE " : "WITH ";
    for (std::size_t i = 0; i < q.ctes.size(); ++i) {
      const Cte& cte = q.ctes[i];
      if (i) out += ", ";
      out += cte.name;
      if (!cte.columns.empty()) out += "(" + JoinNames(cte.columns) + ")";
      out += " AS ";
      if (!cte.materialized.empty()) out += cte.materialized + " ";
      out += "(" + Print(*cte.query) + ")";
    }
    out += ' ';
  }
  for (std::size_t i = 0; i < q.branches.size(); ++i) {
    if (i) out += " " + q.set_ops[i - 1] + " ";
    Append(out, Print(q.branches[i]));
  }
  if (!q.order_by.empty()) out += " ORDER BY " + JoinOrder(q.order_by);
  if (q.limit) out += " LIMIT " + Print(*q.limit);
  if (q.offset) out += " OFFSET " + Print(*q.offset);
  return out;
}

std::string NormalizeSql(std::string_view sql) { return Print(*ParseSelect(sql)); }

std::string NormalizeFragment(std::string_view sql) {
  std::string out;
  std::vector<Token> tokens;
  try {
    tokens = Tokenize(sql);
  } catch (...) {
    // Fall back to whitespace collapsing only.
    bool space = false;
    for (char c : sql) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        space = !out.empty();
        continue;
      }
      if (space) out += ' ';
      space = false;
      out += c;
    }
    return out;
  }
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.IsOp(";") && i + 2 == tokens.size()) break;
    if (!out.empty()) out += ' ';
    out += t.kind == TokenKind::kWord ? t.Upper() : t.text;
  }
  return out;
}

}  // namespace sqlinsight::sql

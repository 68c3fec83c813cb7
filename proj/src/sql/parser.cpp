#include "sqlinsight/sql/parser.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"

namespace sqlinsight::sql {
namespace {

constexpr std::array<std::string_view, 18> kUnsupportedLeaders = {
    "INSERT", "UPDATE", "DELETE",  "CREATE", "DROP",    "ALTER",
    "REPLACE", "PRAGMA", "ATTACH", "DETACH", "BEGIN",   "COMMIT",
    "ROLLBACK", "VACUUM", "EXPLAIN", "MERGE", "TRUNCATE", "GRANT",
};

bool IsUnsupportedLeader(const Token& t) {
  for (auto word : kUnsupportedLeaders) {
    if (t.Is(word)) return true;
  }
  return false;
}

ExprPtr MakeExpr(ExprKind kind, std::string text = {}) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->text = std::move(text);
  return e;
}

std::string NormalizeQuoted(const std::string& raw) {
  // "x", `x`, [x] -> "x"
  return "\"" + raw.substr(1, raw.size() - 2) + "\"";
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(Tokenize(sql)) {}

  QueryPtr Statement() {
    if (Peek().kind == TokenKind::kEnd) Fail("empty statement");
    if (IsUnsupportedLeader(Peek())) {
      throw UnsupportedStatement("only SELECT statements are supported, got " +
                                 Peek().Upper());
    }
    if (!Peek().Is("SELECT") && !Peek().Is("WITH")) {
      Fail("expected SELECT or WITH");
    }
    QueryPtr q = ParseQuery();
    while (Peek().IsOp(";")) Next();
    if (Peek().kind != TokenKind::kEnd) {
      if (IsUnsupportedLeader(Peek()) || Peek().Is("SELECT") || Peek().Is("WITH")) {
        Fail("multiple statements are not supported");
      }
      Fail("unexpected token '" + Peek().text + "'");
    }
    return q;
  }

  ExprPtr StandaloneExpression() {
    ExprPtr e = ParseExpr();
    if (Peek().kind != TokenKind::kEnd) {
      Fail("unexpected token '" + Peek().text + "' after expression");
    }
    return e;
  }

 private:
  const Token& Peek(std::size_t ahead = 0) const {
    std::size_t idx = pos_ + ahead;
    if (idx >= tokens_.size()) return tokens_.back();
    return tokens_[idx];
  }

  const Token& Next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  bool AcceptWord(std::string_view kw) {
    if (Peek().Is(kw)) {
      Next();
      return true;
    }
    return false;
  }

  bool AcceptOp(std::string_view op) {
    if (Peek().IsOp(op)) {
      Next();
      return true;
    }
    return false;
  }

  void ExpectWord(std::string_view kw) {
    if (!AcceptWord(kw)) Fail("expected " + std::string(kw));
  }

  void ExpectOp(std::string_view op) {
    if (!AcceptOp(op)) Fail("expected '" + std::string(op) + "'");
  }

  [[noreturn]] void Fail(const std::string& message) const {
    const Token& t = Peek();
    std::string near = t.kind == TokenKind::kEnd ? "end of input" : "'" + t.text + "'";
    throw ParseError(message + " near " + near, t.line, t.column);
  }

  bool AtIdentifier() const {
    const Token& t = Peek();
    if (t.kind == TokenKind::kQuotedIdent) return true;
    return t.kind == TokenKind::kWord && !IsReservedWord(t.Upper());
  }

  std::string Identifier() {
    const Token& t = Peek();
    if (t.kind == TokenKind::kQuotedIdent) {
      Next();
      return NormalizeQuoted(t.text);
    }
    if (t.kind == TokenKind::kWord && !IsReservedWord(t.Upper())) {
      Next();
      return t.Upper();
    }
    Fail("expected identifier");
  }

  std::vector<std::string> IdentifierList() {
    std::vector<std::string> out;
    ExpectOp("(");
    do {
      out.push_back(Identifier());
    } while (AcceptOp(","));
    ExpectOp(")");
    return out;
  }

  bool AtQueryStart(std::size_t ahead = 0) const {
    return Peek(ahead).Is("SELECT") || Peek(ahead).Is("WITH");
  }

  // ---- queries -----------------------------------------------------------

  QueryPtr ParseQuery() {
    auto q = std::make_unique<Query>();
    if (AcceptWord("WITH")) {
      q->recursive = AcceptWord("RECURSIVE");
      do {
        Cte cte;
        cte.name = Identifier();
        if (Peek().IsOp("(")) cte.columns = IdentifierList();
        ExpectWord("AS");
        if (AcceptWord("NOT")) {
          ExpectWord("MATERIALIZED");
          cte.materialized = "NOT MATERIALIZED";
        } else if (AcceptWord("MATERIALIZED")) {
          cte.materialized = "MATERIALIZED";
        }
        ExpectOp("(");
        if (!AtQueryStart()) Fail("expected query in WITH binding");
        cte.query = ParseQuery();
        ExpectOp(")");
        q->ctes.push_back(std::move(cte));
      } while (AcceptOp(","));
      if (IsUnsupportedLeader(Peek())) {
        throw UnsupportedStatement("only SELECT statements are supported, got " +
                                   Peek().Upper());
      }
    }

    if (Peek().IsOp("(")) Fail("parenthesized set operands are not supported");
    q->branches.push_back(ParseCore());
    while (true) {
      std::string op;
      if (AcceptWord("UNION")) {
        op = AcceptWord("ALL") ? "UNION ALL" : "UNION";
      } else if (AcceptWord("EXCEPT")) {
        op = "EXCEPT";
      } else if (AcceptWord("INTERSECT")) {
        op = "INTERSECT";
      } else {
        break;
      }
      q->set_ops.push_back(op);
      if (Peek().IsOp("(")) Fail("parenthesized set operands are not supported");
      q->branches.push_back(ParseCore());
    }

    if (AcceptWord("ORDER")) {
      ExpectWord("BY");
      q->order_by = ParseOrderList();
    }
    if (AcceptWord("LIMIT")) {
      ExprPtr first = ParseExpr();
      if (AcceptWord("OFFSET")) {
        q->limit = std::move(first);
        q->offset = ParseExpr();
      } else if (AcceptOp(",")) {
        q->offset = std::move(first);
        q->limit = ParseExpr();
      } else {
        q->limit = std::move(first);
      }
    }
    return q;
  }

  SelectCore ParseCore() {
    ExpectWord("SELECT");
    SelectCore core;
    if (AcceptWord("DISTINCT")) {
      core.distinct = true;
    } else if (AcceptWord("ALL")) {
      core.all = true;
    }
    do {
      core.items.push_back(ParseSelectItem());
    } while (AcceptOp(","));

    if (AcceptWord("FROM")) {
      do {
        core.from.push_back(ParseFromItem());
      } while (AcceptOp(","));
    }
    if (AcceptWord("WHERE")) core.where = ParseExpr();
    if (AcceptWord("GROUP")) {
      ExpectWord("BY");
      do {
        core.group_by.push_back(ParseExpr());
      } while (AcceptOp(","));
    }
    if (AcceptWord("HAVING")) core.having = ParseExpr();
    if (Peek().Is("WINDOW")) Fail("named WINDOW clauses are not supported");
    return core;
  }

  SelectItem ParseSelectItem() {
    SelectItem item;
    if (Peek().IsOp("*")) {
      Next();
      item.expr = MakeExpr(ExprKind::kStar);
      return item;
    }
    item.expr = ParseExpr();
    if (AcceptWord("AS")) {
      item.alias = Identifier();
    } else if (AtIdentifier()) {
      item.alias = Identifier();
    }
    return item;
  }

  TableRef ParseTableRef() {
    TableRef ref;
    if (AcceptOp("(")) {
      if (!AtQueryStart()) Fail("parenthesized joins are not supported");
      ref.derived = ParseQuery();
      ExpectOp(")");
    } else {
      ref.name_parts.push_back(Identifier());
      while (AcceptOp(".")) ref.name_parts.push_back(Identifier());
      if (Peek().IsOp("(")) Fail("table-valued functions are not supported");
    }
    if (AcceptWord("AS")) {
      ref.alias = Identifier();
    } else if (AtIdentifier()) {
      ref.alias = Identifier();
    }
    if (!ref.alias.empty() && Peek().IsOp("(")) {
      ref.column_aliases = IdentifierList();
    }
    return ref;
  }

  bool ParseJoinType(std::string& type) {
    const Token& t = Peek();
    if (t.Is("JOIN")) {
      Next();
      type = "JOIN";
      return true;
    }
    std::string prefix;
    std::size_t save = pos_;
    if (AcceptWord("NATURAL")) prefix = "NATURAL ";
    if (AcceptWord("INNER")) {
      type = prefix + "INNER JOIN";
    } else if (AcceptWord("CROSS")) {
      type = prefix + "CROSS JOIN";
    } else if (Peek().Is("LEFT") || Peek().Is("RIGHT") || Peek().Is("FULL")) {
      std::string side = Next().Upper();
      type = prefix + side + (AcceptWord("OUTER") ? " OUTER JOIN" : " JOIN");
    } else if (!prefix.empty()) {
      type = "NATURAL JOIN";
      ExpectWord("JOIN");
      return true;
    } else {
      pos_ = save;
      return false;
    }
    ExpectWord("JOIN");
    return true;
  }

  FromItem ParseFromItem() {
    FromItem item;
    item.table = ParseTableRef();
    std::string type;
    while (ParseJoinType(type)) {
      Join join;
      join.type = type;
      join.table = ParseTableRef();
      if (AcceptWord("ON")) {
        join.on = ParseExpr();
      } else if (AcceptWord("USING")) {
        join.using_columns = IdentifierList();
      }
      item.joins.push_back(std::move(join));
    }
    return item;
  }

  std::vector<OrderItem> ParseOrderList() {
    std::vector<OrderItem> out;
    do {
      OrderItem item;
      item.expr = ParseExpr();
      if (AcceptWord("ASC")) {
        item.direction = "ASC";
      } else if (AcceptWord("DESC")) {
        item.direction = "DESC";
      }
      if (AcceptWord("NULLS")) {
        if (AcceptWord("FIRST")) {
          item.nulls = "NULLS FIRST";
        } else {
          ExpectWord("LAST");
          item.nulls = "NULLS LAST";
        }
      }
      out.push_back(std::move(item));
    } while (AcceptOp(","));
    return out;
  }

  // ---- expressions -------------------------------------------------------

  ExprPtr ParseExpr() { return ParseOr(); }

  ExprPtr Binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
    auto e = MakeExpr(ExprKind::kBinary, std::move(op));
    e->args.push_back(std::move(lhs));
    e->args.push_back(std::move(rhs));
    return e;
  }

  ExprPtr ParseOr() {
    ExprPtr lhs = ParseAnd();
    while (AcceptWord("OR")) lhs = Binary("OR", std::move(lhs), ParseAnd());
    return lhs;
  }

  ExprPtr ParseAnd() {
    ExprPtr lhs = ParseNot();
    while (AcceptWord("AND")) lhs = Binary("AND", std::move(lhs), ParseNot());
    return lhs;
  }

  ExprPtr ParseNot() {
    if (Peek().Is("NOT") && !Peek(1).Is("EXISTS")) {
      Next();
      auto e = MakeExpr(ExprKind::kUnary, "NOT");
      e->args.push_back(ParseNot());
      return e;
    }
    return ParseComparison();
  }

  ExprPtr ParseComparison() {
    ExprPtr lhs = ParseConcatLevel();
    while (true) {
      const Token& t = Peek();
      if (t.kind == TokenKind::kOperator &&
          (t.text == "=" || t.text == "==" || t.text == "!=" || t.text == "<>" ||
           t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=")) {
        std::string op = Next().text;
        if (op == "==") op = "=";
        lhs = Binary(op, std::move(lhs), ParseConcatLevel());
        continue;
      }
      bool negated = false;
      std::size_t save = pos_;
      if (t.Is("NOT")) {
        Next();
        negated = true;
      }
      if (AcceptWord("IN")) {
        ExpectOp("(");
        if (AtQueryStart()) {
          auto e = MakeExpr(ExprKind::kInQuery);
          e->negated = negated;
          e->args.push_back(std::move(lhs));
          e->subquery = ParseQuery();
          ExpectOp(")");
          lhs = std::move(e);
        } else {
          auto e = MakeExpr(ExprKind::kInList);
          e->negated = negated;
          e->args.push_back(std::move(lhs));
          if (!Peek().IsOp(")")) {
            do {
              e->args.push_back(ParseExpr());
            } while (AcceptOp(","));
          }
          ExpectOp(")");
          lhs = std::move(e);
        }
        continue;
      }
      if (AcceptWord("BETWEEN")) {
        auto e = MakeExpr(ExprKind::kBetween);
        e->negated = negated;
        e->args.push_back(std::move(lhs));
        e->args.push_back(ParseConcatLevel());
        ExpectWord("AND");
        e->args.push_back(ParseConcatLevel());
        lhs = std::move(e);
        continue;
      }
      if (Peek().Is("LIKE") || Peek().Is("GLOB") || Peek().Is("ILIKE") ||
          Peek().Is("REGEXP")) {
        auto e = MakeExpr(ExprKind::kLike, Next().Upper());
        e->negated = negated;
        e->args.push_back(std::move(lhs));
        e->args.push_back(ParseConcatLevel());
        if (AcceptWord("ESCAPE")) e->args.push_back(ParseConcatLevel());
        lhs = std::move(e);
        continue;
      }
      if (negated) {
        pos_ = save;
        break;
      }
      if (AcceptWord("IS")) {
        auto e = MakeExpr(ExprKind::kIs);
        e->negated = AcceptWord("NOT");
        e->args.push_back(std::move(lhs));
        e->args.push_back(ParseConcatLevel());
        lhs = std::move(e);
        continue;
      }
      break;
    }
    return lhs;
  }

  ExprPtr ParseConcatLevel() { return ParseAdditive(); }

  ExprPtr ParseAdditive() {
    ExprPtr lhs = ParseMultiplicative();
    while (Peek().IsOp("+") || Peek().IsOp("-")) {
      std::string op = Next().text;
      lhs = Binary(op, std::move(lhs), ParseMultiplicative());
    }
    return lhs;
  }

  ExprPtr ParseMultiplicative() {
    ExprPtr lhs = ParseConcat();
    while (Peek().IsOp("*") || Peek().IsOp("/") || Peek().IsOp("%")) {
      std::string op = Next().text;
      lhs = Binary(op, std::move(lhs), ParseConcat());
    }
    return lhs;
  }

  ExprPtr ParseConcat() {
    ExprPtr lhs = ParseUnary();
    while (Peek().IsOp("||")) {
      Next();
      lhs = Binary("||", std::move(lhs), ParseUnary());
    }
    return lhs;
  }

  ExprPtr ParseUnary() {
    if (Peek().IsOp("-") || Peek().IsOp("+")) {
      auto e = MakeExpr(ExprKind::kUnary, Next().text);
      e->args.push_back(ParseUnary());
      return e;
    }
    return ParsePostfix();
  }

  ExprPtr ParsePostfix() {
    ExprPtr e = ParsePrimary();
    while (Peek().Is("COLLATE")) {
      Next();
      auto c = MakeExpr(ExprKind::kCollate, Identifier());
      c->args.push_back(std::move(e));
      e = std::move(c);
    }
    return e;
  }

  std::string ParseTypeName() {
    std::string type;
    while (Peek().kind == TokenKind::kWord && !Peek().IsOp(")")) {
      if (!type.empty()) type += ' ';
      type += Next().Upper();
    }
    if (type.empty()) Fail("expected type name");
    if (AcceptOp("(")) {
      type += '(';
      bool first = true;
      while (!Peek().IsOp(")")) {
        if (!first) {
          ExpectOp(",");
          type += ", ";
        }
        first = false;
        bool neg = AcceptOp("-");
        if (Peek().kind != TokenKind::kNumber) Fail("expected type size");
        type += (neg ? "-" : "") + Next().text;
      }
      ExpectOp(")");
      type += ')';
    }
    return type;
  }

  ExprPtr ParsePrimary() {
    const Token& t = Peek();
    switch (t.kind) {
      case TokenKind::kNumber:
        return MakeExpr(ExprKind::kLiteral, Next().text);
      case TokenKind::kString:
        return MakeExpr(ExprKind::kLiteral, Next().text);
      case TokenKind::kEnd:
        Fail("unexpected end of input");
      case TokenKind::kOperator:
        if (t.text == "(") {
          Next();
          if (AtQueryStart()) {
            auto e = MakeExpr(ExprKind::kSubquery);
            e->subquery = ParseQuery();
            ExpectOp(")");
            return e;
          }
          auto e = MakeExpr(ExprKind::kParen);
          e->args.push_back(ParseExpr());
          if (Peek().IsOp(",")) Fail("row values are not supported");
          ExpectOp(")");
          return e;
        }
        Fail("unexpected '" + t.text + "'");
      case TokenKind::kQuotedIdent:
      case TokenKind::kWord:
        break;
    }

    if (t.Is("NULL") || t.Is("TRUE") || t.Is("FALSE") || t.Is("CURRENT_DATE") ||
        t.Is("CURRENT_TIME") || t.Is("CURRENT_TIMESTAMP")) {
      return MakeExpr(ExprKind::kLiteral, Next().Upper());
    }
    if (t.Is("CASE")) return ParseCase();
    if (t.Is("CAST")) {
      Next();
      ExpectOp("(");
      auto e = MakeExpr(ExprKind::kCast);
      e->args.push_back(ParseExpr());
      ExpectWord("AS");
      e->text = ParseTypeName();
      ExpectOp(")");
      return e;
    }
    if (t.Is("EXISTS") || (t.Is("NOT") && Peek(1).Is("EXISTS"))) {
      auto e = MakeExpr(ExprKind::kExists);
      if (AcceptWord("NOT")) e->negated = true;
      ExpectWord("EXISTS");
      ExpectOp("(");
      if (!AtQueryStart()) Fail("expected subquery after EXISTS");
      e->subquery = ParseQuery();
      ExpectOp(")");
      return e;
    }

    // Function call: any word directly followed by '(' (LEFT/RIGHT/REPLACE
    // are reserved-ish but valid function names).
    if (t.kind == TokenKind::kWord && Peek(1).IsOp("(") &&
        (!IsReservedWord(t.Upper()) || t.Is("LEFT") || t.Is("RIGHT"))) {
      return ParseFunction();
    }

    if (!AtIdentifier()) Fail("expected expression");
    std::vector<std::string> parts;
    parts.push_back(Identifier());
    while (Peek().IsOp(".")) {
      Next();
      if (Peek().IsOp("*")) {
        Next();
        auto star = MakeExpr(ExprKind::kStar);
        star->name_parts = std::move(parts);
        return star;
      }
      parts.push_back(Identifier());
    }
    auto col = MakeExpr(ExprKind::kColumn);
    col->name_parts = std::move(parts);
    return col;
  }

  ExprPtr ParseFunction() {
    auto e = MakeExpr(ExprKind::kFunction, Next().Upper());
    ExpectOp("(");
    if (AcceptOp("*")) {
      e->star_arg = true;
    } else if (!Peek().IsOp(")")) {
      if (AcceptWord("DISTINCT")) {
        e->distinct = true;
      } else {
        AcceptWord("ALL");
      }
      do {
        e->args.push_back(ParseExpr());
      } while (AcceptOp(","));
    }
    ExpectOp(")");
    if (AcceptWord("FILTER")) {
      ExpectOp("(");
      ExpectWord("WHERE");
      e->filter = ParseExpr();
      ExpectOp(")");
    }
    if (AcceptWord("OVER")) {
      if (AtIdentifier()) {
        e->over_name = Identifier();
      } else {
        e->over = ParseWindowSpec();
      }
    }
    return e;
  }

  std::unique_ptr<WindowSpec> ParseWindowSpec() {
    auto spec = std::make_unique<WindowSpec>();
    ExpectOp("(");
    if (AtIdentifier() && !Peek().Is("ROWS") && !Peek().Is("RANGE") &&
        !Peek().Is("GROUPS")) {
      spec->base_window = Identifier();
    }
    if (AcceptWord("PARTITION")) {
      ExpectWord("BY");
      do {
        spec->partition_by.push_back(ParseExpr());
      } while (AcceptOp(","));
    }
    if (AcceptWord("ORDER")) {
      ExpectWord("BY");
      spec->order_by = ParseOrderList();
    }
    if (Peek().Is("ROWS") || Peek().Is("RANGE") || Peek().Is("GROUPS")) {
      std::string frame;
      int depth = 0;
      while (!(depth == 0 && Peek().IsOp(")"))) {
        if (Peek().kind == TokenKind::kEnd) Fail("unterminated window frame");
        if (Peek().IsOp("(")) ++depth;
        if (Peek().IsOp(")")) --depth;
        const Token& f = Next();
        if (!frame.empty()) frame += ' ';
        frame += f.kind == TokenKind::kWord ? f.Upper() : f.text;
      }
      spec->frame = frame;
    }
    ExpectOp(")");
    return spec;
  }

  ExprPtr ParseCase() {
    ExpectWord("CASE");
    auto e = MakeExpr(ExprKind::kCase);
    if (!Peek().Is("WHEN")) {
      e->has_operand = true;
      e->args.push_back(ParseExpr());
    }
    if (!Peek().Is("WHEN")) Fail("expected WHEN");
    while (AcceptWord("WHEN")) {
      e->args.push_back(ParseExpr());
      ExpectWord("THEN");
      e->args.push_back(ParseExpr());
    }
    if (AcceptWord("ELSE")) {
      e->has_else = true;
      e->args.push_back(ParseExpr());
    }
    ExpectWord("END");
    return e;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryPtr ParseSelect(std::string_view sql) { return Parser(sql).Statement(); }

ExprPtr ParseExpression(std::string_view sql) {
  return Parser(sql).StandaloneExpression();
}

bool ParsesAsSelect(std::string_view sql) {
  try {
    ParseSelect(sql);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace sqlinsight::sql

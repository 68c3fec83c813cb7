#include "sqlinsight/sql/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "sqlinsight/errors.hpp"

namespace sqlinsight::sql {
namespace {

constexpr std::array<std::string_view, 58> kReserved = {
    "ALL",     "AND",       "AS",       "ASC",     "BETWEEN", "BY",
    "CASE",    "CAST",      "CROSS",    "DESC",    "DISTINCT", "ELSE",
    "END",     "EXCEPT",    "EXISTS",   "FALSE",   "FETCH",   "FROM",
    "FULL",    "GROUP",     "HAVING",   "IN",      "INNER",   "INTERSECT",
    "INTO",    "IS",        "JOIN",     "LEFT",    "LIKE",    "LIMIT",
    "NATURAL", "NOT",       "NULL",     "OFFSET",  "ON",      "OR",
    "ORDER",   "OUTER",     "OVER",     "RIGHT",   "SELECT",  "THEN",
    "TRUE",    "UNION",     "USING",    "WHEN",    "WHERE",   "WINDOW",
    "WITH",    "RECURSIVE", "ILIKE",    "GLOB",    "REGEXP",  "ESCAPE",
    "COLLATE", "FILTER",    "VALUES",   "PARTITION",
};

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool IsIdentChar(char c) {
  return IsIdentStart(c) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '$';
}

}  // namespace

std::string ToUpperAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string ToLowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool Token::Is(std::string_view keyword) const {
  if (kind != TokenKind::kWord || text.size() != keyword.size()) return false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(text[i])) !=
        std::toupper(static_cast<unsigned char>(keyword[i]))) {
      return false;
    }
  }
  return true;
}

std::string Token::Upper() const { return ToUpperAscii(text); }

bool IsReservedWord(std::string_view upper_word) {
  return std::find(kReserved.begin(), kReserved.end(), upper_word) !=
         kReserved.end();
}

std::vector<Token> Tokenize(std::string_view sql) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t line_start = 0;

  auto advance_to = [&](std::size_t end) {
    for (std::size_t k = i; k < end && k < sql.size(); ++k) {
      if (sql[k] == '\n') {
        ++line;
        line_start = k + 1;
      }
    }
    i = end;
  };

  while (i < sql.size()) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance_to(i + 1);
      continue;
    }
    if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      std::size_t end = sql.find('\n', i);
      advance_to(end == std::string_view::npos ? sql.size() : end);
      continue;
    }
    if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      std::size_t end = sql.find("*/", i + 2);
      if (end == std::string_view::npos) {
        throw ParseError("unterminated block comment", line, i - line_start + 1);
      }
      advance_to(end + 2);
      continue;
    }

    Token tok;
    tok.offset = i;
    tok.line = line;
    tok.column = i - line_start + 1;

    if (c == '\'') {
      std::size_t j = i + 1;
      while (true) {
        if (j >= sql.size()) {
          throw ParseError("unterminated string literal", tok.line, tok.column);
        }
        if (sql[j] == '\'') {
          if (j + 1 < sql.size() && sql[j + 1] == '\'') {
            j += 2;
            continue;
          }
          break;
        }
        ++j;
      }
      tok.kind = TokenKind::kString;
      tok.text = std::string(sql.substr(i, j + 1 - i));
      advance_to(j + 1);
    } else if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::size_t j = sql.find(close, i + 1);
      if (j == std::string_view::npos) {
        throw ParseError("unterminated quoted identifier", tok.line, tok.column);
      }
      tok.kind = TokenKind::kQuotedIdent;
      tok.text = std::string(sql.substr(i, j + 1 - i));
      advance_to(j + 1);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < sql.size() &&
                std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      std::size_t j = i;
      while (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      if (j < sql.size() && sql[j] == '.') {
        ++j;
        while (j < sql.size() && std::isdigit(static_cast<unsigned char>(sql[j]))) ++j;
      }
      if (j < sql.size() && (sql[j] == 'e' || sql[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < sql.size() && (sql[k] == '+' || sql[k] == '-')) ++k;
        if (k < sql.size() && std::isdigit(static_cast<unsigned char>(sql[k]))) {
          while (k < sql.size() && std::isdigit(static_cast<unsigned char>(sql[k]))) ++k;
          j = k;
        }
      }
      if (j < sql.size() && IsIdentStart(sql[j])) {
        throw ParseError("malformed number", tok.line, tok.column);
      }
      tok.kind = TokenKind::kNumber;
      tok.text = std::string(sql.substr(i, j - i));
      advance_to(j);
    } else if (IsIdentStart(c)) {
      std::size_t j = i + 1;
      while (j < sql.size() && IsIdentChar(sql[j])) ++j;
      tok.kind = TokenKind::kWord;
      tok.text = std::string(sql.substr(i, j - i));
      advance_to(j);
    } else {
      static constexpr std::array<std::string_view, 8> kTwoChar = {
          "<=", ">=", "<>", "!=", "||", "==", "::", "<<"};
      std::string_view two = sql.substr(i, 2);
      if (two.size() == 2 &&
          std::find(kTwoChar.begin(), kTwoChar.end(), two) != kTwoChar.end()) {
        tok.kind = TokenKind::kOperator;
        tok.text = std::string(two);
        advance_to(i + 2);
      } else if (std::string_view("(),.;=<>+-*/%").find(c) != std::string_view::npos) {
        tok.kind = TokenKind::kOperator;
        tok.text = std::string(1, c);
        advance_to(i + 1);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'",
                         tok.line, tok.column);
      }
    }
    tokens.push_back(std::move(tok));
  }

  Token end;
  end.kind = TokenKind::kEnd;
  end.offset = sql.size();
  end.line = line;
  end.column = sql.size() - line_start + 1;
  tokens.push_back(end);
  return tokens;
}

}  // namespace sqlinsight::sql

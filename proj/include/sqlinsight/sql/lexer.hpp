#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqlinsight::sql {

enum class TokenKind {
  kWord,          // identifier or keyword, unquoted
  kQuotedIdent,   // "x", `x` or [x]; text keeps the delimiters
  kString,        // '...'; text keeps the quotes
  kNumber,
  kOperator,      // punctuation and operators
  kEnd,
};

struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string text;
  std::size_t offset = 0;
  std::size_t line = 1;
  std::size_t column = 1;

  /// Case-insensitive keyword test; only meaningful for kWord.
  bool Is(std::string_view keyword) const;
  bool IsOp(std::string_view op) const {
    return kind == TokenKind::kOperator && text == op;
  }
  std::string Upper() const;
};

/// Splits SQL text into tokens, dropping whitespace and comments. The last
/// token is always kEnd. Throws ParseError on unterminated literals or
/// unknown characters.
std::vector<Token> Tokenize(std::string_view sql);

/// True for words that can never serve as an implicit alias or identifier.
bool IsReservedWord(std::string_view upper_word);

std::string ToUpperAscii(std::string_view s);
std::string ToLowerAscii(std::string_view s);

}  // namespace sqlinsight::sql

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "urm/esa/predicate.hpp"

namespace urm::esa {

enum class TokenKind {
  Ident,
  String,
  Number,
  Comma,
  Colon,
  LBracket,
  RBracket,
  LParen,
  RParen,
  Dot,
  Star,
  Op,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Tokenises agreement and query text. Throws ParseError on unknown characters
/// or operators.
std::vector<Token> tokenize(std::string_view text);

/// Recursive-descent reader over a token stream, shared by the agreement and
/// query grammars.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == TokenKind::End; }

  /// True if the next token is the given punctuation kind; consumes it.
  bool accept(TokenKind kind);
  /// True if the next token is an identifier matching `word` (case-insensitive); consumes it.
  bool accept_keyword(std::string_view word);
  bool peek_keyword(std::string_view word, std::size_t ahead = 0) const;

  const Token& expect(TokenKind kind, std::string_view what);
  void expect_keyword(std::string_view word);
  std::string expect_identifier(std::string_view what);

  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail_at(const Token& tok, const std::string& message) const;

  /// `pred := disjunction`, with `and` binding tighter than `or`.
  Predicate parse_predicate();
  /// `true | false | null | number | string | bare-identifier`.
  Value parse_literal();

 private:
  Predicate parse_disjunction();
  Predicate parse_conjunction();
  Predicate parse_primary();

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

/// True if `s` is a valid bare identifier that is not a reserved word.
bool is_plain_identifier(std::string_view s);

CmpOp parse_op(std::string_view symbol);

}  // namespace urm::esa

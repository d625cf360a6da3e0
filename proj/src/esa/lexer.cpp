#include "urm/esa/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "urm/common/error.hpp"

namespace urm::esa {

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::array<std::string_view, 5> kReserved = {"true", "false", "null", "and", "or"};

struct UnicodeOp {
  std::string_view bytes;
  std::string_view ascii;
};

constexpr std::array<UnicodeOp, 3> kUnicodeOps = {{
    {"\xE2\x89\xA0", "!="},
    {"\xE2\x89\xA4", "<="},
    {"\xE2\x89\xA5", ">="},
}};

bool starts_unicode_op(std::string_view rest) {
  return std::any_of(kUnicodeOps.begin(), kUnicodeOps.end(), [&](const UnicodeOp& u) { return rest.starts_with(u.bytes); });
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t col = 1;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.column = col;

    bool matched_unicode = false;
    for (const auto& u : kUnicodeOps) {
      if (text.substr(i, u.bytes.size()) == u.bytes) {
        tok.kind = TokenKind::Op;
        tok.text = std::string(u.ascii);
        advance(u.bytes.size());
        matched_unicode = true;
        break;
      }
    }
    if (matched_unicode) {
      out.push_back(std::move(tok));
      continue;
    }

    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(static_cast<unsigned char>(text[j])) && !starts_unicode_op(text.substr(j))) ++j;
      tok.kind = TokenKind::Ident;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(c) || (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
      tok.kind = TokenKind::Number;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < text.size()) {
        const char d = text[j];
        if (d == '"') {
          closed = true;
          break;
        }
        if (d == '\\') {
          if (j + 1 >= text.size()) break;
          const char e = text[j + 1];
          switch (e) {
            case '"': value.push_back('"'); break;
            case '\\': value.push_back('\\'); break;
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            default: throw ParseError(std::string("unknown escape '\\") + e + "'", line, col + (j - i));
          }
          j += 2;
          continue;
        }
        value.push_back(d);
        ++j;
      }
      if (!closed) throw ParseError("unterminated string literal", line, col);
      tok.kind = TokenKind::String;
      tok.text = std::move(value);
      advance(j + 1 - i);
    } else {
      const std::string_view rest = text.substr(i);
      auto op = [&](std::string_view sym) {
        tok.kind = TokenKind::Op;
        tok.text = std::string(sym);
        advance(sym.size());
      };
      auto punct = [&](TokenKind kind) {
        tok.kind = kind;
        tok.text = std::string(1, static_cast<char>(c));
        advance(1);
      };
      if (rest.starts_with("==") || rest.starts_with("=<") || rest.starts_with("=>") || rest.starts_with("<>")) {
        throw ParseError("unknown operator '" + std::string(rest.substr(0, 2)) + "'", line, col);
      } else if (rest.starts_with("!=") || rest.starts_with("<=") || rest.starts_with(">=")) {
        op(rest.substr(0, 2));
      } else if (c == '=' || c == '<' || c == '>') {
        op(rest.substr(0, 1));
      } else if (c == ',') {
        punct(TokenKind::Comma);
      } else if (c == ':') {
        punct(TokenKind::Colon);
      } else if (c == '[') {
        punct(TokenKind::LBracket);
      } else if (c == ']') {
        punct(TokenKind::RBracket);
      } else if (c == '(') {
        punct(TokenKind::LParen);
      } else if (c == ')') {
        punct(TokenKind::RParen);
      } else if (c == '.') {
        punct(TokenKind::Dot);
      } else if (c == '*') {
        punct(TokenKind::Star);
      } else if (c == '!' || c == '~' || c == '&' || c == '|' || c == '^' || c == '%' || c == '+' || c == '-') {
        throw ParseError("unknown operator '" + std::string(1, static_cast<char>(c)) + "'", line, col);
      } else {
        throw ParseError("unexpected character '" + std::string(1, static_cast<char>(c)) + "'", line, col);
      }
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = TokenKind::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

bool is_plain_identifier(std::string_view s) {
  if (s.empty() || !ident_start(static_cast<unsigned char>(s.front()))) return false;
  if (!std::all_of(s.begin(), s.end(), [](char c) { return ident_char(static_cast<unsigned char>(c)); })) return false;
  return std::none_of(kReserved.begin(), kReserved.end(), [&](std::string_view r) { return iequals(r, s); });
}

CmpOp parse_op(std::string_view symbol) {
  if (symbol == "=") return CmpOp::Eq;
  if (symbol == "!=") return CmpOp::Ne;
  if (symbol == "<") return CmpOp::Lt;
  if (symbol == "<=") return CmpOp::Le;
  if (symbol == ">") return CmpOp::Gt;
  if (symbol == ">=") return CmpOp::Ge;
  throw Error("unknown operator '" + std::string(symbol) + "'");
}

const Token& TokenStream::peek(std::size_t ahead) const {
  return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
}

const Token& TokenStream::next() {
  const Token& t = tokens_[pos_];
  if (pos_ + 1 < tokens_.size()) ++pos_;
  return t;
}

bool TokenStream::accept(TokenKind kind) {
  if (peek().kind != kind) return false;
  next();
  return true;
}

bool TokenStream::peek_keyword(std::string_view word, std::size_t ahead) const {
  const Token& t = peek(ahead);
  return t.kind == TokenKind::Ident && iequals(t.text, word);
}

bool TokenStream::accept_keyword(std::string_view word) {
  if (!peek_keyword(word)) return false;
  next();
  return true;
}

const Token& TokenStream::expect(TokenKind kind, std::string_view what) {
  if (peek().kind != kind) fail("expected " + std::string(what));
  return next();
}

void TokenStream::expect_keyword(std::string_view word) {
  if (!accept_keyword(word)) fail("expected '" + std::string(word) + "'");
}

std::string TokenStream::expect_identifier(std::string_view what) {
  const Token& t = peek();
  if (t.kind != TokenKind::Ident || !is_plain_identifier(t.text)) fail("expected " + std::string(what));
  return next().text;
}

void TokenStream::fail(const std::string& message) const { fail_at(peek(), message); }

void TokenStream::fail_at(const Token& tok, const std::string& message) const {
  std::string found = tok.kind == TokenKind::End ? "end of input" : "'" + tok.text + "'";
  throw ParseError(message + ", found " + found, tok.line, tok.column);
}

Predicate TokenStream::parse_predicate() { return parse_disjunction(); }

Predicate TokenStream::parse_disjunction() {
  std::vector<Predicate> terms;
  terms.push_back(parse_conjunction());
  while (accept_keyword("or")) terms.push_back(parse_conjunction());
  return terms.size() == 1 ? std::move(terms.front()) : Predicate{Predicate::Kind::Or, {}, std::move(terms)};
}

Predicate TokenStream::parse_conjunction() {
  std::vector<Predicate> terms;
  terms.push_back(parse_primary());
  while (accept_keyword("and")) terms.push_back(parse_primary());
  return terms.size() == 1 ? std::move(terms.front()) : Predicate{Predicate::Kind::And, {}, std::move(terms)};
}

Predicate TokenStream::parse_primary() {
  if (accept(TokenKind::LParen)) {
    Predicate inner = parse_disjunction();
    expect(TokenKind::RParen, "')'");
    return inner;
  }
  if (accept_keyword("true")) return Predicate::always();
  if (accept_keyword("false")) return Predicate::never();

  std::string field = expect_identifier("a field name or predicate");
  if (peek().kind != TokenKind::Op) fail("expected a comparison operator");
  const CmpOp op = parse_op(next().text);
  const Token& lit_tok = peek();
  Value rhs = parse_literal();
  if (is_ordering(op) && !is_numeric(rhs)) {
    fail_at(lit_tok, "ordering operator " + std::string(op_symbol(op)) + " requires a numeric literal");
  }
  return Predicate::compare(std::move(field), op, std::move(rhs));
}

Value TokenStream::parse_literal() {
  const Token& t = peek();
  switch (t.kind) {
    case TokenKind::String: return next().text;
    case TokenKind::Number: {
      const Token& num = next();
      try {
        if (num.text.find('.') != std::string::npos) return Decimal::parse(num.text);
        return static_cast<std::int64_t>(std::stoll(num.text));
      } catch (const std::exception&) {
        fail_at(num, "malformed numeric literal");
      }
    }
    case TokenKind::Ident:
      if (accept_keyword("true")) return true;
      if (accept_keyword("false")) return false;
      if (accept_keyword("null")) return Null{};
      if (!is_plain_identifier(t.text)) fail("expected a literal");
      return next().text;
    default: fail("expected a literal");
  }
}

}  // namespace urm::esa

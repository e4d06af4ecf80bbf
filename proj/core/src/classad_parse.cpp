// Copyright 2026 The gridsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "gridsel/classad.hpp"
#include "gridsel/text.hpp"

namespace gridsel::classad {

ParseError::ParseError(std::size_t line, std::size_t column,
                       const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

constexpr std::uint64_t kInt64Max =
    static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());

enum class Tok {
  kEnd,
  kIdent,
  kNumber,
  kString,
  kAssign,
  kSemicolon,
  kDot,
  kLParen,
  kRParen,
  kNot,
  kOrOr,
  kAndAnd,
  kLess,
  kLessEqual,
  kGreater,
  kGreaterEqual,
  kEqualEqual,
  kNotEqual,
  kPlus,
  kMinus,
  kStar,
  kSlash,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::size_t line = 1;
  std::size_t column = 1;
  std::string text;            // identifier or decoded string
  bool is_real = false;        // number kind
  std::uint64_t magnitude = 0; // integer number value, before sign
  double real = 0;             // real number value
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
      t.kind = Tok::kIdent;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (digit(c)) return number(t);
    if (c == '"') return string(t, "\"");
    if (c == '`' && peek(1) == '`') return string(t, "''");
    advance();
    switch (c) {
      case '=':
        t.kind = match('=') ? Tok::kEqualEqual : Tok::kAssign;
        return t;
      case ';': t.kind = Tok::kSemicolon; return t;
      case '.': t.kind = Tok::kDot; return t;
      case '(': t.kind = Tok::kLParen; return t;
      case ')': t.kind = Tok::kRParen; return t;
      case '+': t.kind = Tok::kPlus; return t;
      case '-': t.kind = Tok::kMinus; return t;
      case '*': t.kind = Tok::kStar; return t;
      case '/': t.kind = Tok::kSlash; return t;
      case '!':
        t.kind = match('=') ? Tok::kNotEqual : Tok::kNot;
        return t;
      case '<':
        t.kind = match('=') ? Tok::kLessEqual : Tok::kLess;
        return t;
      case '>':
        t.kind = match('=') ? Tok::kGreaterEqual : Tok::kGreater;
        return t;
      case '&':
        if (match('&')) { t.kind = Tok::kAndAnd; return t; }
        break;
      case '|':
        if (match('|')) { t.kind = Tok::kOrOr; return t; }
        break;
      default:
        break;
    }
    throw ParseError(t.line, t.column,
                     std::string("unexpected character '") + c + "'");
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool match(char c) {
    if (peek() != c) return false;
    advance();
    return true;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && peek(1) == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token number(Token t) {
    const std::size_t start = pos_;
    while (digit(peek())) advance();
    bool is_real = false;
    if (peek() == '.' && digit(peek(1))) {
      is_real = true;
      advance();
      while (digit(peek())) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      is_real = true;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      while (digit(peek())) advance();
    }
    const std::string_view lexeme = src_.substr(start, pos_ - start);

    int shift = 0;
    if (ident_start(peek())) {
      switch (std::toupper(static_cast<unsigned char>(peek()))) {
        case 'K': shift = 10; break;
        case 'M': shift = 20; break;
        case 'G': shift = 30; break;
        case 'T': shift = 40; break;
        default: shift = -1; break;
      }
      if (shift < 0 || ident_char(peek(1))) {
        std::size_t end = pos_;
        while (end < src_.size() && ident_char(src_[end])) ++end;
        throw ParseError(line_, col_,
                         "unknown unit suffix '" +
                             std::string(src_.substr(pos_, end - pos_)) + "'");
      }
      advance();
    }
    // Rate marker: the value is already in bytes per second.
    if (peek() == '/' && iequals(src_.substr(pos_ + 1, 3), "sec") &&
        !ident_char(peek(4))) {
      for (int i = 0; i < 4; ++i) advance();
    }
    if (ident_char(peek())) {
      throw ParseError(line_, col_, "unknown unit suffix after number");
    }

    t.kind = Tok::kNumber;
    t.is_real = is_real;
    if (is_real) {
      double v = 0;
      const auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
      if (res.ec != std::errc()) {
        throw ParseError(t.line, t.column, "numeric literal out of range");
      }
      v = std::ldexp(v, shift);
      if (!std::isfinite(v)) {
        throw ParseError(t.line, t.column, "numeric literal out of range");
      }
      t.real = v;
    } else {
      std::uint64_t v = 0;
      const auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
      // One past INT64_MAX is allowed so the parser can fold a leading '-'.
      if (res.ec != std::errc() || (shift > 0 && v > ((kInt64Max + 1) >> shift)) ||
          v > kInt64Max + 1) {
        throw ParseError(t.line, t.column, "numeric literal out of range");
      }
      t.magnitude = v << shift;
      if (t.magnitude > kInt64Max + 1) {
        throw ParseError(t.line, t.column, "numeric literal out of range");
      }
    }
    return t;
  }

  Token string(Token t, std::string_view close) {
    advance();
    if (close.size() == 2) advance();  // second backtick
    std::string out;
    for (;;) {
      if (pos_ >= src_.size()) {
        throw ParseError(t.line, t.column, "unterminated string");
      }
      if (src_.substr(pos_, close.size()) == close) {
        for (std::size_t i = 0; i < close.size(); ++i) advance();
        break;
      }
      char c = src_[pos_];
      if (c == '\n') throw ParseError(line_, col_, "newline in string");
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) {
          throw ParseError(t.line, t.column, "unterminated string");
        }
        switch (src_[pos_]) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          case '\'': c = '\''; break;
          default:
            throw ParseError(line_, col_, "unknown escape sequence");
        }
      }
      out += c;
      advance();
    }
    t.kind = Tok::kString;
    t.text = std::move(out);
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

bool is_keyword(std::string_view s, std::string_view kw) { return iequals(s, kw); }

bool reserved(std::string_view s) {
  return is_keyword(s, "true") || is_keyword(s, "false") || is_keyword(s, "other");
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { tok_ = lex_.next(); }

  ClassAd ad() {
    ClassAd out;
    while (tok_.kind != Tok::kEnd) {
      if (tok_.kind != Tok::kIdent) fail("expected attribute name");
      if (reserved(tok_.text)) fail("'" + tok_.text + "' is a reserved word");
      Token name = tok_;
      bump();
      expect(Tok::kAssign, "expected '='");
      ExprPtr e = expression();
      if (tok_.kind == Tok::kSemicolon) {
        bump();
      } else if (tok_.kind != Tok::kEnd) {
        fail("expected ';'");
      }
      if (out.contains(name.text)) {
        throw ParseError(name.line, name.column,
                         "duplicate attribute '" + name.text + "'");
      }
      out.insert(std::move(name.text), std::move(e));
    }
    return out;
  }

  ExprPtr standalone_expression() {
    ExprPtr e = expression();
    if (tok_.kind == Tok::kSemicolon) bump();
    if (tok_.kind != Tok::kEnd) fail("unexpected trailing input");
    return e;
  }

  // Number literal with optional sign; used for quantities.
  double quantity() {
    const bool negative = tok_.kind == Tok::kMinus;
    if (negative || tok_.kind == Tok::kPlus) bump();
    if (tok_.kind != Tok::kNumber) fail("expected a number");
    const double v =
        tok_.is_real ? tok_.real : static_cast<double>(tok_.magnitude);
    bump();
    if (tok_.kind != Tok::kEnd) fail("unexpected trailing input");
    return negative ? -v : v;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(tok_.line, tok_.column, message);
  }

  void bump() { tok_ = lex_.next(); }

  void expect(Tok kind, const char* message) {
    if (tok_.kind != kind) fail(message);
    bump();
  }

  ExprPtr expression() { return binary_level(1); }

  static int level_of(Tok t) {
    switch (t) {
      case Tok::kOrOr: return 1;
      case Tok::kAndAnd: return 2;
      case Tok::kLess:
      case Tok::kLessEqual:
      case Tok::kGreater:
      case Tok::kGreaterEqual:
      case Tok::kEqualEqual:
      case Tok::kNotEqual: return 3;
      case Tok::kPlus:
      case Tok::kMinus: return 4;
      case Tok::kStar:
      case Tok::kSlash: return 5;
      default: return 0;
    }
  }

  static BinaryOp op_of(Tok t) {
    switch (t) {
      case Tok::kOrOr: return BinaryOp::kOr;
      case Tok::kAndAnd: return BinaryOp::kAnd;
      case Tok::kLess: return BinaryOp::kLess;
      case Tok::kLessEqual: return BinaryOp::kLessEqual;
      case Tok::kGreater: return BinaryOp::kGreater;
      case Tok::kGreaterEqual: return BinaryOp::kGreaterEqual;
      case Tok::kEqualEqual: return BinaryOp::kEqual;
      case Tok::kNotEqual: return BinaryOp::kNotEqual;
      case Tok::kPlus: return BinaryOp::kAdd;
      case Tok::kMinus: return BinaryOp::kSubtract;
      case Tok::kStar: return BinaryOp::kMultiply;
      default: return BinaryOp::kDivide;
    }
  }

  ExprPtr binary_level(int level) {
    if (level > 5) return unary();
    ExprPtr lhs = binary_level(level + 1);
    while (level_of(tok_.kind) == level) {
      const BinaryOp op = op_of(tok_.kind);
      bump();
      ExprPtr rhs = binary_level(level + 1);
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr unary() {
    if (tok_.kind == Tok::kNot) {
      bump();
      return Expr::unary(UnaryOp::kNot, unary());
    }
    if (tok_.kind == Tok::kMinus) {
      bump();
      if (tok_.kind == Tok::kNumber) return number(/*negate=*/true);
      return Expr::unary(UnaryOp::kNegate, unary());
    }
    return primary();
  }

  ExprPtr number(bool negate) {
    Value v;
    if (tok_.is_real) {
      v = Value::real(negate ? -tok_.real : tok_.real);
    } else if (negate) {
      v = Value::integer(tok_.magnitude == kInt64Max + 1
                             ? std::numeric_limits<std::int64_t>::min()
                             : -static_cast<std::int64_t>(tok_.magnitude));
    } else {
      if (tok_.magnitude > kInt64Max) fail("numeric literal out of range");
      v = Value::integer(static_cast<std::int64_t>(tok_.magnitude));
    }
    bump();
    return Expr::literal(std::move(v));
  }

  ExprPtr primary() {
    switch (tok_.kind) {
      case Tok::kNumber:
        return number(/*negate=*/false);
      case Tok::kString: {
        auto e = Expr::literal(Value::text(std::move(tok_.text)));
        bump();
        return e;
      }
      case Tok::kLParen: {
        bump();
        ExprPtr e = expression();
        expect(Tok::kRParen, "expected ')'");
        return e;
      }
      case Tok::kIdent: {
        if (is_keyword(tok_.text, "true") || is_keyword(tok_.text, "false")) {
          const bool b = is_keyword(tok_.text, "true");
          bump();
          return Expr::literal(Value::boolean(b));
        }
        if (is_keyword(tok_.text, "other")) {
          bump();
          expect(Tok::kDot, "expected '.' after 'other'");
          if (tok_.kind != Tok::kIdent || reserved(tok_.text)) {
            fail("expected attribute name after 'other.'");
          }
          auto e = Expr::ref(std::move(tok_.text), Scope::kOther);
          bump();
          return e;
        }
        auto e = Expr::ref(std::move(tok_.text), Scope::kSelf);
        bump();
        return e;
      }
      case Tok::kEnd:
        fail("unexpected end of input");
      default:
        fail("expected an expression");
    }
  }

  Lexer lex_;
  Token tok_;
};

}  // namespace

ClassAd parse_classad(std::string_view text) { return Parser(text).ad(); }

ExprPtr parse_expression(std::string_view text) {
  return Parser(text).standalone_expression();
}

double parse_quantity(std::string_view text) { return Parser(text).quantity(); }

}  // namespace gridsel::classad

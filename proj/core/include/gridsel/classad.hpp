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

#ifndef GRIDSEL_CLASSAD_HPP
#define GRIDSEL_CLASSAD_HPP

// Classified advertisements: a small expression language for describing
// capabilities and requirements, two-sided matching, and rank ordering.
//
// Ad text is a sequence of `name = expression ;` statements. Expressions use
// C-like precedence (unary > * / > + - > comparisons > && > ||). Numeric
// literals may carry a binary unit suffix (K, M, G, T) and an optional
// `/Sec` rate marker, both folded away at parse time:
//
//   availableSpace = 50G;          // 53687091200
//   MaxRDBandwidth = 75K/Sec;      // 76800
//   requirement = other.reqdSpace < 10G && other.reqdRDBandwidth < 75K/Sec;

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gridsel::classad {

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

struct Undefined {
  friend bool operator==(const Undefined&, const Undefined&) = default;
};

struct Error {
  std::string message;
  friend bool operator==(const Error&, const Error&) = default;
};

/// Result of evaluating an expression. Undefined marks a missing attribute;
/// Error marks a type or arithmetic fault.
class Value {
 public:
  using Storage =
      std::variant<Undefined, Error, bool, std::int64_t, double, std::string>;

  Value() = default;
  static Value integer(std::int64_t v) { return Value(Storage(v)); }
  static Value real(double v) { return Value(Storage(v)); }
  static Value boolean(bool v) { return Value(Storage(v)); }
  static Value text(std::string v) { return Value(Storage(std::move(v))); }
  static Value undefined() { return Value(); }
  static Value error(std::string message) {
    return Value(Storage(Error{std::move(message)}));
  }

  bool is_undefined() const { return std::holds_alternative<Undefined>(v_); }
  bool is_error() const { return std::holds_alternative<Error>(v_); }
  bool is_boolean() const { return std::holds_alternative<bool>(v_); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_number() const { return is_integer() || is_real(); }

  bool as_boolean() const { return std::get<bool>(v_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }
  const std::string& error_message() const { return std::get<Error>(v_).message; }

  /// Integer or Real widened to double; nullopt for anything else.
  std::optional<double> number() const;

  bool is_true() const { return is_boolean() && as_boolean(); }

  const Storage& storage() const { return v_; }

  /// Human-readable form; literals render as they would in ad text.
  std::string to_string() const;

  /// Exact equality of kind and payload (Integer 1 != Real 1.0).
  friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

 private:
  explicit Value(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class UnaryOp { kNot, kNegate };

enum class BinaryOp {
  kOr,
  kAnd,
  kLess,
  kLessEqual,
  kGreater,
  kGreaterEqual,
  kEqual,
  kNotEqual,
  kAdd,
  kSubtract,
  kMultiply,
  kDivide,
};

std::string_view to_string(BinaryOp op);
std::string_view to_string(UnaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Literal {
  Value value;  // Integer, Real, Boolean or Text
};

enum class Scope { kSelf, kOther };

struct AttrRef {
  Scope scope = Scope::kSelf;
  std::string name;
};

struct Unary {
  UnaryOp op;
  ExprPtr operand;
};

struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

/// Immutable expression tree node.
struct Expr {
  std::variant<Literal, AttrRef, Unary, Binary> node;

  static ExprPtr literal(Value v);
  static ExprPtr ref(std::string name, Scope scope = Scope::kSelf);
  static ExprPtr unary(UnaryOp op, ExprPtr operand);
  static ExprPtr binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
};

/// Structural equality; attribute names compare case-insensitively.
bool structurally_equal(const Expr& a, const Expr& b);

/// Canonical text form with minimal parentheses.
std::string to_string(const Expr& e);

// ---------------------------------------------------------------------------
// Ads
// ---------------------------------------------------------------------------

/// Lower-cased attribute key. `requirements` folds onto `requirement` so the
/// two spellings name one attribute.
std::string canonical_name(std::string_view name);

class ClassAd {
 public:
  struct Attribute {
    std::string name;  // as written
    ExprPtr expr;
  };

  ClassAd() = default;

  /// Throws std::invalid_argument on a duplicate (case-insensitive) name.
  void insert(std::string name, ExprPtr expr);
  /// Replaces an existing attribute in place, or appends.
  void set(std::string name, ExprPtr expr);
  bool erase(std::string_view name);

  const Expr* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  const std::vector<Attribute>& attributes() const { return attrs_; }
  std::size_t size() const { return attrs_.size(); }
  bool empty() const { return attrs_.empty(); }

 private:
  std::vector<Attribute> attrs_;
};

/// Same attribute set (case-insensitive names) with structurally equal
/// expressions; order is ignored.
bool structurally_equal(const ClassAd& a, const ClassAd& b);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

ClassAd parse_classad(std::string_view text);
ExprPtr parse_expression(std::string_view text);

/// One `name = expr;` per line.
std::string serialize(const ClassAd& ad);

/// Parses a numeric quantity with optional unit suffix, e.g. "50G",
/// "75K/Sec", "0.008", "53687091200". Throws ParseError.
double parse_quantity(std::string_view text);

// ---------------------------------------------------------------------------
// Evaluation and matching
// ---------------------------------------------------------------------------

/// `x` resolves in self, `other.x` in other; a referenced attribute is
/// evaluated in the scope where it was found.
struct MatchContext {
  const ClassAd& self;
  const ClassAd& other;

  MatchContext swapped() const { return {other, self}; }
};

Value evaluate(const Expr& expr, const MatchContext& ctx);

/// Evaluates attribute `name` of ctx.self; Undefined if absent.
Value evaluate_attribute(std::string_view name, const MatchContext& ctx);

struct MatchResult {
  bool matched = false;
  Value self_requirement;
  Value other_requirement;
  Value rank;
};

/// Both requirements must evaluate to Boolean true. A party without a
/// requirement attribute accepts everything. `rank` is a's rank against b.
MatchResult match_ads(const ClassAd& a, const ClassAd& b);

/// Rank as a sort key: numeric values widen to double, everything else
/// (including NaN) counts as 0.
double rank_key(const Value& rank);

struct RankedCandidate {
  std::size_t index;  // position in the candidate list
  MatchResult match;
  double rank;
};

/// Matched candidates only, best first: descending rank, then hostname
/// (case-insensitive), then volume.
std::vector<RankedCandidate> rank_candidates(const ClassAd& requester,
                                             std::span<const ClassAd> candidates);

/// Names of `other.` attributes reachable from `roots` in `ad`, following
/// self references transitively. Names are returned as first written.
std::vector<std::string> referenced_other_attributes(
    const ClassAd& ad, std::span<const std::string_view> roots);

/// Names of self-scope attributes referenced by `expr`.
std::vector<std::string> referenced_self_attributes(const Expr& expr);

}  // namespace gridsel::classad

#endif  // GRIDSEL_CLASSAD_HPP

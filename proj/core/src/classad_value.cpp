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

#include <algorithm>
#include <cmath>

#include "gridsel/classad.hpp"
#include "gridsel/text.hpp"

namespace gridsel::classad {

namespace {

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string real_literal(double v) {
  std::string s = format_shortest(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

// Binding strength; higher binds tighter.
int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::kOr: return 1;
    case BinaryOp::kAnd: return 2;
    case BinaryOp::kLess:
    case BinaryOp::kLessEqual:
    case BinaryOp::kGreater:
    case BinaryOp::kGreaterEqual:
    case BinaryOp::kEqual:
    case BinaryOp::kNotEqual: return 3;
    case BinaryOp::kAdd:
    case BinaryOp::kSubtract: return 4;
    case BinaryOp::kMultiply:
    case BinaryOp::kDivide: return 5;
  }
  return 0;
}

bool is_nonnegative_number(const Expr& e) {
  const auto* lit = std::get_if<Literal>(&e.node);
  if (lit == nullptr) return false;
  const auto& v = lit->value;
  if (v.is_integer()) return v.as_integer() >= 0;
  if (v.is_real()) return !std::signbit(v.as_real());
  return false;
}

void write(std::string& out, const Expr& e);

void write_operand(std::string& out, const Expr& e, bool parens) {
  if (parens) out += '(';
  write(out, e);
  if (parens) out += ')';
}

void write(std::string& out, const Expr& e) {
  std::visit(
      [&out](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          out += n.value.to_string();
        } else if constexpr (std::is_same_v<T, AttrRef>) {
          if (n.scope == Scope::kOther) out += "other.";
          out += n.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          out += to_string(n.op);
          // "-5" would reparse as a negative literal, so keep the operand
          // grouped when it is a non-negative number.
          const bool parens =
              std::holds_alternative<Binary>(n.operand->node) ||
              (n.op == UnaryOp::kNegate && is_nonnegative_number(*n.operand));
          write_operand(out, *n.operand, parens);
        } else {
          const int p = precedence(n.op);
          const auto child_prec = [](const Expr& c) {
            const auto* b = std::get_if<Binary>(&c.node);
            return b == nullptr ? 100 : precedence(b->op);
          };
          write_operand(out, *n.lhs, child_prec(*n.lhs) < p);
          out += ' ';
          out += to_string(n.op);
          out += ' ';
          write_operand(out, *n.rhs, child_prec(*n.rhs) <= p);
        }
      },
      e.node);
}

// `key` is already canonical.
bool names_match(std::string_view name, std::string_view key) {
  if (iequals(name, key)) return true;
  return key == "requirement" && iequals(name, "requirements");
}

}  // namespace

std::optional<double> Value::number() const {
  if (is_integer()) return static_cast<double>(as_integer());
  if (is_real()) return as_real();
  return std::nullopt;
}

std::string Value::to_string() const {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Undefined>) {
          return "undefined";
        } else if constexpr (std::is_same_v<T, Error>) {
          return "error(" + v.message + ")";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return real_literal(v);
        } else {
          return quote(v);
        }
      },
      v_);
}

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::kOr: return "||";
    case BinaryOp::kAnd: return "&&";
    case BinaryOp::kLess: return "<";
    case BinaryOp::kLessEqual: return "<=";
    case BinaryOp::kGreater: return ">";
    case BinaryOp::kGreaterEqual: return ">=";
    case BinaryOp::kEqual: return "==";
    case BinaryOp::kNotEqual: return "!=";
    case BinaryOp::kAdd: return "+";
    case BinaryOp::kSubtract: return "-";
    case BinaryOp::kMultiply: return "*";
    case BinaryOp::kDivide: return "/";
  }
  return "?";
}

std::string_view to_string(UnaryOp op) {
  return op == UnaryOp::kNot ? "!" : "-";
}

ExprPtr Expr::literal(Value v) {
  return std::make_shared<const Expr>(Expr{Literal{std::move(v)}});
}

ExprPtr Expr::ref(std::string name, Scope scope) {
  return std::make_shared<const Expr>(Expr{AttrRef{scope, std::move(name)}});
}

ExprPtr Expr::unary(UnaryOp op, ExprPtr operand) {
  return std::make_shared<const Expr>(Expr{Unary{op, std::move(operand)}});
}

ExprPtr Expr::binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(
      Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* la = std::get_if<Literal>(&a.node)) {
    return la->value == std::get<Literal>(b.node).value;
  }
  if (const auto* ra = std::get_if<AttrRef>(&a.node)) {
    const auto& rb = std::get<AttrRef>(b.node);
    return ra->scope == rb.scope && iequals(ra->name, rb.name);
  }
  if (const auto* ua = std::get_if<Unary>(&a.node)) {
    const auto& ub = std::get<Unary>(b.node);
    return ua->op == ub.op && structurally_equal(*ua->operand, *ub.operand);
  }
  const auto& ba = std::get<Binary>(a.node);
  const auto& bb = std::get<Binary>(b.node);
  return ba.op == bb.op && structurally_equal(*ba.lhs, *bb.lhs) &&
         structurally_equal(*ba.rhs, *bb.rhs);
}

std::string to_string(const Expr& e) {
  std::string out;
  write(out, e);
  return out;
}

std::string canonical_name(std::string_view name) {
  std::string key = to_lower(name);
  if (key == "requirements") key = "requirement";
  return key;
}

void ClassAd::insert(std::string name, ExprPtr expr) {
  if (contains(name)) {
    throw std::invalid_argument("duplicate attribute '" + name + "'");
  }
  attrs_.push_back({std::move(name), std::move(expr)});
}

void ClassAd::set(std::string name, ExprPtr expr) {
  const std::string key = canonical_name(name);
  for (auto& a : attrs_) {
    if (names_match(a.name, key)) {
      a.name = std::move(name);
      a.expr = std::move(expr);
      return;
    }
  }
  attrs_.push_back({std::move(name), std::move(expr)});
}

bool ClassAd::erase(std::string_view name) {
  const std::string key = canonical_name(name);
  const auto it = std::find_if(attrs_.begin(), attrs_.end(), [&](const auto& a) {
    return names_match(a.name, key);
  });
  if (it == attrs_.end()) return false;
  attrs_.erase(it);
  return true;
}

const Expr* ClassAd::find(std::string_view name) const {
  const std::string key = canonical_name(name);
  for (const auto& a : attrs_) {
    if (names_match(a.name, key)) return a.expr.get();
  }
  return nullptr;
}

bool structurally_equal(const ClassAd& a, const ClassAd& b) {
  if (a.size() != b.size()) return false;
  for (const auto& attr : a.attributes()) {
    const Expr* other = b.find(attr.name);
    if (other == nullptr || !structurally_equal(*attr.expr, *other)) {
      return false;
    }
  }
  return true;
}

std::string serialize(const ClassAd& ad) {
  std::string out;
  for (const auto& a : ad.attributes()) {
    out += a.name;
    out += " = ";
    write(out, *a.expr);
    out += ";\n";
  }
  return out;
}

}  // namespace gridsel::classad

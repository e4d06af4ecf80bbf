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

#include <limits>
#include <map>
#include <optional>

#include "gridsel/classad.hpp"

namespace gridsel::classad {

namespace {

class Evaluator {
 public:
  Value eval(const Expr& e, const MatchContext& ctx) {
    return std::visit([&](const auto& n) { return eval_node(n, ctx); }, e.node);
  }

  // Within one evaluation the (self, other) pair is fixed, so an attribute's
  // value depends only on which ad holds it.
  Value lookup(std::string_view name, const MatchContext& ctx) {
    const Expr* found = ctx.self.find(name);
    if (found == nullptr) return Value::undefined();
    const Key key{&ctx.self, canonical_name(name)};
    if (const auto it = memo_.find(key); it != memo_.end()) {
      if (!it->second) {
        return Value::error("circular reference through '" + std::string(name) + "'");
      }
      return *it->second;
    }
    memo_.emplace(key, std::nullopt);
    Value v = eval(*found, ctx);
    memo_[key] = v;
    return v;
  }

 private:
  Value eval_node(const Literal& n, const MatchContext&) { return n.value; }

  Value eval_node(const AttrRef& n, const MatchContext& ctx) {
    if (n.scope == Scope::kOther) return lookup(n.name, ctx.swapped());
    return lookup(n.name, ctx);
  }

  Value eval_node(const Unary& n, const MatchContext& ctx) {
    Value v = eval(*n.operand, ctx);
    if (v.is_error() || v.is_undefined()) return v;
    if (n.op == UnaryOp::kNot) {
      if (!v.is_boolean()) return Value::error("'!' applied to non-boolean");
      return Value::boolean(!v.as_boolean());
    }
    if (v.is_integer()) {
      if (v.as_integer() == std::numeric_limits<std::int64_t>::min()) {
        return Value::error("integer overflow");
      }
      return Value::integer(-v.as_integer());
    }
    if (v.is_real()) return Value::real(-v.as_real());
    return Value::error("'-' applied to non-number");
  }

  Value eval_node(const Binary& n, const MatchContext& ctx) {
    switch (n.op) {
      case BinaryOp::kAnd: return logical(n, ctx, /*dominant=*/false);
      case BinaryOp::kOr: return logical(n, ctx, /*dominant=*/true);
      default: break;
    }
    Value a = eval(*n.lhs, ctx);
    Value b = eval(*n.rhs, ctx);
    if (a.is_error()) return a;
    if (b.is_error()) return b;
    if (a.is_undefined() || b.is_undefined()) return Value::undefined();
    switch (n.op) {
      case BinaryOp::kAdd:
      case BinaryOp::kSubtract:
      case BinaryOp::kMultiply:
      case BinaryOp::kDivide: return arithmetic(n.op, a, b);
      default: return compare(n.op, a, b);
    }
  }

  // `dominant` is the operand value that decides the result on its own:
  // false for &&, true for ||.
  Value logical(const Binary& n, const MatchContext& ctx, bool dominant) {
    const char* name = dominant ? "'||'" : "'&&'";
    Value a = eval(*n.lhs, ctx);
    if (a.is_error()) return a;
    if (!a.is_undefined() && !a.is_boolean()) {
      return Value::error(std::string(name) + " applied to non-boolean");
    }
    if (a.is_boolean() && a.as_boolean() == dominant) return a;
    Value b = eval(*n.rhs, ctx);
    if (b.is_error()) return b;
    if (!b.is_undefined() && !b.is_boolean()) {
      return Value::error(std::string(name) + " applied to non-boolean");
    }
    if (b.is_boolean() && b.as_boolean() == dominant) return b;
    if (a.is_undefined() || b.is_undefined()) return Value::undefined();
    return Value::boolean(!dominant);
  }

  static Value arithmetic(BinaryOp op, const Value& a, const Value& b) {
    if (!a.is_number() || !b.is_number()) {
      return Value::error("arithmetic on non-number");
    }
    if (a.is_integer() && b.is_integer()) {
      const std::int64_t x = a.as_integer();
      const std::int64_t y = b.as_integer();
      std::int64_t r = 0;
      bool overflow = false;
      switch (op) {
        case BinaryOp::kAdd: overflow = __builtin_add_overflow(x, y, &r); break;
        case BinaryOp::kSubtract: overflow = __builtin_sub_overflow(x, y, &r); break;
        case BinaryOp::kMultiply: overflow = __builtin_mul_overflow(x, y, &r); break;
        default:
          if (y == 0) return Value::error("division by zero");
          if (x == std::numeric_limits<std::int64_t>::min() && y == -1) {
            overflow = true;
          } else {
            r = x / y;
          }
      }
      if (overflow) return Value::error("integer overflow");
      return Value::integer(r);
    }
    const double x = *a.number();
    const double y = *b.number();
    switch (op) {
      case BinaryOp::kAdd: return Value::real(x + y);
      case BinaryOp::kSubtract: return Value::real(x - y);
      case BinaryOp::kMultiply: return Value::real(x * y);
      default:
        if (y == 0) return Value::error("division by zero");
        return Value::real(x / y);
    }
  }

  static Value compare(BinaryOp op, const Value& a, const Value& b) {
    if (a.is_number() && b.is_number()) {
      if (a.is_integer() && b.is_integer()) {
        return Value::boolean(ordered(op, a.as_integer(), b.as_integer()));
      }
      return Value::boolean(ordered(op, *a.number(), *b.number()));
    }
    const bool equality = op == BinaryOp::kEqual || op == BinaryOp::kNotEqual;
    if (a.is_text() && b.is_text()) {
      if (!equality) return Value::error("ordering comparison on text");
      return Value::boolean((a.as_text() == b.as_text()) == (op == BinaryOp::kEqual));
    }
    if (a.is_boolean() && b.is_boolean()) {
      if (!equality) return Value::error("ordering comparison on booleans");
      return Value::boolean((a.as_boolean() == b.as_boolean()) ==
                            (op == BinaryOp::kEqual));
    }
    return Value::error("comparison of mismatched types");
  }

  template <typename T>
  static bool ordered(BinaryOp op, T x, T y) {
    switch (op) {
      case BinaryOp::kLess: return x < y;
      case BinaryOp::kLessEqual: return x <= y;
      case BinaryOp::kGreater: return x > y;
      case BinaryOp::kGreaterEqual: return x >= y;
      case BinaryOp::kEqual: return x == y;
      default: return x != y;
    }
  }

  using Key = std::pair<const ClassAd*, std::string>;
  // nullopt marks an attribute whose evaluation is in progress.
  std::map<Key, std::optional<Value>> memo_;
};

}  // namespace

Value evaluate(const Expr& expr, const MatchContext& ctx) {
  return Evaluator().eval(expr, ctx);
}

Value evaluate_attribute(std::string_view name, const MatchContext& ctx) {
  return Evaluator().lookup(name, ctx);
}

}  // namespace gridsel::classad

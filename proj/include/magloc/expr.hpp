#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "magloc/grid.hpp"

namespace magloc {

struct parse_error : config_error {
  size_t position;
  parse_error(const std::string& msg, size_t pos)
      : config_error(msg + " at position " + std::to_string(pos)),
        position(pos) {}
};

// Arithmetic expressions over x and y: numbers, pi, unary minus,
// + - * / ^ (right-associative), sin cos exp sqrt abs.
class FieldExpression {
 public:
  enum class Op {
    Num, VarX, VarY, Pi, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt, Abs
  };

  struct Node {
    Op op;
    double value = 0.0;  // Num only
    std::unique_ptr<Node> a, b;
  };

  FieldExpression() : root_(mk(Op::Num)) {}
  explicit FieldExpression(std::unique_ptr<Node> r) : root_(std::move(r)) {}
  FieldExpression(const FieldExpression& o) : root_(clone(o.root_.get())) {}
  FieldExpression(FieldExpression&&) noexcept = default;
  FieldExpression& operator=(const FieldExpression& o) {
    root_ = clone(o.root_.get());
    return *this;
  }
  FieldExpression& operator=(FieldExpression&&) noexcept = default;

  double eval(double x, double y) const { return eval(root_.get(), x, y); }

  std::string to_string() const { return print(root_.get(), 0); }

  bool same_tree(const FieldExpression& o) const {
    return same(root_.get(), o.root_.get());
  }

  const Node* root() const { return root_.get(); }

  static std::unique_ptr<Node> mk(Op op, std::unique_ptr<Node> a = nullptr,
                                  std::unique_ptr<Node> b = nullptr) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  static std::unique_ptr<Node> num(double v) {
    auto n = mk(Op::Num);
    n->value = v;
    return n;
  }

 private:
  std::unique_ptr<Node> root_;

  static std::unique_ptr<Node> clone(const Node* n) {
    if (!n) return nullptr;
    auto c = std::make_unique<Node>();
    c->op = n->op;
    c->value = n->value;
    c->a = clone(n->a.get());
    c->b = clone(n->b.get());
    return c;
  }

  static bool same(const Node* p, const Node* q) {
    if (!p || !q) return p == q;
    if (p->op != q->op) return false;
    if (p->op == Op::Num && !(p->value == q->value)) return false;
    return same(p->a.get(), q->a.get()) && same(p->b.get(), q->b.get());
  }

  static double eval(const Node* n, double x, double y) {
    switch (n->op) {
      case Op::Num: return n->value;
      case Op::VarX: return x;
      case Op::VarY: return y;
      case Op::Pi: return M_PI;
      case Op::Neg: return -eval(n->a.get(), x, y);
      case Op::Add: return eval(n->a.get(), x, y) + eval(n->b.get(), x, y);
      case Op::Sub: return eval(n->a.get(), x, y) - eval(n->b.get(), x, y);
      case Op::Mul: return eval(n->a.get(), x, y) * eval(n->b.get(), x, y);
      case Op::Div: return eval(n->a.get(), x, y) / eval(n->b.get(), x, y);
      case Op::Pow: return std::pow(eval(n->a.get(), x, y), eval(n->b.get(), x, y));
      case Op::Sin: return std::sin(eval(n->a.get(), x, y));
      case Op::Cos: return std::cos(eval(n->a.get(), x, y));
      case Op::Exp: return std::exp(eval(n->a.get(), x, y));
      case Op::Sqrt: return std::sqrt(eval(n->a.get(), x, y));
      case Op::Abs: return std::abs(eval(n->a.get(), x, y));
    }
    return 0.0;
  }

  // Precedence: 1 add, 2 mul, 3 unary minus, 4 pow, 5 atom.
  static int prec(Op op) {
    switch (op) {
      case Op::Add: case Op::Sub: return 1;
      case Op::Mul: case Op::Div: return 2;
      case Op::Neg: return 3;
      case Op::Pow: return 4;
      default: return 5;
    }
  }

  static std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

  static std::string wrap(const Node* n, int minprec) {
    std::string s = print(n, 0);
    if (prec(n->op) < minprec) return "(" + s + ")";
    return s;
  }

  static std::string print(const Node* n, int) {
    switch (n->op) {
      case Op::Num:
        if (n->value < 0) return "(" + fmt(n->value) + ")";
        return fmt(n->value);
      case Op::VarX: return "x";
      case Op::VarY: return "y";
      case Op::Pi: return "pi";
      case Op::Neg: return "-" + wrap(n->a.get(), 5);
      case Op::Add: return wrap(n->a.get(), 1) + "+" + wrap(n->b.get(), 2);
      case Op::Sub: return wrap(n->a.get(), 1) + "-" + wrap(n->b.get(), 2);
      case Op::Mul: return wrap(n->a.get(), 2) + "*" + wrap(n->b.get(), 3);
      case Op::Div: return wrap(n->a.get(), 2) + "/" + wrap(n->b.get(), 3);
      case Op::Pow: return wrap(n->a.get(), 5) + "^" + wrap(n->b.get(), 4);
      case Op::Sin: return "sin(" + print(n->a.get(), 0) + ")";
      case Op::Cos: return "cos(" + print(n->a.get(), 0) + ")";
      case Op::Exp: return "exp(" + print(n->a.get(), 0) + ")";
      case Op::Sqrt: return "sqrt(" + print(n->a.get(), 0) + ")";
      case Op::Abs: return "abs(" + print(n->a.get(), 0) + ")";
    }
    return "";
  }
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : s_(normalize(text)) {}

  std::unique_ptr<FieldExpression::Node> parse() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) throw parse_error("unexpected character", pos_);
    return e;
  }

 private:
  using Node = FieldExpression::Node;
  using Op = FieldExpression::Op;
  std::string s_;
  size_t pos_ = 0;

  // UTF-8 minus sign folds to ASCII '-'.
  static std::string normalize(const std::string& t) {
    std::string out;
    for (size_t i = 0; i < t.size();) {
      if (i + 2 < t.size() && (unsigned char)t[i] == 0xE2 &&
          (unsigned char)t[i + 1] == 0x88 && (unsigned char)t[i + 2] == 0x92) {
        out += '-';
        i += 3;
      } else {
        out += t[i++];
      }
    }
    return out;
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::unique_ptr<Node> parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = FieldExpression::mk(Op::Add, std::move(lhs), parse_term());
      else if (accept('-')) lhs = FieldExpression::mk(Op::Sub, std::move(lhs), parse_term());
      else return lhs;
    }
  }

  std::unique_ptr<Node> parse_term() {
    auto lhs = parse_factor();
    for (;;) {
      if (accept('*')) lhs = FieldExpression::mk(Op::Mul, std::move(lhs), parse_factor());
      else if (accept('/')) lhs = FieldExpression::mk(Op::Div, std::move(lhs), parse_factor());
      else return lhs;
    }
  }

  std::unique_ptr<Node> parse_factor() {
    auto base = parse_base();
    if (accept('^'))
      return FieldExpression::mk(Op::Pow, std::move(base), parse_factor());
    return base;
  }

  std::unique_ptr<Node> parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) throw parse_error("unexpected end of expression", pos_);
    char c = s_[pos_];
    if (c == '-') {
      ++pos_;
      return FieldExpression::mk(Op::Neg, parse_base());
    }
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      if (!accept(')')) throw parse_error("expected ')'", pos_);
      return e;
    }
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
    if (std::isalpha((unsigned char)c)) return parse_ident();
    throw parse_error(std::string("unexpected character '") + c + "'", pos_);
  }

  std::unique_ptr<Node> parse_number() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit((unsigned char)s_[pos_]) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t mark = pos_++;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) {
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
      } else {
        pos_ = mark;  // 'e' belonged to something else
      }
    }
    try {
      return FieldExpression::num(std::stod(s_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw parse_error("malformed number", start);
    }
  }

  std::unique_ptr<Node> parse_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha((unsigned char)s_[pos_])) ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    if (id == "x") return FieldExpression::mk(Op::VarX);
    if (id == "y") return FieldExpression::mk(Op::VarY);
    if (id == "pi") return FieldExpression::mk(Op::Pi);
    Op op;
    if (id == "sin") op = Op::Sin;
    else if (id == "cos") op = Op::Cos;
    else if (id == "exp") op = Op::Exp;
    else if (id == "sqrt") op = Op::Sqrt;
    else if (id == "abs") op = Op::Abs;
    else throw parse_error("unknown identifier '" + id + "'", start);
    if (!accept('(')) throw parse_error("expected '(' after " + id, pos_);
    auto arg = parse_expr();
    if (!accept(')')) throw parse_error("expected ')'", pos_);
    return FieldExpression::mk(op, std::move(arg));
  }
};

}  // namespace detail

inline FieldExpression parse_expression(const std::string& text) {
  detail::ExprParser p(text);
  return FieldExpression(p.parse());
}

}  // namespace magloc

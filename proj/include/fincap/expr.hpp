#pragma once

// Closed-form scalar functions of the base coordinates x1..xn.
//
// The catalog is deliberately closed: numbers, the variables x1..x9, pi,
// + - * /, integer powers (^k), and sin, cos, exp, log, sqrt. Every member
// is smooth on its domain, so evaluation through Dual numbers is total and
// exact to rounding.

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fincap/dual.hpp"

namespace fincap {

class Expr {
 public:
  enum class Op { constant, variable, add, sub, mul, div, neg, ipow, sin, cos, exp, log, sqrt };

  Expr();  // the constant 0

  static Expr parse(std::string_view text);
  static Expr constant(double c);
  static Expr variable(int index);  // 0-based: variable(0) is x1

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);

  template <class T>
  T eval(std::span<const T> x) const {
    return eval_node<T>(root_, x);
  }
  double operator()(std::span<const double> x) const { return eval<double>(x); }

  bool is_constant() const;
  // Largest variable index referenced, or -1.
  int max_variable() const;
  const std::string& text() const { return text_; }

 private:
  struct Node {
    Op op;
    double value = 0.0;  // constant value
    int index = 0;       // variable index or integer exponent
    int lhs = -1;
    int rhs = -1;
  };

  Expr(std::shared_ptr<const std::vector<Node>> nodes, int root, std::string text);
  static Expr combine(Op op, const Expr& a, const Expr& b, const char* symbol);

  template <class T>
  T eval_node(int id, std::span<const T> x) const {
    using std::cos;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sqrt;
    const Node& n = (*nodes_)[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::constant: return T(n.value);
      case Op::variable: return x[static_cast<std::size_t>(n.index)];
      case Op::add: return eval_node<T>(n.lhs, x) + eval_node<T>(n.rhs, x);
      case Op::sub: return eval_node<T>(n.lhs, x) - eval_node<T>(n.rhs, x);
      case Op::mul: return eval_node<T>(n.lhs, x) * eval_node<T>(n.rhs, x);
      case Op::div: return eval_node<T>(n.lhs, x) / eval_node<T>(n.rhs, x);
      case Op::neg: return -eval_node<T>(n.lhs, x);
      case Op::ipow: return int_pow(eval_node<T>(n.lhs, x), n.index);
      case Op::sin: return sin(eval_node<T>(n.lhs, x));
      case Op::cos: return cos(eval_node<T>(n.lhs, x));
      case Op::exp: return exp(eval_node<T>(n.lhs, x));
      case Op::log: return log(eval_node<T>(n.lhs, x));
      case Op::sqrt: return sqrt(eval_node<T>(n.lhs, x));
    }
    return T(0.0);
  }

  friend class ExprParser;

  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = 0;
  std::string text_;
};

}  // namespace fincap

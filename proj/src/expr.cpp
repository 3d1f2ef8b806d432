#include "fincap/expr.hpp"

#include <cctype>
#include <charconv>
#include <numbers>

#include "fincap/errors.hpp"

namespace fincap {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr run() {
    int root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    auto shared = std::make_shared<const std::vector<Expr::Node>>(std::move(nodes_));
    return Expr(std::move(shared), root, std::string(text_));
  }

 private:
  using Op = Expr::Op;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("expression '" + std::string(text_) + "': " + why + " at offset " +
                      std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int push(Expr::Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = push({Op::add, 0.0, 0, lhs, parse_product()});
      } else if (accept('-')) {
        lhs = push({Op::sub, 0.0, 0, lhs, parse_product()});
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = push({Op::mul, 0.0, 0, lhs, parse_unary()});
      } else if (accept('/')) {
        lhs = push({Op::div, 0.0, 0, lhs, parse_unary()});
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return push({Op::neg, 0.0, 0, parse_unary(), -1});
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (!accept('^')) return base;
    skip_space();
    bool negative = false;
    if (accept('-')) negative = true;
    skip_space();
    int exponent = 0;
    auto begin = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), exponent);
    if (ec != std::errc() || ptr == begin) fail("exponent must be an integer literal");
    pos_ += static_cast<std::size_t>(ptr - begin);
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      fail("exponent must be an integer literal");
    return push({Op::ipow, 0.0, negative ? -exponent : exponent, base, -1});
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view word = text_.substr(start, pos_ - start);
      if (word.size() == 2 && word[0] == 'x' && word[1] >= '1' && word[1] <= '9')
        return push({Op::variable, 0.0, word[1] - '1', -1, -1});
      if (word == "pi") return push({Op::constant, std::numbers::pi, 0, -1, -1});
      Op fn;
      if (word == "sin") fn = Op::sin;
      else if (word == "cos") fn = Op::cos;
      else if (word == "exp") fn = Op::exp;
      else if (word == "log") fn = Op::log;
      else if (word == "sqrt") fn = Op::sqrt;
      else fail("unknown name '" + std::string(word) + "' (catalog: x1..x9, pi, sin, cos, exp, log, sqrt)");
      if (!accept('(')) fail("expected '(' after " + std::string(word));
      int arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return push({fn, 0.0, 0, arg, -1});
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      bool exp_sign = (c == '+' || c == '-') && pos_ > start &&
                      (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' || exp_sign)
        ++pos_;
      else
        break;
    }
    double value = 0.0;
    auto first = text_.data() + start;
    auto last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail("malformed number");
    return push({Op::constant, value, 0, -1, -1});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Expr::Node> nodes_;
};

Expr::Expr() : Expr(constant(0.0)) {}

Expr::Expr(std::shared_ptr<const std::vector<Node>> nodes, int root, std::string text)
    : nodes_(std::move(nodes)), root_(root), text_(std::move(text)) {}

Expr Expr::parse(std::string_view text) { return ExprParser(text).run(); }

Expr Expr::constant(double c) {
  auto nodes = std::make_shared<const std::vector<Node>>(std::vector<Node>{{Op::constant, c, 0, -1, -1}});
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, c);
  return Expr(std::move(nodes), 0, std::string(buf, ptr));
}

Expr Expr::variable(int index) {
  auto nodes =
      std::make_shared<const std::vector<Node>>(std::vector<Node>{{Op::variable, 0.0, index, -1, -1}});
  return Expr(std::move(nodes), 0, "x" + std::to_string(index + 1));
}

Expr Expr::combine(Op op, const Expr& a, const Expr& b, const char* symbol) {
  std::vector<Node> nodes(a.nodes_->begin(), a.nodes_->end());
  int offset = static_cast<int>(nodes.size());
  for (Node n : *b.nodes_) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    nodes.push_back(n);
  }
  nodes.push_back({op, 0.0, 0, a.root_, b.root_ + offset});
  int root = static_cast<int>(nodes.size()) - 1;
  return Expr(std::make_shared<const std::vector<Node>>(std::move(nodes)), root,
              "(" + a.text_ + ")" + symbol + "(" + b.text_ + ")");
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::combine(Expr::Op::add, a, b, "+"); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::combine(Expr::Op::sub, a, b, "-"); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::combine(Expr::Op::mul, a, b, "*"); }

bool Expr::is_constant() const { return max_variable() < 0; }

int Expr::max_variable() const {
  int best = -1;
  for (const Node& n : *nodes_)
    if (n.op == Op::variable && n.index > best) best = n.index;
  return best;
}

}  // namespace fincap

#include "contlim/formula.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace contlim {

struct Formula::Node {
  enum class Op { constant, variable, period, neg, add, sub, mul, div, pow, call };
  Op op = Op::constant;
  double value = 0.0;
  int index = 0;
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(std::span<const double> x, double period) const {
    switch (op) {
      case Op::constant: return value;
      case Op::variable: return index < static_cast<int>(x.size()) ? x[index] : 0.0;
      case Op::period: return period;
      case Op::neg: return -lhs->eval(x, period);
      case Op::add: return lhs->eval(x, period) + rhs->eval(x, period);
      case Op::sub: return lhs->eval(x, period) - rhs->eval(x, period);
      case Op::mul: return lhs->eval(x, period) * rhs->eval(x, period);
      case Op::div: return lhs->eval(x, period) / rhs->eval(x, period);
      case Op::pow: return std::pow(lhs->eval(x, period), rhs->eval(x, period));
      case Op::call: return fn(lhs->eval(x, period));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Formula::Node>;
using Op = Formula::Node::Op;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Formula::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

double fabs_(double v) { return std::fabs(v); }
double sin_(double v) { return std::sin(v); }
double cos_(double v) { return std::cos(v); }
double tan_(double v) { return std::tan(v); }
double exp_(double v) { return std::exp(v); }
double log_(double v) { return std::log(v); }
double sqrt_(double v) { return std::sqrt(v); }
double tanh_(double v) { return std::tanh(v); }

// Recursive descent: expr := term (('+'|'-') term)*, term := unary (('*'|'/') unary)*,
// unary := '-' unary | power, power := atom ('^' unary)?
class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("formula \"" + s_ + "\": " + what + " at offset " +
                                std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (accept('+')) n = make(Op::add, n, term());
      else if (accept('-')) n = make(Op::sub, n, term());
      else return n;
    }
  }

  NodePtr term() {
    auto n = unary();
    for (;;) {
      if (accept('*')) n = make(Op::mul, n, unary());
      else if (accept('/')) n = make(Op::div, n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto n = atom();
    if (accept('^')) return make(Op::pow, n, unary());
    return n;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      auto n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Formula::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Formula::Node>();
      if (name == "pi") {
        n->value = std::numbers::pi;
        return n;
      }
      if (name == "L") {
        n->op = Op::period;
        return n;
      }
      if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '3') {
        n->op = Op::variable;
        n->index = name[1] - '1';
        return n;
      }
      static const std::pair<const char*, double (*)(double)> functions[] = {
          {"sin", sin_}, {"cos", cos_},   {"tan", tan_},   {"exp", exp_},
          {"log", log_}, {"sqrt", sqrt_}, {"abs", fabs_}, {"tanh", tanh_}};
      for (const auto& [fname, fn] : functions) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          n->op = Op::call;
          n->fn = fn;
          n->lhs = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Formula::Formula() : text_("0"), root_(std::make_shared<Node>()) {}

Formula::Formula(const std::string& text) : text_(text), root_(Parser(text).parse()) {}

double Formula::operator()(std::span<const double> x, double period) const {
  return root_->eval(x, period);
}

}  // namespace contlim

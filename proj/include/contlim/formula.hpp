#pragma once

#include <memory>
#include <span>
#include <string>

namespace contlim {

/// Small arithmetic expression over the variables x1, x2, x3 and the box
/// period L. Supports + - * / ^, unary minus, parentheses, the constant pi
/// and the functions sin, cos, tan, exp, log, sqrt, abs, tanh.
///
/// Used for coefficient and potential formulas in experiment config files,
/// e.g. "2+sin(2*pi*x1/L)".
class Formula {
 public:
  Formula();  // the constant 0
  explicit Formula(const std::string& text);

  /// Evaluates at the point x (missing coordinates read as 0).
  double operator()(std::span<const double> x, double period) const;

  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace contlim

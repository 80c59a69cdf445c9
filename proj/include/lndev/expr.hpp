#pragma once

#include <span>
#include <string>
#include <vector>

#include "lndev/field.hpp"
#include "lndev/jet.hpp"

namespace lndev {

/// Arithmetic expression over named coordinates.
///
/// Grammar: numbers, coordinate names, the constants `pi` and `e`,
/// `+ - * /`, `^` (right-associative, binds tighter than unary minus),
/// parentheses and the functions sin cos tan exp log sqrt.
class Expr {
 public:
  Expr() = default;
  /// Throws ParseError (line 0, field = `field`) on malformed text.
  static Expr parse(const std::string& text, const std::vector<std::string>& variables,
                    const std::string& field = "expression");

  const std::string& text() const { return text_; }
  bool is_constant() const;

  double eval(std::span<const double> x) const;
  Jet eval(std::span<const Jet> x) const;

 private:
  struct Node {
    enum Kind { number, variable, add, sub, mul, div, pow, neg, call } kind = number;
    double value = 0.0;
    int var = -1;
    int fn = -1;
    int a = -1;
    int b = -1;
  };
  template <class S>
  S eval_node(int i, std::span<const S> x) const;

  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;
  friend class ExprParser;
};

/// Field whose components are the given expressions.
Field expression_field(const std::vector<Expr>& components, int dim);

}  // namespace lndev

#include "lndev/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "lndev/error.hpp"

namespace lndev {

namespace {

const char* const kFunctions[] = {"sin", "cos", "tan", "exp", "log", "sqrt"};

template <class S>
S apply_fn(int fn, const S& v) {
  using std::cos, std::exp, std::log, std::sin, std::sqrt, std::tan;
  switch (fn) {
    case 0: return sin(v);
    case 1: return cos(v);
    case 2: return tan(v);
    case 3: return exp(v);
    case 4: return log(v);
    default: return sqrt(v);
  }
}

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, const std::vector<std::string>& vars, const std::string& field, Expr& out)
      : s_(text), vars_(vars), field_(field), out_(out) {}

  void run() {
    out_.root_ = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
  }

 private:
  using Node = Expr::Node;

  [[noreturn]] void fail(const std::string& why) {
    throw ParseError({{0, field_, why + " at column " + std::to_string(pos_ + 1) + " in '" + s_ + "'"}});
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  int push(Node n) {
    out_.nodes_.push_back(n);
    return static_cast<int>(out_.nodes_.size()) - 1;
  }
  int binary(Node::Kind k, int a, int b) {
    Node n;
    n.kind = k;
    n.a = a;
    n.b = b;
    return push(n);
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (eat('+')) lhs = binary(Node::add, lhs, term());
      else if (eat('-')) lhs = binary(Node::sub, lhs, term());
      else return lhs;
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (eat('*')) lhs = binary(Node::mul, lhs, unary());
      else if (eat('/')) lhs = binary(Node::div, lhs, unary());
      else return lhs;
    }
  }
  int unary() {
    if (eat('-')) {
      Node n;
      n.kind = Node::neg;
      n.a = unary();
      return push(n);
    }
    if (eat('+')) return unary();
    return power();
  }
  int power() {
    const int base = primary();
    if (eat('^')) return binary(Node::pow, base, unary());
    return base;
  }
  int primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const int e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      Node n;
      const char* begin = s_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(begin, s_.data() + s_.size(), n.value);
      if (ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(ptr - begin);
      return push(n);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      for (std::size_t v = 0; v < vars_.size(); ++v) {
        if (vars_[v] == id) {
          Node n;
          n.kind = Node::variable;
          n.var = static_cast<int>(v);
          return push(n);
        }
      }
      for (int f = 0; f < 6; ++f) {
        if (id == kFunctions[f]) {
          if (!eat('(')) fail("function '" + id + "' needs an argument in parentheses");
          Node n;
          n.kind = Node::call;
          n.fn = f;
          n.a = expr();
          if (!eat(')')) fail("missing ')'");
          return push(n);
        }
      }
      Node n;
      if (id == "pi") n.value = std::numbers::pi;
      else if (id == "e") n.value = std::numbers::e;
      else fail("unknown name '" + id + "'");
      return push(n);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  const std::string& field_;
  Expr& out_;
  std::size_t pos_ = 0;
};

Expr Expr::parse(const std::string& text, const std::vector<std::string>& variables, const std::string& field) {
  Expr e;
  e.text_ = text;
  ExprParser(text, variables, field, e).run();
  return e;
}

bool Expr::is_constant() const {
  for (const auto& n : nodes_) {
    if (n.kind == Node::variable) return false;
  }
  return true;
}

template <class S>
S Expr::eval_node(int i, std::span<const S> x) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case Node::number: return S(n.value);
    case Node::variable: return x[static_cast<std::size_t>(n.var)];
    case Node::add: return eval_node(n.a, x) + eval_node(n.b, x);
    case Node::sub: return eval_node(n.a, x) - eval_node(n.b, x);
    case Node::mul: return eval_node(n.a, x) * eval_node(n.b, x);
    case Node::div: return eval_node(n.a, x) / eval_node(n.b, x);
    case Node::neg: return -eval_node(n.a, x);
    case Node::call: return apply_fn(n.fn, eval_node(n.a, x));
    case Node::pow: {
      const Node& ex = nodes_[static_cast<std::size_t>(n.b)];
      using std::pow;
      if (ex.kind == Node::number) {
        const double p = ex.value;
        // integer powers by repeated products keep negative bases valid
        if (p == std::round(p) && std::abs(p) <= 16) {
          const S base = eval_node(n.a, x);
          S r(1.0);
          for (int k = 0; k < static_cast<int>(std::abs(p)); ++k) r = r * base;
          return p < 0 ? S(1.0) / r : r;
        }
        return pow(eval_node(n.a, x), p);
      }
      return pow(eval_node(n.a, x), eval_node(n.b, x));
    }
  }
  return S(0.0);
}

double Expr::eval(std::span<const double> x) const {
  if (root_ < 0) throw ContractError("empty expression");
  return eval_node<double>(root_, x);
}

Jet Expr::eval(std::span<const Jet> x) const {
  if (root_ < 0) throw ContractError("empty expression");
  return eval_node<Jet>(root_, x);
}

Field expression_field(const std::vector<Expr>& components, int dim) {
  return Field::generic(dim, static_cast<int>(components.size()), [components](const auto& x, auto& out) {
    for (std::size_t c = 0; c < components.size(); ++c) out[c] = components[c].eval(x);
  });
}

}  // namespace lndev
